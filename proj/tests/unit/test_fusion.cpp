#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "fil/common/errors.hpp"
#include "fil/common/rng.hpp"
#include "fil/fusion/guide.hpp"
#include "fil/nn/serialize.hpp"
#include "fil/nn/train.hpp"
#include "fil/sim/render.hpp"

using namespace fil;
using namespace fil::fusion;

namespace {

// Model whose output is 0.69*tanh(b) for every input.
nn::PolicyModel constant_model(double value, Modality m, std::uint32_t version = 1) {
  auto model = nn::init_model(nn::default_policy_spec(), 3, m);
  for (auto& l : model.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0f);
    std::fill(l.biases.begin(), l.biases.end(), 0.0f);
  }
  const double t = std::clamp(value / nn::kSteeringLimit, -1.0, 1.0);
  model.layers.back().biases[0] = static_cast<float>(std::abs(t) == 1.0 ? 20.0 * t : std::atanh(t));
  model.version = version;
  return model;
}

const SceneBank& small_bank() {
  static const SceneBank bank = build_scene_bank(std::vector<std::int64_t>{21, 22}, 20);
  return bank;
}

double output_on(const nn::PolicyModel& m, const SceneRecord& s) {
  return nn::forward(m, s.view(m.modality).values());
}

}  // namespace

TEST_CASE("median and mean aggregation") {
  const std::vector<double> odd = {0.2, -0.1, 0.5};
  CHECK(median(odd) == 0.2);
  const std::vector<double> single = {0.37};
  CHECK(median(single) == 0.37);
  const std::vector<double> even = {0.0, 0.1, 0.3, 0.69};
  CHECK(median(even) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(mean(odd) == doctest::Approx(0.2));
  CHECK(aggregate(Aggregator::mean, even) == doctest::Approx(0.2725));
  CHECK_THROWS_AS(median(std::vector<double>{}), ArgumentError);
  CHECK(parse_aggregator("median") == Aggregator::median);
  CHECK(parse_aggregator("mean") == Aggregator::mean);
  CHECK_FALSE(parse_aggregator("trimmed").has_value());
  CHECK(to_string(Aggregator::mean) == "mean");
}

TEST_CASE("median properties on random vectors") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(9);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-0.69, 0.69);
    const double med = median(v);

    auto shuffled = v;
    for (std::size_t i = n; i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
    CHECK(median(shuffled) == med);

    CHECK(med >= *std::min_element(v.begin(), v.end()));
    CHECK(med <= *std::max_element(v.begin(), v.end()));

    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    if (n % 2 == 1) CHECK(med == sorted[n / 2]);

    auto raised = v;
    raised[rng.below(n)] += rng.uniform(0.0, 0.5);
    CHECK(median(raised) >= med);
  }
}

TEST_CASE("scene bank construction") {
  const auto& bank = small_bank();
  CHECK(bank.size() == 40);
  CHECK_NOTHROW(bank.validate());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    CHECK(bank.records[i].scene_id == i);
    CHECK(bank.records[i].views.size() == 3);
  }
  CHECK(build_scene_bank(std::vector<std::int64_t>{21, 22}, 20) == bank);
  CHECK_THROWS_AS(build_scene_bank(std::vector<std::int64_t>{}, 5), ArgumentError);
  CHECK_THROWS_AS(build_scene_bank(std::vector<std::int64_t>{1}, 0), ArgumentError);

  const auto big = build_scene_bank(std::vector<std::int64_t>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 100);
  CHECK(big.size() == 1000);
  CHECK_NOTHROW(big.validate());
}

TEST_CASE("scene views match independently collected demonstrations") {
  // Scenes are expert rollout states: the demonstration collector replays the
  // same rollout, so frame `step` must carry identical views and the expert
  // steering must match the replayed label.
  const auto& bank = small_bank();
  const auto steering = expert_steering(bank);
  for (auto m : kAllModalities) {
    const auto demos = imitation::collect_demonstrations(std::vector<std::int64_t>{21}, m, 100);
    for (const auto& rec : bank.records) {
      if (rec.origin->seed != 21) continue;
      const auto& d = demos.records.at(rec.origin->step);
      CHECK(rec.view(m) == d.obs);
      CHECK(static_cast<float>(steering[rec.scene_id]) == d.steering);
    }
  }
}

TEST_CASE("bank validation catches broken records") {
  auto bank = small_bank();
  SUBCASE("duplicate ids") {
    bank.records[1].scene_id = bank.records[0].scene_id;
    CHECK_THROWS_AS(bank.validate(), DataError);
  }
  SUBCASE("missing view") {
    bank.records[3].views.erase(Modality::semantic);
    CHECK_THROWS_AS(bank.validate(), DataError);
  }
  SUBCASE("views of different scenes") {
    bank.records[5].views[Modality::distance] = bank.records[30].views[Modality::distance];
    if (sim::blocked_mask(bank.records[5].view(Modality::distance)) !=
        sim::blocked_mask(bank.records[5].view(Modality::occupancy)))
      CHECK_THROWS_AS(bank.validate(), DataError);
  }
}

TEST_CASE("FILS round trip and corruption") {
  const auto& bank = small_bank();
  const auto bytes = encode_scene_bank(bank);
  CHECK(bytes.size() == 10 + bank.size() * (4 + 3 * 256 * 4));
  const auto back = decode_scene_bank(bytes);
  REQUIRE(back.size() == bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    CHECK(back.records[i].scene_id == bank.records[i].scene_id);
    CHECK(back.records[i].views == bank.records[i].views);
    CHECK_FALSE(back.records[i].origin.has_value());
  }

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_scene_bank(bad), FormatError);
  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  CHECK_THROWS_AS(decode_scene_bank(truncated), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_scene_bank(trailing), FormatError);
  auto version = bytes;
  version[4] = 9;
  CHECK_THROWS_AS(decode_scene_bank(version), FormatError);

  const std::string path = "test_fusion_bank.fils";
  save_scene_bank(path, bank);
  CHECK(load_scene_bank(path).size() == bank.size());
  std::remove(path.c_str());
}

TEST_CASE("registry uploads") {
  ModelRegistry reg;
  CHECK(reg.empty());
  auto m1 = constant_model(0.1, Modality::distance, 1);
  CHECK(reg.upload("r1", m1, 0) == UploadOutcome::stored);
  CHECK(reg.upload("r1", m1, 0) == UploadOutcome::duplicate);
  CHECK(reg.size() == 1);
  CHECK(reg.find("r1")->model == m1);
  CHECK(reg.find("r1")->digest == nn::param_digest(m1));

  auto stale = constant_model(0.3, Modality::distance, 1);
  CHECK_THROWS_AS(reg.upload("r1", stale, 1), StateError);
  auto newer = constant_model(0.3, Modality::distance, 2);
  CHECK(reg.upload("r1", newer, 2) == UploadOutcome::stored);
  CHECK(reg.find("r1")->upload_round == 2);
  auto older = constant_model(0.2, Modality::distance, 1);
  CHECK_THROWS_AS(reg.upload("r1", older, 3), StateError);
  auto other_modality = constant_model(0.3, Modality::semantic, 5);
  CHECK_THROWS_AS(reg.upload("r1", other_modality, 3), StateError);
  CHECK_THROWS_AS(reg.upload("", m1, 0), ArgumentError);
  CHECK_FALSE(reg.find("nobody").has_value());

  reg.upload("a0", constant_model(0.0, Modality::occupancy), 0);
  const auto snap = reg.snapshot();
  REQUIRE(snap.size() == 2);
  CHECK(snap[0].robot_id == "a0");
  CHECK(snap[1].robot_id == "r1");
}

TEST_CASE("registry accepts concurrent uploads") {
  ModelRegistry reg;
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&reg, t] {
      for (std::uint32_t v = 1; v <= 20; ++v)
        reg.upload("robot" + std::to_string(t), constant_model(0.01 * v, Modality::distance, v), v);
    });
  for (auto& th : threads) th.join();
  CHECK(reg.size() == 4);
  for (const auto& m : reg.snapshot()) CHECK(m.model.version == 20);
}

TEST_CASE("label_scene") {
  const auto& scene = small_bank().records[7];
  SUBCASE("odd count takes the middle output") {
    ModelRegistry reg;
    reg.upload("a", constant_model(0.2, Modality::occupancy), 0);
    reg.upload("b", constant_model(-0.1, Modality::distance), 0);
    reg.upload("c", constant_model(0.5, Modality::semantic), 0);
    const auto l = label_scene(reg, scene, 4);
    CHECK(l.label == output_on(reg.find("a")->model, scene));
    CHECK(l.label == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(l.round == 4);
    CHECK(l.scene_id == scene.scene_id);
    REQUIRE(l.contributors.size() == 3);
    CHECK(l.contributors[0] == Contributor{"a", 1});
  }
  SUBCASE("singleton") {
    ModelRegistry reg;
    reg.upload("solo", constant_model(-0.33, Modality::semantic), 0);
    CHECK(label_scene(reg, scene, 0).label == output_on(reg.find("solo")->model, scene));
  }
  SUBCASE("even count averages the middle pair") {
    ModelRegistry reg;
    const double values[] = {0.0, 0.1, 0.3, 0.69};
    for (int i = 0; i < 4; ++i)
      reg.upload("r" + std::to_string(i), constant_model(values[i], Modality::distance), 0);
    const double mid = 0.5 * (output_on(reg.find("r1")->model, scene) +
                              output_on(reg.find("r2")->model, scene));
    CHECK(label_scene(reg, scene, 0).label == mid);
    CHECK(label_scene(reg, scene, 0).label == doctest::Approx(0.2).epsilon(1e-6));
  }
  SUBCASE("permuting the models does not change the label") {
    auto models = ModelRegistry{}.snapshot();
    Rng rng(5);
    for (int i = 0; i < 5; ++i) {
      RegisteredModel r;
      r.robot_id = "m" + std::to_string(i);
      r.model = nn::init_model(nn::default_policy_spec(), 100 + i, kAllModalities[i % 3]);
      models.push_back(r);
    }
    const double ref = label_scene(models, scene, 0).label;
    for (int trial = 0; trial < 20; ++trial) {
      for (std::size_t i = models.size(); i > 1; --i)
        std::swap(models[i - 1], models[rng.below(i)]);
      CHECK(label_scene(models, scene, 0).label == ref);
    }
  }
  SUBCASE("missing modality names the robot") {
    ModelRegistry reg;
    reg.upload("robot-7", constant_model(0.1, Modality::semantic), 0);
    auto partial = scene;
    partial.views.erase(Modality::semantic);
    CHECK_THROWS_WITH_AS(label_scene(reg, partial, 0),
                         doctest::Contains("robot-7"), DataError);
  }
  SUBCASE("empty registry") {
    CHECK_THROWS_AS(label_scene(ModelRegistry{}, scene, 0), StateError);
  }
}

TEST_CASE("fuse_round") {
  const auto& bank = small_bank();
  std::vector<nn::PolicyModel> models;
  for (int i = 0; i < 3; ++i)
    models.push_back(nn::init_model(nn::default_policy_spec(), 40 + i, kAllModalities[i]));

  ModelRegistry forward_order, reverse_order;
  for (int i = 0; i < 3; ++i) forward_order.upload("r" + std::to_string(i), models[i], 0);
  for (int i = 2; i >= 0; --i) reverse_order.upload("r" + std::to_string(i), models[i], 0);

  const auto labels = fuse_round(forward_order, bank, 1);
  REQUIRE(labels.size() == bank.size());
  CHECK(fuse_round(reverse_order, bank, 1) == labels);
  CHECK(fuse_round(forward_order, bank, 1) == labels);  // re-fusion is idempotent
  for (std::size_t j = 0; j < bank.size(); ++j) {
    CHECK(labels[j] == label_scene(forward_order, bank.records[j], 1));
    CHECK(std::abs(labels[j].label) <= nn::kSteeringLimit);
    CHECK(labels[j].contributors.size() == 3);
  }

  SUBCASE("identical private models") {
    ModelRegistry same;
    for (int i = 0; i < 3; ++i) same.upload("s" + std::to_string(i), models[1], 0);
    const auto l = fuse_round(same, bank, 2);
    for (std::size_t j = 0; j < bank.size(); ++j)
      CHECK(l[j].label == output_on(models[1], bank.records[j]));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(fuse_round(forward_order, SceneBank{}, 1), StateError);
    CHECK_THROWS_AS(fuse_round(ModelRegistry{}, bank, 1), StateError);
  }
  SUBCASE("csv export") {
    std::ostringstream os;
    write_pseudo_labels_csv(os, std::span(labels).first(2));
    std::istringstream is(os.str());
    std::string header, row;
    std::getline(is, header);
    std::getline(is, row);
    CHECK(header == "scene_id,label,round,n_contributors");
    CHECK(row.rfind("0,", 0) == 0);
    CHECK(row.substr(row.size() - 4) == ",1,3");
  }
}

TEST_CASE("median resists a constant adversary") {
  const auto bank = build_scene_bank(std::vector<std::int64_t>{61, 62, 63, 64, 65}, 100);
  REQUIRE(bank.size() == 500);
  const auto truth = expert_steering(bank);

  ModelRegistry reg;
  const std::int64_t train_seeds[2][4] = {{70, 71, 72, 73}, {80, 81, 82, 83}};
  const Modality mods[2] = {Modality::distance, Modality::occupancy};
  for (int i = 0; i < 2; ++i) {
    const auto data = imitation::collect_demonstrations(train_seeds[i], mods[i], 400);
    nn::TrainConfig cfg;
    cfg.epochs = 30;
    reg.upload("accurate" + std::to_string(i),
               imitation::train_bc(data, nn::default_policy_spec(), cfg).model, 0);
  }
  reg.upload("adversary", constant_model(0.69, Modality::semantic), 0);

  auto mae = [&](const std::vector<PseudoLabel>& labels) {
    double s = 0.0;
    for (std::size_t j = 0; j < labels.size(); ++j) s += std::abs(labels[j].label - truth[j]);
    return s / static_cast<double>(labels.size());
  };
  const double med = mae(fuse_round(reg, bank, 0, Aggregator::median));
  const double avg = mae(fuse_round(reg, bank, 0, Aggregator::mean));
  double adv = 0.0;
  for (double t : truth) adv += std::abs(output_on(reg.find("adversary")->model, bank.records[0]) - t);
  adv /= static_cast<double>(truth.size());
  MESSAGE("MAE median " << med << " mean " << avg << " adversary " << adv);
  CHECK(med <= adv);
  CHECK(med < avg);
}

TEST_CASE("guide training") {
  const auto bank = build_scene_bank(std::vector<std::int64_t>{31, 32, 33, 34}, 100);
  const auto truth = expert_steering(bank);
  std::vector<PseudoLabel> labels;
  for (std::size_t j = 0; j < bank.size(); ++j)
    labels.push_back({bank.records[j].scene_id, truth[j], {{"expert", 0}}, 3});
  auto cfg = default_guide_config();
  CHECK(cfg.weight_decay == kDefaultGuideDecay);
  cfg.epochs = 30;

  SUBCASE("one guide per modality") {
    std::vector<nn::PolicyModel> guides;
    for (auto m : kAllModalities) {
      auto g = train_guide(m, bank, labels, nn::default_policy_spec(), cfg);
      CHECK(g.model.modality == m);
      CHECK(g.model.version == 3);
      CHECK(g.model.input_dim() == 256);
      CHECK(g.curve.size() == 31);
      guides.push_back(g.model);
    }
    CHECK(nn::param_digest(guides[0]) != nn::param_digest(guides[1]));
    CHECK(nn::param_digest(guides[1]) != nn::param_digest(guides[2]));
  }
  SUBCASE("weight decay shrinks the parameter norm") {
    auto g = train_guide(Modality::distance, bank, labels, nn::default_policy_spec(), cfg);
    const auto samples = guide_samples(Modality::distance, bank, labels);
    const auto split = nn::stride_split(samples.size());
    std::vector<nn::Sample> train, val;
    for (auto i : split.train) train.push_back(samples[i]);
    for (auto i : split.validation) val.push_back(samples[i]);
    auto plain_cfg = cfg;
    plain_cfg.weight_decay = 0.0;
    auto plain = nn::init_model(nn::default_policy_spec(), imitation::init_seed(cfg.seed),
                                Modality::distance);
    nn::train_regression(plain, train, val, plain_cfg);
    MESSAGE("norm2 decayed " << g.model.squared_norm() << " plain " << plain.squared_norm());
    CHECK(g.model.squared_norm() < plain.squared_norm());
  }
  SUBCASE("expert-equal labels train nearly as well as direct supervision") {
    const auto test = imitation::collect_demonstrations(std::vector<std::int64_t>{35, 36},
                                                        Modality::distance, 300);
    auto g = train_guide(Modality::distance, bank, labels, nn::default_policy_spec(), cfg);
    // Direct supervision: same scenes, true labels, no regularization.
    imitation::DemonstrationSet direct;
    direct.modality = Modality::distance;
    for (std::size_t j = 0; j < bank.size(); ++j)
      direct.records.push_back(
          {bank.records[j].view(Modality::distance), static_cast<float>(truth[j])});
    auto direct_cfg = cfg;
    direct_cfg.weight_decay = 0.0;
    const auto oracle = imitation::train_bc(direct, nn::default_policy_spec(), direct_cfg);
    const double guide_mse = imitation::evaluate_offline(g.model, test).mse;
    const double oracle_mse = imitation::evaluate_offline(oracle.model, test).mse;
    MESSAGE("test MSE guide " << guide_mse << " direct " << oracle_mse);
    CHECK(guide_mse <= 2.0 * oracle_mse);
  }
  SUBCASE("errors") {
    auto no_decay = cfg;
    no_decay.weight_decay = 0.0;
    CHECK_THROWS_AS(train_guide(Modality::distance, bank, labels, nn::default_policy_spec(), no_decay),
                    ArgumentError);
    auto fewer = labels;
    fewer.pop_back();
    CHECK_THROWS_AS(train_guide(Modality::distance, bank, fewer, nn::default_policy_spec(), cfg),
                    DataError);
    auto renamed = labels;
    renamed[4].scene_id = 9999;
    CHECK_THROWS_AS(train_guide(Modality::distance, bank, renamed, nn::default_policy_spec(), cfg),
                    DataError);
    CHECK_THROWS_AS(
        train_guide(Modality::distance, SceneBank{}, {}, nn::default_policy_spec(), cfg),
        StateError);
  }
}
