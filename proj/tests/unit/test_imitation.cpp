#include <cmath>
#include <cstdio>
#include <sstream>

#include "doctest.h"
#include "fil/common/errors.hpp"
#include "fil/imitation/behavior_cloning.hpp"
#include "fil/nn/kernels.hpp"

using namespace fil;
using namespace fil::imitation;

namespace {

const std::vector<std::int64_t> kSeeds = {11, 12, 13};

const DemonstrationSet& reference_set() {
  static const DemonstrationSet d = collect_demonstrations(kSeeds, Modality::distance, 500);
  return d;
}

nn::TrainConfig quick_cfg(int epochs) {
  nn::TrainConfig cfg;
  cfg.epochs = epochs;
  return cfg;
}

}  // namespace

TEST_CASE("collection size, determinism and label range") {
  const auto& d = reference_set();
  CHECK(d.size() == 1500);
  CHECK(d.modality == Modality::distance);
  CHECK(d.provenance.track_seeds == kSeeds);
  const auto again = collect_demonstrations(kSeeds, Modality::distance, 500);
  CHECK(again.records == d.records);
  for (const auto& r : d.records) {
    CHECK(r.obs.modality == Modality::distance);
    CHECK(std::abs(r.steering) <= 0.69f);
  }
  CHECK_THROWS_AS(collect_demonstrations(std::vector<std::int64_t>{}, Modality::distance, 10), ArgumentError);
  CHECK_THROWS_AS(collect_demonstrations(kSeeds, Modality::distance, 0), ArgumentError);
}

TEST_CASE("execution noise perturbs states but keeps expert labels in range") {
  CollectOptions opts;
  opts.execution_noise = 0.15;
  const auto noisy = collect_demonstrations(kSeeds, Modality::occupancy, 300, opts);
  const auto clean = collect_demonstrations(kSeeds, Modality::occupancy, 300);
  CHECK(noisy.size() == clean.size());
  CHECK_FALSE(noisy.records == clean.records);
  for (const auto& r : noisy.records) CHECK(std::abs(r.steering) <= 0.69f);
  CHECK(collect_demonstrations(kSeeds, Modality::occupancy, 300, opts).records == noisy.records);
}

TEST_CASE("demonstration files round-trip") {
  const auto d = collect_demonstrations(std::vector<std::int64_t>{5}, Modality::semantic, 40);
  const std::string path = "test_imitation_roundtrip.fild";
  save_demonstrations(path, d);
  const auto back = load_demonstrations(path);
  CHECK(back.modality == d.modality);
  CHECK(back.records == d.records);
  std::remove(path.c_str());
}

TEST_CASE("reference configuration reaches the validation target") {
  const auto res = train_bc(reference_set(), nn::default_policy_spec(), quick_cfg(50));
  REQUIRE(res.curve.size() == 51);
  CHECK(res.curve.front().epoch == 0);
  const double final_val = res.curve.back().val_mse;
  MESSAGE("final validation MSE " << final_val);
  CHECK(final_val < 0.01);
  CHECK(res.model.modality == Modality::distance);
  CHECK(res.model.version == 1);

  int non_increasing = 0;
  for (std::size_t e = 1; e < res.curve.size(); ++e)
    if (res.curve[e].val_mse <= res.curve[e - 1].val_mse) ++non_increasing;
  CHECK(non_increasing >= static_cast<int>(std::ceil(0.9 * (res.curve.size() - 1))));
}

TEST_CASE("training is deterministic and checks its inputs") {
  DemonstrationSet small;
  small.modality = reference_set().modality;
  small.records.assign(reference_set().records.begin(), reference_set().records.begin() + 200);
  auto cfg = quick_cfg(3);
  cfg.batch_size = 32;
  const auto a = train_bc(small, nn::default_policy_spec(), cfg);
  const auto b = train_bc(small, nn::default_policy_spec(), cfg);
  CHECK(a.model == b.model);
  CHECK(a.batch_digest == b.batch_digest);

  DemonstrationSet empty;
  CHECK_THROWS_AS(train_bc(empty, nn::default_policy_spec(), quick_cfg(1)), ArgumentError);
  DemonstrationSet tiny = small;
  tiny.records.resize(10);
  CHECK_THROWS_AS(train_bc(tiny, nn::default_policy_spec(), cfg), ArgumentError);
  auto wrong = a.model;
  wrong.modality = Modality::semantic;
  CHECK_THROWS_AS(continue_training(wrong, small, quick_cfg(1)), ArgumentError);
}

TEST_CASE("zero learning rate leaves the initialization untouched") {
  DemonstrationSet small;
  small.modality = reference_set().modality;
  small.records.assign(reference_set().records.begin(), reference_set().records.begin() + 100);
  auto cfg = quick_cfg(4);
  cfg.learning_rate = 0.0;
  cfg.batch_size = 16;
  const auto res = train_bc(small, nn::default_policy_spec(), cfg);
  const auto init = nn::init_model(nn::default_policy_spec(), init_seed(cfg.seed), small.modality);
  REQUIRE(res.model.layers.size() == init.layers.size());
  for (std::size_t i = 0; i < init.layers.size(); ++i) {
    CHECK(res.model.layers[i].weights == init.layers[i].weights);
    CHECK(res.model.layers[i].biases == init.layers[i].biases);
  }
}

TEST_CASE("duplicating every record does not change full-batch training") {
  DemonstrationSet d;
  d.modality = reference_set().modality;
  d.records.assign(reference_set().records.begin(), reference_set().records.begin() + 120);
  DemonstrationSet dd = d;
  dd.records.insert(dd.records.end(), d.records.begin(), d.records.end());

  // Each run takes its whole training split as one batch.
  auto cfg = quick_cfg(5);
  cfg.batch_size = 120;
  const auto a = train_bc(d, nn::default_policy_spec(), cfg);
  cfg.batch_size = 240;
  const auto b = train_bc(dd, nn::default_policy_spec(), cfg);
  double max_diff = 0.0;
  for (std::size_t i = 0; i < a.model.layers.size(); ++i) {
    const auto& la = a.model.layers[i];
    const auto& lb = b.model.layers[i];
    for (std::size_t j = 0; j < la.weights.size(); ++j)
      max_diff = std::max(max_diff, std::abs(double(la.weights[j]) - lb.weights[j]));
    for (std::size_t j = 0; j < la.biases.size(); ++j)
      max_diff = std::max(max_diff, std::abs(double(la.biases[j]) - lb.biases[j]));
  }
  // Only float rounding of the summation order separates the two runs.
  CHECK(max_diff < 1e-6);
  for (std::size_t e = 0; e < a.curve.size(); ++e)
    CHECK(a.curve[e].val_mse == doctest::Approx(b.curve[e].val_mse).epsilon(1e-6));
}

TEST_CASE("offline evaluation") {
  const auto& ref = reference_set();
  DemonstrationSet d;
  d.modality = ref.modality;
  d.records.assign(ref.records.begin(), ref.records.begin() + 400);
  const auto model = nn::init_model(nn::default_policy_spec(), 77, d.modality);

  SUBCASE("labels equal to the model's own outputs") {
    auto self = d;
    for (auto& r : self.records)
      r.steering = static_cast<float>(nn::forward(model, r.obs.values()));
    const auto m = evaluate_offline(model, self);
    CHECK(m.mse < 1e-12);
    CHECK(m.mistake_rate == 0.0);
  }
  SUBCASE("zero model on zero labels") {
    auto zero = model;
    for (auto& l : zero.layers) {
      std::fill(l.weights.begin(), l.weights.end(), 0.0f);
      std::fill(l.biases.begin(), l.biases.end(), 0.0f);
    }
    auto straight = d;
    for (auto& r : straight.records) r.steering = 0.0f;
    const auto m = evaluate_offline(zero, straight);
    CHECK(m.mse == 0.0);
    CHECK(m.mistakes == 0);
  }
  SUBCASE("mistake rate matches a per-record recount") {
    const auto m = evaluate_offline(model, d);
    std::size_t count = 0;
    double sse = 0.0;
    for (const auto& r : d.records) {
      const double e = nn::forward(model, r.obs.values()) - r.steering;
      sse += e * e;
      if (std::abs(e) > 0.1) ++count;
    }
    CHECK(m.n == d.size());
    CHECK(m.mistakes == count);
    CHECK(m.mistake_rate == doctest::Approx(double(count) / d.size()));
    CHECK(m.mse == doctest::Approx(sse / d.size()).epsilon(1e-9));
  }
  SUBCASE("modality mismatch") {
    auto other = model;
    other.modality = Modality::occupancy;
    CHECK_THROWS_AS(evaluate_offline(other, d), ArgumentError);
  }
}

TEST_CASE("learning curve csv") {
  nn::LearningCurve c = {{0, 0.5, 0.25}, {1, 0.125, 0.0625}};
  std::ostringstream os;
  write_curve_csv(os, c);
  CHECK(os.str() == "epoch,train_mse,val_mse\n0,0.5,0.25\n1,0.125,0.0625\n");
}
