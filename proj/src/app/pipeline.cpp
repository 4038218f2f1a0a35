#include "fil/app/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include "fil/app/svg.hpp"
#include "fil/common/digest.hpp"
#include "fil/common/errors.hpp"
#include "fil/protocol/transport.hpp"

namespace fil::app {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string modality_name(Modality m) { return std::string(to_string(m)); }

// Asks until the first fusion round has completed.
protocol::Guide wait_for_guide(protocol::Client& client, const std::string& id, Modality m) {
  const auto deadline = Clock::now() + protocol::Client::kDefaultTimeout;
  for (;;) {
    try {
      return client.request_guide(id, m);
    } catch (const protocol::RemoteError& e) {
      if (e.code() != protocol::ErrorCode::no_guide_available || Clock::now() > deadline) throw;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

}  // namespace

int robot_environment(std::int64_t experiment, Modality m) {
  return static_cast<int>((static_cast<std::int64_t>(index_of(m)) + experiment) % 3);
}

sim::TrackRecipe robot_recipe(int environment) {
  if (environment < 0 || environment > 2)
    throw ArgumentError("robot environment must be 0, 1 or 2");
  sim::TrackRecipe recipe;
  if (environment == 2) recipe.obstacles = 0;
  return recipe;
}

std::vector<std::int64_t> robot_track_seeds(std::int64_t experiment, Modality m, int count) {
  const int env = robot_environment(experiment, m);
  std::vector<std::int64_t> seeds;
  for (int i = 0; i < count; ++i) {
    // Even seeds turn left, odd seeds turn right.
    const std::int64_t base = 1000 * experiment + 100 * static_cast<std::int64_t>(index_of(m)) + 2 * i;
    seeds.push_back(env == 0 ? base : env == 1 ? base + 1 : base + i % 2);
  }
  return seeds;
}

std::vector<std::int64_t> bank_track_seeds(std::int64_t experiment, int count) {
  std::vector<std::int64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(50000 + 1000 * experiment + i);
  return seeds;
}

std::vector<std::int64_t> transfer_track_seeds(std::int64_t experiment, Modality m, int count) {
  std::vector<std::int64_t> seeds;
  for (int i = 0; i < count; ++i)
    seeds.push_back(700000 + 1000 * experiment + 10 * static_cast<std::int64_t>(index_of(m)) + i);
  return seeds;
}

std::vector<std::int64_t> test_track_seeds(int count) {
  std::vector<std::int64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(900000 + i);
  return seeds;
}

std::vector<std::int64_t> eval_track_seeds(int count) {
  std::vector<std::int64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(800000 + i);
  return seeds;
}

std::vector<std::uint64_t> arm_seeds(std::int64_t experiment, int count) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(static_cast<std::uint64_t>(experiment + 100 * i));
  return seeds;
}

std::string robot_id(Modality m) { return "robot-" + modality_name(m); }

sim::EvalReport evaluate_controller(const sim::Controller& controller, Modality modality,
                                    std::span<const std::int64_t> tracks, sim::WeatherKind weather,
                                    double intensity, int max_steps) {
  sim::EvalReport total;
  for (auto seed : tracks) {
    const sim::WeatherPerturbation w{weather, weather == sim::WeatherKind::none ? 0.0 : intensity,
                                     static_cast<std::uint64_t>(seed)};
    total.merge(sim::run_episode(sim::make_track(seed), controller, modality, w, max_steps).report);
  }
  total.weather = {weather, weather == sim::WeatherKind::none ? 0.0 : intensity, 0};
  return total;
}

sim::EvalReport evaluate_controller(const nn::PolicyModel& model,
                                    std::span<const std::int64_t> tracks, sim::WeatherKind weather,
                                    double intensity, int max_steps) {
  const sim::Controller c = [&model](const sim::TrackWorld&, const sim::Observation& obs) {
    return sim::policy_steering(model, obs);
  };
  return evaluate_controller(c, model.modality, tracks, weather, intensity, max_steps);
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, std::int64_t seed, const Log& log) {
  cfg.validate();
  auto note = [&](const std::string& s) {
    if (log) log("experiment " + std::to_string(seed) + ": " + s);
  };
  ExperimentOutcome out;
  out.seed = seed;
  const auto spec = cfg.net_spec();

  // Local imitation learning, one robot per modality.
  auto t0 = Clock::now();
  for (auto m : kAllModalities) {
    RobotOutcome r;
    r.modality = m;
    r.environment = robot_environment(seed, m);
    imitation::CollectOptions collect;
    collect.recipe = robot_recipe(r.environment);
    collect.execution_noise = cfg.robot_noise;
    const auto data = imitation::collect_demonstrations(
        robot_track_seeds(seed, m, cfg.robot_tracks), m, cfg.robot_steps, collect);
    nn::TrainConfig train = cfg.train;
    train.seed = static_cast<std::uint64_t>(seed);
    r.local = imitation::train_bc(data, spec, train);
    out.robots.push_back(std::move(r));
  }
  out.times.local = seconds_since(t0);
  note("local training done");

  // Cloud: bank, parameter uploads, fusion and guide requests over loopback.
  t0 = Clock::now();
  fusion::BankOptions bank_opts;
  bank_opts.stride = cfg.bank_stride;
  bank_opts.execution_noise = cfg.bank_noise;
  auto bank = fusion::build_scene_bank(bank_track_seeds(seed, cfg.bank_tracks),
                                       cfg.bank_scenes_per_track, bank_opts);
  {
    auto server_cfg = cfg.server_config(static_cast<std::uint64_t>(seed));
    server_cfg.listen = "127.0.0.1:0";
    protocol::CloudServer server(server_cfg, std::move(bank));
    protocol::TcpServer tcp(server, protocol::parse_endpoint(server_cfg.listen));
    std::vector<std::unique_ptr<protocol::Client>> clients;
    for (auto& r : out.robots) {
      clients.push_back(std::make_unique<protocol::Client>(tcp.endpoint()));
      clients.back()->hello(robot_id(r.modality), r.modality);
      clients.back()->upload(robot_id(r.modality), 1, r.local.model);
    }
    if (server_cfg.mode == protocol::FusionMode::asynchronous) server.tick(Clock::now() + server_cfg.async_period);
    for (std::size_t i = 0; i < out.robots.size(); ++i) {
      auto& r = out.robots[i];
      auto guide = wait_for_guide(*clients[i], robot_id(r.modality), r.modality);
      r.guide = std::move(guide.model);
      r.guide_round = guide.fusion_round;
    }
    out.labels = server.labels();
    tcp.stop();
  }
  out.times.cloud = seconds_since(t0);
  note("guides received");

  // Offline comparison on held-out tracks.
  t0 = Clock::now();
  for (auto& r : out.robots) {
    const auto test = imitation::collect_demonstrations(test_track_seeds(cfg.test_tracks), r.modality,
                                                        cfg.test_steps);
    r.local_test = imitation::evaluate_offline(r.local.model, test);
    r.guide_test = imitation::evaluate_offline(r.guide, test);
  }
  out.times.offline = seconds_since(t0);

  // A new robot per modality learns on fresh tracks, from scratch and from the guide.
  t0 = Clock::now();
  const auto seeds = arm_seeds(seed, cfg.transfer_arm_seeds);
  for (auto& r : out.robots) {
    imitation::CollectOptions collect;
    collect.execution_noise = cfg.transfer_noise;
    const auto data = imitation::collect_demonstrations(
        transfer_track_seeds(seed, r.modality, cfg.transfer_tracks), r.modality, cfg.transfer_steps,
        collect);
    const auto plan = cfg.transfer_plan(imitation::init_seed(static_cast<std::uint64_t>(seed)));
    r.comparison = transfer::compare_training(r.guide, data, plan, cfg.train, seeds);
  }
  out.times.transfer = seconds_since(t0);
  note("transfer comparisons done");

  // Closed loop: Table-1 controllers in normal weather, Table-2 controllers per weather.
  t0 = Clock::now();
  const auto tracks = eval_track_seeds(cfg.eval_tracks);
  const std::string group = std::to_string(seed);
  for (const auto& r : out.robots) {
    const auto name = modality_name(r.modality);
    out.eval.push_back({group, "table1", "local-" + name, r.modality,
                        evaluate_controller(r.local.model, tracks, sim::WeatherKind::none, 0.0,
                                            cfg.eval_max_steps)});
    out.eval.push_back({group, "table1", "cloud-" + name, r.modality,
                        evaluate_controller(r.guide, tracks, sim::WeatherKind::none, 0.0,
                                            cfg.eval_max_steps)});
  }
  for (const auto& r : out.robots) {
    const auto name = modality_name(r.modality);
    const auto& scratch = r.comparison.runs[0];
    const auto& transferred = r.comparison.runs[1];
    for (auto w : cfg.weathers) {
      out.eval.push_back({group, "table2", "scratch-" + name, r.modality,
                          evaluate_controller(scratch.model, tracks, w, cfg.weather_intensity,
                                              cfg.eval_max_steps)});
      out.eval.push_back({group, "table2", "transferred-" + name, r.modality,
                          evaluate_controller(transferred.model, tracks, w, cfg.weather_intensity,
                                              cfg.eval_max_steps)});
    }
  }
  out.times.closed_loop = seconds_since(t0);
  note("closed-loop evaluation done");
  return out;
}

void write_outputs(const ExperimentConfig& cfg, PipelineOutcome& outcome,
                   const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::string seeds;
  for (std::size_t i = 0; i < cfg.experiments.size(); ++i)
    seeds += (i ? "," : "") + std::to_string(cfg.experiments[i]);
  const Provenance prov{"fil pipeline", cfg.digest(), seeds};

  auto open = [&](const std::string& name) {
    outcome.files.push_back(name);
    std::ofstream os(fs::path(out_dir) / name, std::ios::trunc);
    if (!os) throw ArgumentError("cannot write " + (fs::path(out_dir) / name).string());
    return os;
  };
  auto csv = [&](const std::string& name) {
    auto os = open(name);
    os << header_comment(prov);
    return os;
  };

  std::vector<CurvePoint> local_curves, transfer_curves;
  std::vector<OfflineRow> offline;
  std::vector<EvalRow> eval;
  for (const auto& e : outcome.experiments) {
    const auto group = std::to_string(e.seed);
    for (const auto& r : e.robots) {
      const auto name = modality_name(r.modality);
      for (const auto& p : r.local.curve)
        local_curves.push_back({group, "local-" + name, static_cast<std::uint64_t>(e.seed), p.epoch,
                                p.train_mse, p.val_mse});
      for (const auto& run : r.comparison.runs)
        for (const auto& p : run.curve)
          transfer_curves.push_back({group, std::string(transfer::to_string(run.arm)) + "-" + name,
                                     run.seed, p.epoch, p.train_mse, p.val_mse});
      offline.push_back({group, "local-" + name, r.modality, r.local_test.mse, r.local_test.mistakes,
                         r.local_test.n});
      offline.push_back({group, "cloud-" + name, r.modality, r.guide_test.mse, r.guide_test.mistakes,
                         r.guide_test.n});
    }
    eval.insert(eval.end(), e.eval.begin(), e.eval.end());
  }

  open("config.cfg") << cfg.to_text();
  { auto os = csv("local_curves.csv"); write_curves_csv(os, local_curves); }
  { auto os = csv("transfer_curves.csv"); write_curves_csv(os, transfer_curves); }
  {
    auto os = csv("pseudo_labels.csv");
    os << "group,scene_id,label,round,n_contributors\n";
    char buf[64];
    for (const auto& e : outcome.experiments)
      for (const auto& l : e.labels) {
        std::snprintf(buf, sizeof buf, "%.17g", l.label);
        os << e.seed << ',' << l.scene_id << ',' << buf << ',' << l.round << ','
           << l.contributors.size() << '\n';
      }
  }
  {
    auto os = csv("transfer_summary.csv");
    os << "group,modality,seeds,head_start_wins,initial_val_scratch,initial_val_transferred,"
          "final_val_scratch,final_val_transferred\n";
    char buf[256];
    for (const auto& e : outcome.experiments)
      for (const auto& r : e.robots) {
        const auto& s = r.comparison.summary;
        std::snprintf(buf, sizeof buf, "%lld,%s,%d,%d,%.17g,%.17g,%.17g,%.17g\n",
                      static_cast<long long>(e.seed), modality_name(r.modality).c_str(), s.seeds,
                      s.head_start_wins, s.mean_initial_val_scratch, s.mean_initial_val_transferred,
                      s.mean_final_val_scratch, s.mean_final_val_transferred);
        os << buf;
      }
  }
  { auto os = csv("offline.csv"); write_offline_csv(os, offline); }
  { auto os = csv("eval.csv"); write_eval_csv(os, eval); }
  { auto os = csv("table1.csv"); write_table1_csv(os, eval, offline); }
  { auto os = csv("table2.csv"); write_table2_csv(os, eval); }
  { auto os = open("local_curves.svg"); write_curves_svg(os, local_curves, "Local training"); }
  {
    auto os = open("transfer_curves.svg");
    write_curves_svg(os, transfer_curves, "Scratch vs transferred training");
  }
  {
    // Wall-clock times vary between runs, so they stay out of the CSVs.
    auto os = open("timings.txt");
    char buf[160];
    for (const auto& e : outcome.experiments) {
      std::snprintf(buf, sizeof buf,
                    "experiment %lld: local %.1fs cloud %.1fs offline %.1fs transfer %.1fs "
                    "closed_loop %.1fs\n",
                    static_cast<long long>(e.seed), e.times.local, e.times.cloud, e.times.offline,
                    e.times.transfer, e.times.closed_loop);
      os << buf;
    }
  }
}

PipelineOutcome run_pipeline(const ExperimentConfig& cfg, const std::string& out_dir,
                             const Log& log) {
  PipelineOutcome outcome;
  for (auto seed : cfg.experiments) outcome.experiments.push_back(run_experiment(cfg, seed, log));
  write_outputs(cfg, outcome, out_dir);
  return outcome;
}

}  // namespace fil::app
