// fil: command-line entry point for data generation, training, the cloud
// server and its clients, evaluation and reports.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "fil/app/pipeline.hpp"
#include "fil/common/digest.hpp"
#include "fil/common/errors.hpp"
#include "fil/nn/serialize.hpp"
#include "fil/protocol/transport.hpp"
#include "fil/sim/expert.hpp"

namespace fs = std::filesystem;
using namespace fil;

namespace {

// A required input file is missing; reported as a usage error.
class MissingInput : public Error {
 public:
  explicit MissingInput(const std::string& path) : Error("missing input: " + path) {}
};

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  app::ExperimentConfig cfg;
};

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

Modality modality_arg(const std::string& s) {
  const auto m = parse_modality(s);
  if (!m) throw ArgumentError("unknown modality '" + s + "' (occupancy, distance, semantic)");
  return *m;
}

std::string join_seeds(const auto& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) out += (i ? "," : "") + std::to_string(seeds[i]);
  return out;
}

const std::string& need_input(const Globals& g, const std::string& path) {
  if (!fs::exists(path)) throw MissingInput(path);
  app::check_fresh(path, g.cfg.digest(), std::cerr);
  return path;
}

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / name).string();
}

std::ofstream open_csv(const Globals& g, const std::string& path, const std::string& producer,
                       const std::string& seed) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ArgumentError("cannot write " + path);
  os << app::header_comment({producer, g.cfg.digest(), seed});
  return os;
}

// Seeds given explicitly, or derived from an experiment seed and a role.
struct SeedChoice {
  std::vector<std::int64_t> seeds;
  std::int64_t experiment = -1;
  std::string role = "robot";
  int count = 0;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--seeds", seeds, "Track seeds")->delimiter(',');
    cmd->add_option("--experiment", experiment, "Derive seeds from this experiment seed");
    cmd->add_option("--role", role, "Seed range for --experiment")
        ->check(CLI::IsMember({"robot", "bank", "transfer", "test", "eval"}));
    cmd->add_option("--count", count, "Number of derived seeds (default from config)");
  }

  std::vector<std::int64_t> resolve(const app::ExperimentConfig& cfg,
                                    std::optional<Modality> m) const {
    if (!seeds.empty()) return seeds;
    auto pick = [&](int def) { return count > 0 ? count : def; };
    if (role == "test") return app::test_track_seeds(pick(cfg.test_tracks));
    if (role == "eval") return app::eval_track_seeds(pick(cfg.eval_tracks));
    if (experiment < 0) throw ArgumentError("give --seeds or --experiment");
    if (role == "bank") return app::bank_track_seeds(experiment, pick(cfg.bank_tracks));
    if (!m) throw ArgumentError("--role " + role + " needs --modality");
    if (role == "transfer")
      return app::transfer_track_seeds(experiment, *m, pick(cfg.transfer_tracks));
    return app::robot_track_seeds(experiment, *m, pick(cfg.robot_tracks));
  }
};

void write_curve(const Globals& g, const std::string& path, const std::string& producer,
                 const std::string& seed, const nn::LearningCurve& curve) {
  auto os = open_csv(g, path, producer, seed);
  imitation::write_curve_csv(os, curve);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated imitation learning toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "key=value experiment config file");
  app.add_option("--set", g.overrides, "Config override key=value (repeatable)");
  app.add_option("--out", g.out_dir, "Output directory");

  std::function<void()> action;

  // gen-tracks
  auto* gen_tracks = app.add_subcommand("gen-tracks", "Summarize seeded tracks as CSV");
  SeedChoice tracks_seeds;
  std::string tracks_modality;
  tracks_seeds.add_options(gen_tracks);
  gen_tracks->add_option("--modality", tracks_modality, "Robot modality for --role robot/transfer");
  gen_tracks->callback([&] {
    action = [&] {
      std::optional<Modality> m;
      if (!tracks_modality.empty()) m = modality_arg(tracks_modality);
      const auto seeds = tracks_seeds.resolve(g.cfg, m);
      const auto path = out_path(g, "tracks.csv");
      auto os = open_csv(g, path, "fil gen-tracks", join_seeds(seeds));
      os << "seed,turn_direction,segments,arcs,obstacles,length_m,half_width_m\n";
      for (auto s : seeds) {
        const auto w = sim::make_track(s);
        int arcs = 0;
        for (const auto& seg : w.segments) arcs += seg.kind == sim::SegmentKind::arc;
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f,%.3f", w.total_length, w.track_half_width);
        os << s << ',' << (s % 2 == 0 ? "left" : "right") << ',' << w.segments.size() << ','
           << arcs << ',' << w.obstacles.size() << ',' << buf << '\n';
      }
      std::cout << path << '\n';
    };
  });

  // gen-data
  auto* gen_data = app.add_subcommand("gen-data", "Record expert demonstrations (FILD)");
  SeedChoice data_seeds;
  std::string data_modality, data_output, data_weather = "normal";
  int data_steps = 0;
  double data_noise = -1.0, data_intensity = 0.5;
  data_seeds.add_options(gen_data);
  gen_data->add_option("--modality", data_modality, "Sensor modality")->required();
  gen_data->add_option("--steps", data_steps, "Steps per track (default from config)");
  gen_data->add_option("--noise", data_noise, "Execution noise std (default from config)");
  gen_data->add_option("--weather", data_weather, "Weather applied to recorded frames");
  gen_data->add_option("--intensity", data_intensity, "Weather intensity");
  gen_data->add_option("--output", data_output, "Output file (default <out>/<modality>.fild)");
  gen_data->callback([&] {
    action = [&] {
      const auto m = modality_arg(data_modality);
      const auto seeds = data_seeds.resolve(g.cfg, m);
      const bool transfer_role = data_seeds.seeds.empty() && data_seeds.role == "transfer";
      const bool test_role = data_seeds.seeds.empty() && data_seeds.role == "test";
      imitation::CollectOptions opts;
      if (data_seeds.seeds.empty() && data_seeds.role == "robot")
        opts.recipe = app::robot_recipe(app::robot_environment(data_seeds.experiment, m));
      opts.execution_noise = data_noise >= 0 ? data_noise
                             : test_role    ? 0.0
                             : transfer_role ? g.cfg.transfer_noise
                                             : g.cfg.robot_noise;
      const auto kind = sim::parse_weather(data_weather);
      if (!kind) throw ArgumentError("unknown weather '" + data_weather + "'");
      opts.weather = {*kind, *kind == sim::WeatherKind::none ? 0.0 : data_intensity, 0};
      const int steps = data_steps > 0 ? data_steps
                        : transfer_role ? g.cfg.transfer_steps
                        : test_role     ? g.cfg.test_steps
                                        : g.cfg.robot_steps;
      const auto data = imitation::collect_demonstrations(seeds, m, steps, opts);
      const auto path = data_output.empty() ? out_path(g, data_modality + ".fild") : data_output;
      imitation::save_demonstrations(path, data);
      app::write_sidecar(path, {"fil gen-data", g.cfg.digest(), join_seeds(seeds)});
      std::cout << path << " (" << data.size() << " records)\n";
    };
  });

  // build-bank
  auto* build_bank = app.add_subcommand("build-bank", "Capture the cloud scene bank (FILS)");
  SeedChoice bank_seeds;
  bank_seeds.role = "bank";
  std::string bank_output;
  int bank_scenes = 0;
  bank_seeds.add_options(build_bank);
  build_bank->add_option("--scenes-per-track", bank_scenes, "Default from config");
  build_bank->add_option("--output", bank_output, "Output file (default <out>/bank.fils)");
  build_bank->callback([&] {
    action = [&] {
      const auto seeds = bank_seeds.resolve(g.cfg, std::nullopt);
      fusion::BankOptions opts;
      opts.stride = g.cfg.bank_stride;
      opts.execution_noise = g.cfg.bank_noise;
      const auto bank = fusion::build_scene_bank(
          seeds, bank_scenes > 0 ? bank_scenes : g.cfg.bank_scenes_per_track, opts);
      const auto path = bank_output.empty() ? out_path(g, "bank.fils") : bank_output;
      fusion::save_scene_bank(path, bank);
      app::write_sidecar(path, {"fil build-bank", g.cfg.digest(), join_seeds(seeds)});
      std::cout << path << " (" << bank.size() << " scenes)\n";
    };
  });

  // train-local
  auto* train_local = app.add_subcommand("train-local", "Behavior cloning on local demonstrations");
  std::string tl_data, tl_output;
  std::uint64_t tl_seed = 1;
  std::uint32_t tl_version = 0;
  train_local->add_option("--data", tl_data, "FILD demonstrations")->required();
  train_local->add_option("--seed", tl_seed, "Training seed");
  train_local->add_option("--version", tl_version, "Version tag of the result (default 1)");
  train_local->add_option("--output", tl_output, "Model file (default <out>/<modality>_local.filp)");
  train_local->callback([&] {
    action = [&] {
      const auto data = imitation::load_demonstrations(need_input(g, tl_data));
      auto cfg = g.cfg.train;
      cfg.seed = tl_seed;
      auto trained = imitation::train_bc(data, g.cfg.net_spec(), cfg);
      if (tl_version > 0) trained.model.version = tl_version;
      const std::string name(to_string(data.modality));
      const auto path = tl_output.empty() ? out_path(g, name + "_local.filp") : tl_output;
      nn::save_model(path, trained.model);
      app::write_sidecar(path, {"fil train-local", g.cfg.digest(), std::to_string(tl_seed)});
      write_curve(g, path + ".curve.csv", "fil train-local", std::to_string(tl_seed), trained.curve);
      std::printf("%s final val MSE %.6f\n", path.c_str(), trained.curve.back().val_mse);
    };
  });

  // serve
  auto* serve = app.add_subcommand("serve", "Run the cloud server");
  std::string sv_bank, sv_listen, sv_mode;
  int sv_robots = 0, sv_freq = 0;
  double sv_duration = 0.0;
  std::uint64_t sv_guide_seed = 1;
  serve->add_option("--bank", sv_bank, "FILS scene bank")->required();
  serve->add_option("--listen", sv_listen, "addr:port (default from config)");
  serve->add_option("--robots", sv_robots, "Expected robot count n");
  serve->add_option("--freq", sv_freq, "Fusion frequency f in rounds");
  serve->add_option("--mode", sv_mode, "sync or async")->check(CLI::IsMember({"sync", "async"}));
  serve->add_option("--guide-seed", sv_guide_seed, "Training seed of served guides");
  serve->add_option("--duration", sv_duration, "Stop after this many seconds (default: until signal)");
  serve->callback([&] {
    action = [&] {
      auto cfg = g.cfg.server_config(sv_guide_seed);
      if (!sv_listen.empty()) cfg.listen = sv_listen;
      if (sv_robots > 0) cfg.robots = sv_robots;
      if (sv_freq > 0) cfg.frequency = sv_freq;
      if (!sv_mode.empty()) cfg.mode = *protocol::parse_mode(sv_mode);
      protocol::CloudServer server(cfg, fusion::load_scene_bank(need_input(g, sv_bank)));
      protocol::TcpServer tcp(server, protocol::parse_endpoint(cfg.listen));
      std::cout << "listening on " << protocol::to_string(tcp.endpoint()) << std::endl;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      const auto start = std::chrono::steady_clock::now();
      while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        if (sv_duration > 0 &&
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() > sv_duration)
          break;
      }
      tcp.stop();
      server.wait_idle();
      for (const auto& ev : server.fusion_events())
        std::cout << "fusion round " << ev.fusion_round << " (upload round " << ev.upload_round
                  << ", " << ev.contributors.size() << " models)\n";
    };
  });

  // upload
  auto* upload = app.add_subcommand("upload", "Send private model parameters to the server");
  std::string up_server, up_robot, up_model;
  std::uint32_t up_round = 1;
  upload->add_option("--server", up_server, "host:port")->required();
  upload->add_option("--robot-id", up_robot, "Robot id")->required();
  upload->add_option("--model", up_model, "FILP model")->required();
  upload->add_option("--round", up_round, "Upload round t");
  upload->callback([&] {
    action = [&] {
      const auto model = nn::load_model(need_input(g, up_model));
      protocol::Client client(protocol::parse_endpoint(up_server));
      client.hello(up_robot, model.modality);
      const auto ack = client.upload(up_robot, up_round, model);
      std::cout << "ack round " << ack.round << '\n';
    };
  });

  // request-guide
  auto* request = app.add_subcommand("request-guide", "Fetch a guide model from the server");
  std::string rq_server, rq_robot, rq_modality, rq_output;
  request->add_option("--server", rq_server, "host:port")->required();
  request->add_option("--robot-id", rq_robot, "Robot id")->required();
  request->add_option("--modality", rq_modality, "Requested modality")->required();
  request->add_option("--output", rq_output, "Model file (default <out>/<modality>_guide.filp)");
  request->callback([&] {
    action = [&] {
      const auto m = modality_arg(rq_modality);
      protocol::Client client(protocol::parse_endpoint(rq_server));
      client.hello(rq_robot, m);
      const auto guide = client.request_guide(rq_robot, m);
      const auto path = rq_output.empty() ? out_path(g, rq_modality + "_guide.filp") : rq_output;
      nn::save_model(path, guide.model);
      app::write_sidecar(path, {"fil request-guide", g.cfg.digest(),
                                "fusion-round-" + std::to_string(guide.fusion_round)});
      std::cout << path << " (fusion round " << guide.fusion_round << ")\n";
    };
  });

  // fuse
  auto* fuse = app.add_subcommand("fuse", "Pseudo-label a bank offline and train guides");
  std::string fu_bank;
  std::vector<std::string> fu_models, fu_guides;
  std::uint32_t fu_round = 1;
  std::uint64_t fu_seed = 1;
  fuse->add_option("--bank", fu_bank, "FILS scene bank")->required();
  fuse->add_option("--models", fu_models, "Private FILP models")->required();
  fuse->add_option("--round", fu_round, "Fusion round tag");
  fuse->add_option("--guide", fu_guides, "Train guides for these modalities")->delimiter(',');
  fuse->add_option("--guide-seed", fu_seed, "Guide training seed");
  fuse->callback([&] {
    action = [&] {
      const auto bank = fusion::load_scene_bank(need_input(g, fu_bank));
      fusion::ModelRegistry registry;
      for (const auto& path : fu_models) {
        auto model = nn::load_model(need_input(g, path));
        registry.upload(fs::path(path).stem().string(), std::move(model), fu_round);
      }
      const auto labels = fusion::fuse_round(registry, bank, fu_round, g.cfg.aggregator);
      const auto path = out_path(g, "pseudo_labels.csv");
      {
        auto os = open_csv(g, path, "fil fuse", std::to_string(fu_round));
        fusion::write_pseudo_labels_csv(os, labels);
      }
      std::cout << path << " (" << labels.size() << " labels)\n";
      for (const auto& name : fu_guides) {
        const auto m = modality_arg(name);
        auto cfg = g.cfg.guide;
        cfg.seed = fu_seed;
        const auto guide = fusion::train_guide(m, bank, labels, g.cfg.net_spec(), cfg);
        const auto gpath = out_path(g, name + "_guide.filp");
        nn::save_model(gpath, guide.model);
        app::write_sidecar(gpath, {"fil fuse", g.cfg.digest(), std::to_string(fu_seed)});
        write_curve(g, gpath + ".curve.csv", "fil fuse", std::to_string(fu_seed), guide.curve);
        std::cout << gpath << '\n';
      }
    };
  });

  // transfer
  auto* xfer = app.add_subcommand("transfer", "Fine-tune a guide's head on local demonstrations");
  std::string tr_guide, tr_data, tr_output;
  std::uint64_t tr_seed = 1;
  xfer->add_option("--guide", tr_guide, "Guide FILP model")->required();
  xfer->add_option("--data", tr_data, "Local FILD demonstrations")->required();
  xfer->add_option("--seed", tr_seed, "Training seed");
  xfer->add_option("--output", tr_output, "Model file (default <out>/<modality>_transferred.filp)");
  xfer->callback([&] {
    action = [&] {
      const auto guide = nn::load_model(need_input(g, tr_guide));
      const auto data = imitation::load_demonstrations(need_input(g, tr_data));
      const auto plan = g.cfg.transfer_plan(imitation::init_seed(tr_seed));
      const auto init = transfer::transfer_init(guide, plan);
      auto cfg = transfer::scaled_config(g.cfg.train, plan);
      cfg.seed = tr_seed;
      const auto tuned = transfer::fine_tune(init.model, data, cfg);
      const std::string name(to_string(data.modality));
      const auto path = tr_output.empty() ? out_path(g, name + "_transferred.filp") : tr_output;
      nn::save_model(path, tuned.model);
      app::write_sidecar(path, {"fil transfer", g.cfg.digest(),
                                std::to_string(tr_seed) + " guide=" + hex64(init.lineage.guide_digest) +
                                    " guide_version=" + std::to_string(init.lineage.guide_version)});
      write_curve(g, path + ".curve.csv", "fil transfer", std::to_string(tr_seed), tuned.curve);
      std::printf("%s final val MSE %.6f\n", path.c_str(), tuned.curve.back().val_mse);
    };
  });

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Closed-loop evaluation of a controller");
  std::string ev_model, ev_modality, ev_name, ev_suite = "table2", ev_output;
  std::vector<std::string> ev_weathers;
  bool ev_expert = false;
  int ev_max_steps = 0;
  double ev_intensity = -1.0;
  SeedChoice ev_seeds;
  ev_seeds.role = "eval";
  ev_seeds.add_options(evaluate);
  evaluate->add_option("--model", ev_model, "FILP controller");
  evaluate->add_flag("--expert", ev_expert, "Evaluate the analytic expert instead");
  evaluate->add_option("--modality", ev_modality, "Rendered modality for --expert");
  evaluate->add_option("--name", ev_name, "Controller name in the report");
  evaluate->add_option("--suite", ev_suite, "table1 or table2")
      ->check(CLI::IsMember({"table1", "table2"}));
  evaluate->add_option("--weather", ev_weathers, "Weathers (default from config)")->delimiter(',');
  evaluate->add_option("--intensity", ev_intensity, "Weather intensity (default from config)");
  evaluate->add_option("--max-steps", ev_max_steps, "Episode length (default from config)");
  evaluate->add_option("--output", ev_output, "CSV file (default <out>/eval_<name>.csv)");
  evaluate->callback([&] {
    action = [&] {
      if (ev_expert == !ev_model.empty()) throw ArgumentError("give exactly one of --model, --expert");
      std::optional<nn::PolicyModel> model;
      Modality m;
      if (ev_expert) {
        m = ev_modality.empty() ? Modality::occupancy : modality_arg(ev_modality);
      } else {
        model = nn::load_model(need_input(g, ev_model));
        m = model->modality;
      }
      const std::string name =
          !ev_name.empty() ? ev_name : ev_expert ? "expert" : fs::path(ev_model).stem().string();
      std::vector<sim::WeatherKind> weathers = g.cfg.weathers;
      if (!ev_weathers.empty()) {
        weathers.clear();
        for (const auto& w : ev_weathers) {
          const auto k = sim::parse_weather(w);
          if (!k) throw ArgumentError("unknown weather '" + w + "'");
          weathers.push_back(*k);
        }
      }
      const double intensity = ev_intensity >= 0 ? ev_intensity : g.cfg.weather_intensity;
      const int steps = ev_max_steps > 0 ? ev_max_steps : g.cfg.eval_max_steps;
      const auto seeds = ev_seeds.resolve(g.cfg, m);
      std::vector<app::EvalRow> rows;
      for (auto w : weathers) {
        const auto report =
            model ? app::evaluate_controller(*model, seeds, w, intensity, steps)
                  : app::evaluate_controller(sim::expert_controller(), m, seeds, w, intensity, steps);
        rows.push_back({"cli", ev_suite, name, m, report});
      }
      const auto path = ev_output.empty() ? out_path(g, "eval_" + name + ".csv") : ev_output;
      {
        auto os = open_csv(g, path, "fil evaluate", join_seeds(seeds));
        app::write_eval_csv(os, rows);
      }
      for (const auto& r : rows)
        std::printf("%s %s: hit %.4f miss %.4f straight %.4f total %.4f\n", name.c_str(),
                    std::string(sim::to_string(r.report.weather.kind)).c_str(),
                    r.report.hit_obstacle_rate(), r.report.miss_turn_rate(),
                    r.report.straight_mistake_rate(), r.report.total_mistake_rate());
    };
  });

  // compare
  auto* compare = app.add_subcommand("compare", "Paired scratch vs transferred training");
  std::string cp_guide, cp_data;
  std::vector<std::uint64_t> cp_seeds = {1, 2};
  compare->add_option("--guide", cp_guide, "Guide FILP model")->required();
  compare->add_option("--data", cp_data, "Local FILD demonstrations")->required();
  compare->add_option("--seeds", cp_seeds, "Training seeds (>= 2)")->delimiter(',');
  compare->callback([&] {
    action = [&] {
      const auto guide = nn::load_model(need_input(g, cp_guide));
      const auto data = imitation::load_demonstrations(need_input(g, cp_data));
      const auto plan = g.cfg.transfer_plan(imitation::init_seed(cp_seeds.front()));
      const auto cmp = transfer::compare_training(guide, data, plan, g.cfg.train, cp_seeds);
      const auto seeds = join_seeds(cp_seeds);
      {
        auto os = open_csv(g, out_path(g, "paired_curves.csv"), "fil compare", seeds);
        transfer::write_paired_curves_csv(os, cmp.runs);
      }
      {
        auto os = open_csv(g, out_path(g, "compare_summary.csv"), "fil compare", seeds);
        transfer::write_summary_csv(os, cmp);
      }
      const auto& s = cmp.summary;
      std::printf("epoch-0 val MSE scratch %.6f transferred %.6f (%d/%d head starts)\n",
                  s.mean_initial_val_scratch, s.mean_initial_val_transferred, s.head_start_wins,
                  s.seeds);
      std::printf("final val MSE scratch %.6f transferred %.6f\n", s.mean_final_val_scratch,
                  s.mean_final_val_transferred);
    };
  });

  // report
  auto* report = app.add_subcommand("report", "Table-1/Table-2 CSVs and SVG curves");
  std::vector<std::string> rp_eval, rp_offline, rp_curves;
  report->add_option("--eval", rp_eval, "Evaluation CSVs")->required();
  report->add_option("--offline", rp_offline, "Offline evaluation CSVs");
  report->add_option("--curves", rp_curves, "Curve CSVs (group,series,seed,epoch,...)");
  report->callback([&] {
    action = [&] {
      std::vector<app::EvalRow> eval;
      std::vector<app::OfflineRow> offline;
      std::vector<app::CurvePoint> curves;
      for (const auto& p : rp_eval) {
        std::ifstream in(need_input(g, p));
        auto rows = app::read_eval_csv(in);
        eval.insert(eval.end(), rows.begin(), rows.end());
      }
      for (const auto& p : rp_offline) {
        std::ifstream in(need_input(g, p));
        auto rows = app::read_offline_csv(in);
        offline.insert(offline.end(), rows.begin(), rows.end());
      }
      for (const auto& p : rp_curves) {
        std::ifstream in(need_input(g, p));
        auto rows = app::read_curves_csv(in);
        curves.insert(curves.end(), rows.begin(), rows.end());
      }
      {
        auto os = open_csv(g, out_path(g, "table1.csv"), "fil report", "-");
        app::write_table1_csv(os, eval, offline);
      }
      {
        auto os = open_csv(g, out_path(g, "table2.csv"), "fil report", "-");
        app::write_table2_csv(os, eval);
      }
      if (!curves.empty()) {
        std::ofstream os(out_path(g, "curves.svg"));
        app::write_curves_svg(os, curves, "Validation MSE");
      }
      std::cout << "wrote report to " << g.out_dir << '\n';
    };
  });

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Run every configured experiment end to end");
  pipeline->callback([&] {
    action = [&] {
      const auto outcome = app::run_pipeline(g.cfg, g.out_dir, [](const std::string& s) {
        std::cerr << s << std::endl;
      });
      for (const auto& f : outcome.files) std::cout << (fs::path(g.out_dir) / f).string() << '\n';
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!g.config_path.empty()) {
      if (!fs::exists(g.config_path)) throw MissingInput(g.config_path);
      g.cfg = app::ExperimentConfig::load(g.config_path);
    }
    for (const auto& kv : g.overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ArgumentError("--set expects key=value, got '" + kv + "'");
      g.cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    g.cfg.validate();
    action();
  } catch (const MissingInput& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
