#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fil/app/config.hpp"
#include "fil/app/report.hpp"
#include "fil/fusion/fuse.hpp"
#include "fil/transfer/transfer.hpp"

namespace fil::app {

// Track seed layout. Experiments draw disjoint seed ranges; the held-out test
// and closed-loop suites are shared by all experiments.
//
// A robot's environment decides what its tracks contain: 0 only left turns,
// 1 only right turns, 2 both directions but no obstacles. In experiment e
// modality m gets environment (m + e) % 3, so the three robots never share an
// environment and each one misses a situation the other two have seen.
int robot_environment(std::int64_t experiment, Modality m);
sim::TrackRecipe robot_recipe(int environment);
std::vector<std::int64_t> robot_track_seeds(std::int64_t experiment, Modality m, int count);
std::vector<std::int64_t> bank_track_seeds(std::int64_t experiment, int count);
std::vector<std::int64_t> transfer_track_seeds(std::int64_t experiment, Modality m, int count);
std::vector<std::int64_t> test_track_seeds(int count);
std::vector<std::int64_t> eval_track_seeds(int count);
std::vector<std::uint64_t> arm_seeds(std::int64_t experiment, int count);

std::string robot_id(Modality m);

// Closed-loop episodes over the given tracks; weather seed = track seed.
sim::EvalReport evaluate_controller(const sim::Controller& controller, Modality modality,
                                    std::span<const std::int64_t> tracks, sim::WeatherKind weather,
                                    double intensity, int max_steps);
sim::EvalReport evaluate_controller(const nn::PolicyModel& model, std::span<const std::int64_t> tracks,
                                    sim::WeatherKind weather, double intensity, int max_steps);

struct StageTimes {
  double local = 0.0;        // demonstrations + local training
  double cloud = 0.0;        // bank, uploads, fusion, guide requests
  double offline = 0.0;      // held-out offline evaluation
  double transfer = 0.0;     // paired scratch / transferred training
  double closed_loop = 0.0;  // Table-1 and Table-2 episodes
};

struct RobotOutcome {
  Modality modality = Modality::occupancy;
  int environment = 0;
  imitation::TrainedPolicy local;
  nn::PolicyModel guide;
  std::uint32_t guide_round = 0;
  imitation::OfflineMetrics local_test;
  imitation::OfflineMetrics guide_test;
  transfer::Comparison comparison;
};

struct ExperimentOutcome {
  std::int64_t seed = 0;
  std::vector<RobotOutcome> robots;  // occupancy, distance, semantic
  std::vector<fusion::PseudoLabel> labels;
  std::vector<EvalRow> eval;
  StageTimes times;
};

using Log = std::function<void(const std::string&)>;

// One full round of the framework: three robots train locally and upload over
// the wire protocol, the cloud fuses and serves guides, each robot then runs
// a paired scratch / transferred comparison on new tracks, and all controllers
// are evaluated in closed loop.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, std::int64_t seed,
                                 const Log& log = {});

struct PipelineOutcome {
  std::vector<ExperimentOutcome> experiments;
  std::vector<std::string> files;  // written outputs, relative to the out dir
};

// All configured experiments, then the CSV and SVG outputs under out_dir.
PipelineOutcome run_pipeline(const ExperimentConfig& cfg, const std::string& out_dir,
                             const Log& log = {});

void write_outputs(const ExperimentConfig& cfg, PipelineOutcome& outcome,
                   const std::string& out_dir);

}  // namespace fil::app
