#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "fil/imitation/behavior_cloning.hpp"

namespace fil::transfer {

enum class HeadInit { keep_guide, reinitialize };

// Layers [0, split_index) are frozen, [split_index, end) are trained.
struct TransferPlan {
  std::size_t split_index = 1;
  HeadInit head_init = HeadInit::keep_guide;
  double lr_scale = 1.0;
  std::uint64_t head_seed = 0;  // used by HeadInit::reinitialize
};

// Freezes everything except the final two dense layers.
std::size_t default_split_index(std::span<const nn::LayerSpec> spec);
TransferPlan default_plan(const nn::PolicyModel& guide);

// Throws ArgumentError unless 0 < split_index < layer count and lr_scale > 0.
void validate_plan(const TransferPlan& plan, const nn::PolicyModel& guide);

struct Lineage {
  std::uint32_t guide_version = 0;
  std::uint64_t guide_digest = 0;
  std::size_t split_index = 0;
};

struct TransferredModel {
  nn::PolicyModel model;  // version 0, frozen prefix set
  Lineage lineage;
};

TransferredModel transfer_init(const nn::PolicyModel& guide, const TransferPlan& plan);

// Trains the unfrozen layers on local demonstrations with the behavior-cloning
// loop. Throws ArgumentError when no layer is frozen or every layer is.
imitation::TrainedPolicy fine_tune(nn::PolicyModel model, const imitation::DemonstrationSet& data,
                                   const nn::TrainConfig& cfg);

// cfg with learning_rate multiplied by plan.lr_scale.
nn::TrainConfig scaled_config(const nn::TrainConfig& cfg, const TransferPlan& plan);

// Digest of everything that should match between the two arms of a
// comparison: training hyperparameters and the demonstration records.
std::uint64_t training_digest(const nn::TrainConfig& cfg, const imitation::DemonstrationSet& data);

enum class Arm { scratch, transferred };
std::string_view to_string(Arm arm);

struct ArmRun {
  std::uint64_t seed = 0;
  Arm arm = Arm::scratch;
  nn::LearningCurve curve;
  std::uint64_t batch_digest = 0;
  std::uint64_t config_digest = 0;
  imitation::OfflineMetrics final_validation;  // on the validation split
  nn::PolicyModel model;
};

struct ComparisonSummary {
  double mean_initial_val_scratch = 0.0;
  double mean_initial_val_transferred = 0.0;
  double mean_final_val_scratch = 0.0;
  double mean_final_val_transferred = 0.0;
  int seeds = 0;
  int head_start_wins = 0;  // seeds where transferred epoch-0 val < scratch epoch-0 val
};

struct Comparison {
  std::vector<ArmRun> runs;  // scratch then transferred, per seed in order
  ComparisonSummary summary;
};

// For each seed, trains from scratch and from the transferred guide with the
// same data, batch order and hyperparameters (seed set per run; the
// transferred arm's learning rate is scaled by plan.lr_scale). Needs >= 2 seeds.
Comparison compare_training(const nn::PolicyModel& guide, const imitation::DemonstrationSet& data,
                            const TransferPlan& plan, const nn::TrainConfig& cfg,
                            std::span<const std::uint64_t> seeds);

void write_paired_curves_csv(std::ostream& os, std::span<const ArmRun> runs);
void write_summary_csv(std::ostream& os, const Comparison& cmp);

}  // namespace fil::transfer
