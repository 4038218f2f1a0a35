#pragma once

#include <iosfwd>

#include "fil/imitation/demonstrations.hpp"
#include "fil/nn/train.hpp"

namespace fil::imitation {

struct TrainedPolicy {
  nn::PolicyModel model;
  nn::LearningCurve curve;
  std::uint64_t batch_digest = 0;
};

// Fresh model from cfg.seed, trained by mini-batch SGD on a 90/10 stride
// split of the demonstrations. Returns the per-epoch (train, validation) MSE.
TrainedPolicy train_bc(const DemonstrationSet& data, std::span<const nn::LayerSpec> spec,
                       const nn::TrainConfig& cfg);

// Continues training an existing model on the same split and loop; frozen
// layers are honored by the optimizer.
TrainedPolicy continue_training(nn::PolicyModel model, const DemonstrationSet& data,
                                const nn::TrainConfig& cfg);

inline constexpr double kOfflineMistakeThreshold = 0.1;  // radians

struct OfflineMetrics {
  double mse = 0.0;
  double mistake_rate = 0.0;
  std::size_t mistakes = 0;
  std::size_t n = 0;
};

// MSE and fraction of records with |prediction - label| > 0.1 rad.
OfflineMetrics evaluate_offline(const nn::PolicyModel& model, const DemonstrationSet& data);

void write_curve_csv(std::ostream& os, const nn::LearningCurve& curve);

std::uint64_t init_seed(std::uint64_t train_seed);

}  // namespace fil::imitation
