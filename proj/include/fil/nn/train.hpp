#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fil/nn/kernels.hpp"
#include "fil/nn/optimizer.hpp"

namespace fil::nn {

struct EpochStats {
  int epoch = 0;  // 0 is the evaluation before any update
  double train_mse = 0.0;
  double val_mse = 0.0;
};

using LearningCurve = std::vector<EpochStats>;

struct TrainResult {
  LearningCurve curve;
  // Hash over the sequence of sample indices fed to each step. Two runs with
  // equal digests consumed identical batches in identical order.
  std::uint64_t batch_digest = 0;
  std::size_t steps = 0;
};

// Deterministic 90/10 split by stride: every tenth record (index % 10 == 9)
// goes to validation.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};
Split stride_split(std::size_t n);

// Mini-batch SGD on mean-squared error with L2 decay. Batches are drawn from
// a per-epoch shuffle seeded by cfg.seed. Increments model.version by one.
TrainResult train_regression(PolicyModel& model, std::span<const Sample> train,
                             std::span<const Sample> validation, const TrainConfig& cfg);

}  // namespace fil::nn
