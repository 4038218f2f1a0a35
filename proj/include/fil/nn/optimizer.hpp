#pragma once

#include <cstdint>

#include "fil/nn/model.hpp"

namespace fil::nn {

enum class Loss : std::uint8_t { mse };

struct TrainConfig {
  double learning_rate = 0.01;
  double weight_decay = 0.0;  // lambda of the (lambda/2)*||theta||^2 penalty
  int epochs = 50;
  int batch_size = 128;
  std::uint64_t seed = 1;
  Loss loss = Loss::mse;

  void validate() const;
};

// theta <- theta - lr * (grad + weight_decay * theta) for non-frozen
// parameters. Frozen layers are left bit-identical.
void sgd_step(PolicyModel& model, const Gradients& grads, const TrainConfig& cfg);

}  // namespace fil::nn
