#include "fil/nn/optimizer.hpp"

#include <cmath>

#include "fil/common/errors.hpp"

namespace fil::nn {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ArgumentError("learning_rate must be a finite non-negative number");
  if (!(weight_decay >= 0.0)) throw ArgumentError("weight_decay must be non-negative");
  if (epochs < 0) throw ArgumentError("epochs must be non-negative");
  if (batch_size <= 0) throw ArgumentError("batch_size must be positive");
}

void sgd_step(PolicyModel& model, const Gradients& grads, const TrainConfig& cfg) {
  if (grads.weights.size() != model.layers.size() || grads.biases.size() != model.layers.size())
    throw ShapeError("gradient layer count does not match model");
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    if (grads.weights[k].size() != model.layers[k].weights.size() ||
        grads.biases[k].size() != model.layers[k].biases.size())
      throw ShapeError("gradient block " + std::to_string(k) + " shape does not match model");
  }
  const double lr = cfg.learning_rate;
  const double decay = cfg.weight_decay;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    auto& layer = model.layers[k];
    if (layer.frozen) continue;
    auto update = [&](std::vector<float>& theta, const std::vector<double>& g) {
      for (std::size_t i = 0; i < theta.size(); ++i) {
        const double t = theta[i];
        theta[i] = static_cast<float>(t - lr * (g[i] + decay * t));
      }
    };
    update(layer.weights, grads.weights[k]);
    update(layer.biases, grads.biases[k]);
  }
}

}  // namespace fil::nn
