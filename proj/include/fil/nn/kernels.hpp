#pragma once

#include <span>
#include <vector>

#include "fil/nn/model.hpp"

namespace fil::nn {

// One training example: pointer to input_dim floats plus a scalar label.
struct Sample {
  const float* input;
  double label;
};

// Scaled steering output 0.69 * tanh(z) for one input. Activations are kept
// in double; only parameters are 32-bit.
double forward(const PolicyModel& model, std::span<const float> input);

// Mean-squared-error gradient of the batch with respect to every non-frozen
// parameter; frozen blocks are exactly zero. Throws on an empty batch.
Gradients backward(const PolicyModel& model, std::span<const Sample> batch);

double mse(const PolicyModel& model, std::span<const Sample> samples);

// Two implementations of the batch kernels. The serial versions are the
// straightforward references kept for testing. The parallel versions split
// the batch into fixed-size chunks whose partial sums are combined in chunk
// order, so results do not depend on the thread count.
namespace kernels {

inline constexpr std::size_t kChunk = 16;

Gradients batch_gradient_serial(const PolicyModel& model, std::span<const Sample> batch);
Gradients batch_gradient_parallel(const PolicyModel& model, std::span<const Sample> batch);

std::vector<double> predict_serial(const PolicyModel& model,
                                   std::span<const float* const> inputs);
std::vector<double> predict_parallel(const PolicyModel& model,
                                     std::span<const float* const> inputs);

double sse_serial(const PolicyModel& model, std::span<const Sample> samples);
double sse_parallel(const PolicyModel& model, std::span<const Sample> samples);

int max_threads();

}  // namespace kernels

}  // namespace fil::nn
