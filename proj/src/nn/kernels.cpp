#include "fil/nn/kernels.hpp"

#include <cmath>

#include "fil/common/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fil::nn {

namespace {

// Per-sample activation storage. post[0] holds the input, post[k + 1] the
// output of layer k; pre[k] the pre-activation of layer k.
struct Workspace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;
  std::vector<double> delta;
  std::vector<double> delta_prev;

  explicit Workspace(const PolicyModel& model) {
    post.emplace_back(static_cast<std::size_t>(model.input_dim()));
    for (const auto& l : model.layers) {
      pre.emplace_back(static_cast<std::size_t>(l.spec.out_dim));
      post.emplace_back(static_cast<std::size_t>(l.spec.out_dim));
    }
  }
};

double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    case Activation::identity: return z;
  }
  return z;
}

// Derivative expressed through the pre-activation and the activation value.
double activate_grad(Activation a, double z, double y) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - y * y;
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

void check_input(const PolicyModel& model, std::size_t n) {
  if (model.layers.empty()) throw ShapeError("model has no layers");
  if (n != static_cast<std::size_t>(model.input_dim()))
    throw ShapeError("input length " + std::to_string(n) + " does not match model input_dim " +
                     std::to_string(model.input_dim()));
}

double run_forward(const PolicyModel& model, const float* input, Workspace& ws) {
  auto& x0 = ws.post[0];
  for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = input[i];
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const auto& layer = model.layers[k];
    const auto& x = ws.post[k];
    auto& z = ws.pre[k];
    auto& y = ws.post[k + 1];
    const auto in = static_cast<std::size_t>(layer.spec.in_dim);
    const auto out = static_cast<std::size_t>(layer.spec.out_dim);
    if (layer.has_params()) {
      for (std::size_t o = 0; o < out; ++o) {
        const float* row = layer.weights.data() + o * in;
        double acc = layer.biases[o];
        for (std::size_t i = 0; i < in; ++i) acc += double{row[i]} * x[i];
        z[o] = acc;
      }
    } else {
      z = x;
    }
    for (std::size_t o = 0; o < out; ++o) y[o] = activate(layer.spec.activation, z[o]);
  }
  return kSteeringLimit * ws.post.back()[0];
}

std::size_t first_trainable(const PolicyModel& model) {
  for (std::size_t k = 0; k < model.layers.size(); ++k)
    if (!model.layers[k].frozen && model.layers[k].has_params()) return k;
  return model.layers.size();
}

// Adds d(scale * (p - y)^2)/d(theta) for the sample held in ws.
void accumulate(const PolicyModel& model, Workspace& ws, double output, double label,
                double scale, std::size_t stop, Gradients& grads) {
  const std::size_t n_layers = model.layers.size();
  ws.delta.assign(1, 2.0 * scale * (output - label) * kSteeringLimit);
  for (std::size_t k = n_layers; k-- > stop;) {
    const auto& layer = model.layers[k];
    const auto in = static_cast<std::size_t>(layer.spec.in_dim);
    const auto out = static_cast<std::size_t>(layer.spec.out_dim);
    const auto& z = ws.pre[k];
    const auto& y = ws.post[k + 1];
    const auto& x = ws.post[k];
    for (std::size_t o = 0; o < out; ++o)
      ws.delta[o] *= activate_grad(layer.spec.activation, z[o], y[o]);

    if (layer.has_params() && !layer.frozen) {
      auto& gw = grads.weights[k];
      auto& gb = grads.biases[k];
      for (std::size_t o = 0; o < out; ++o) {
        const double d = ws.delta[o];
        if (d == 0.0) continue;
        double* row = gw.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) row[i] += d * x[i];
        gb[o] += d;
      }
    }
    if (k == stop) break;

    if (layer.has_params()) {
      ws.delta_prev.assign(in, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        const double d = ws.delta[o];
        if (d == 0.0) continue;
        const float* row = layer.weights.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) ws.delta_prev[i] += d * row[i];
      }
      ws.delta.swap(ws.delta_prev);
    }
  }
}

void check_batch(const PolicyModel& model, std::span<const Sample> batch) {
  if (batch.empty()) throw ArgumentError("gradient requested for an empty batch");
  if (model.layers.empty()) throw ShapeError("model has no layers");
  for (const auto& s : batch)
    if (!(std::abs(s.label) <= kSteeringLimit + 1e-9))
      throw ArgumentError("label " + std::to_string(s.label) + " outside steering range");
}

// Sum over [begin, end) of per-sample gradients with the given scale.
void gradient_range(const PolicyModel& model, std::span<const Sample> batch, std::size_t begin,
                    std::size_t end, double scale, std::size_t stop, Gradients& out) {
  Workspace ws(model);
  for (std::size_t i = begin; i < end; ++i) {
    const double p = run_forward(model, batch[i].input, ws);
    accumulate(model, ws, p, batch[i].label, scale, stop, out);
  }
}

}  // namespace

double forward(const PolicyModel& model, std::span<const float> input) {
  check_input(model, input.size());
  Workspace ws(model);
  return run_forward(model, input.data(), ws);
}

Gradients backward(const PolicyModel& model, std::span<const Sample> batch) {
  return kernels::batch_gradient_parallel(model, batch);
}

double mse(const PolicyModel& model, std::span<const Sample> samples) {
  if (samples.empty()) return std::nan("");
  return kernels::sse_parallel(model, samples) / static_cast<double>(samples.size());
}

namespace kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

Gradients batch_gradient_serial(const PolicyModel& model, std::span<const Sample> batch) {
  check_batch(model, batch);
  Gradients g = Gradients::zeros_like(model);
  const std::size_t stop = first_trainable(model);
  if (stop == model.layers.size()) return g;
  gradient_range(model, batch, 0, batch.size(), 1.0 / static_cast<double>(batch.size()), stop, g);
  return g;
}

Gradients batch_gradient_parallel(const PolicyModel& model, std::span<const Sample> batch) {
  check_batch(model, batch);
  const std::size_t stop = first_trainable(model);
  if (stop == model.layers.size()) return Gradients::zeros_like(model);

  const double scale = 1.0 / static_cast<double>(batch.size());
  const std::size_t n_chunks = (batch.size() + kChunk - 1) / kChunk;
  std::vector<Gradients> partial(n_chunks);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n_chunks); ++c) {
    const auto begin = static_cast<std::size_t>(c) * kChunk;
    const auto end = std::min(begin + kChunk, batch.size());
    partial[c] = Gradients::zeros_like(model);
    gradient_range(model, batch, begin, end, scale, stop, partial[c]);
  }

  Gradients g = std::move(partial[0]);
  for (std::size_t c = 1; c < n_chunks; ++c) g.add(partial[c]);
  return g;
}

std::vector<double> predict_serial(const PolicyModel& model, std::span<const float* const> inputs) {
  std::vector<double> out(inputs.size());
  if (inputs.empty()) return out;
  Workspace ws(model);
  for (std::size_t i = 0; i < inputs.size(); ++i) out[i] = run_forward(model, inputs[i], ws);
  return out;
}

std::vector<double> predict_parallel(const PolicyModel& model,
                                     std::span<const float* const> inputs) {
  std::vector<double> out(inputs.size());
  if (inputs.empty()) return out;
#pragma omp parallel
  {
    Workspace ws(model);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(inputs.size()); ++i)
      out[i] = run_forward(model, inputs[i], ws);
  }
  return out;
}

double sse_serial(const PolicyModel& model, std::span<const Sample> samples) {
  Workspace ws(model);
  double s = 0.0;
  for (const auto& smp : samples) {
    const double e = run_forward(model, smp.input, ws) - smp.label;
    s += e * e;
  }
  return s;
}

double sse_parallel(const PolicyModel& model, std::span<const Sample> samples) {
  const std::size_t n_chunks = (samples.size() + kChunk - 1) / kChunk;
  std::vector<double> partial(n_chunks, 0.0);
#pragma omp parallel
  {
    Workspace ws(model);
#pragma omp for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n_chunks); ++c) {
      const auto begin = static_cast<std::size_t>(c) * kChunk;
      const auto end = std::min(begin + kChunk, samples.size());
      double s = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        const double e = run_forward(model, samples[i].input, ws) - samples[i].label;
        s += e * e;
      }
      partial[c] = s;
    }
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

}  // namespace kernels

}  // namespace fil::nn
