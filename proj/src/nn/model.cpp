#include "fil/nn/model.hpp"

#include <cmath>
#include <cstring>

#include "fil/common/rng.hpp"

namespace fil::nn {

namespace {

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

void draw_layer(Layer& layer, Rng& rng) {
  if (!layer.has_params()) return;
  const double bound = std::sqrt(6.0 / layer.spec.in_dim);
  for (auto& w : layer.weights) w = static_cast<float>(rng.uniform(-bound, bound));
  std::fill(layer.biases.begin(), layer.biases.end(), 0.0f);
}

}  // namespace

NetSpec PolicyModel::spec() const {
  NetSpec s;
  s.reserve(layers.size());
  for (const auto& l : layers) s.push_back(l.spec);
  return s;
}

std::size_t PolicyModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.biases.size();
  return n;
}

std::size_t PolicyModel::frozen_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.frozen ? 1 : 0;
  return n;
}

std::size_t PolicyModel::trainable_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += (!l.frozen && l.has_params()) ? 1 : 0;
  return n;
}

void PolicyModel::set_frozen_prefix(std::size_t k) {
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].frozen = i < k;
}

double PolicyModel::squared_norm() const {
  double s = 0.0;
  for (const auto& l : layers) {
    for (float w : l.weights) s += double{w} * w;
    for (float b : l.biases) s += double{b} * b;
  }
  return s;
}

bool PolicyModel::operator==(const PolicyModel& o) const {
  if (modality != o.modality || version != o.version || layers.size() != o.layers.size())
    return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& a = layers[i];
    const auto& b = o.layers[i];
    if (!(a.spec == b.spec) || a.frozen != b.frozen || !same_bits(a.weights, b.weights) ||
        !same_bits(a.biases, b.biases))
      return false;
  }
  return true;
}

Gradients Gradients::zeros_like(const PolicyModel& model) {
  Gradients g;
  for (const auto& l : model.layers) {
    g.weights.emplace_back(l.weights.size(), 0.0);
    g.biases.emplace_back(l.biases.size(), 0.0);
  }
  return g;
}

void Gradients::add(const Gradients& other) {
  for (std::size_t k = 0; k < weights.size(); ++k) {
    for (std::size_t i = 0; i < weights[k].size(); ++i) weights[k][i] += other.weights[k][i];
    for (std::size_t i = 0; i < biases[k].size(); ++i) biases[k][i] += other.biases[k][i];
  }
}

void Gradients::scale(double s) {
  for (auto& w : weights)
    for (auto& v : w) v *= s;
  for (auto& b : biases)
    for (auto& v : b) v *= s;
}

double Gradients::squared_norm() const {
  double s = 0.0;
  for (const auto& w : weights)
    for (double v : w) s += v * v;
  for (const auto& b : biases)
    for (double v : b) s += v * v;
  return s;
}

PolicyModel init_model(std::span<const LayerSpec> spec, std::uint64_t seed, Modality modality) {
  validate_spec(spec);
  PolicyModel model;
  model.modality = modality;
  Rng rng(seed);
  for (const auto& s : spec) {
    Layer layer;
    layer.spec = s;
    if (s.kind == LayerKind::dense) {
      layer.weights.resize(static_cast<std::size_t>(s.in_dim) * s.out_dim);
      layer.biases.resize(static_cast<std::size_t>(s.out_dim));
    }
    draw_layer(layer, rng);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

void reinitialize_layers(PolicyModel& model, std::size_t from, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t k = from; k < model.layers.size(); ++k) draw_layer(model.layers[k], rng);
}

}  // namespace fil::nn
