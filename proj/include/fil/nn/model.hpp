#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fil/common/modality.hpp"
#include "fil/nn/layer_spec.hpp"

namespace fil::nn {

// One layer's parameters. Dense weights are row-major out_dim x in_dim.
// Activation layers carry no parameters.
struct Layer {
  LayerSpec spec;
  std::vector<float> weights;
  std::vector<float> biases;
  bool frozen = false;

  bool has_params() const { return spec.kind == LayerKind::dense; }
};

// Parameter container for a steering policy. This is the unit that is
// trained locally, shipped over the wire and fused in the cloud.
struct PolicyModel {
  Modality modality = Modality::occupancy;
  std::uint32_t version = 0;
  std::vector<Layer> layers;

  NetSpec spec() const;
  int input_dim() const { return layers.front().spec.in_dim; }
  std::size_t parameter_count() const;
  std::size_t frozen_count() const;
  std::size_t trainable_count() const;

  void set_frozen_prefix(std::size_t k);

  // Squared L2 norm over every parameter, accumulated in double.
  double squared_norm() const;

  // Bitwise equality (float bit patterns, not numeric comparison).
  bool operator==(const PolicyModel& other) const;
};

// Per-layer gradients in double precision. Mirrors the model's layout.
struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  static Gradients zeros_like(const PolicyModel& model);
  void add(const Gradients& other);
  void scale(double s);
  double squared_norm() const;
};

// Weights ~ U(-sqrt(6/in_dim), +sqrt(6/in_dim)), biases zero, version 0,
// nothing frozen. Identical (spec, seed) give bit-identical models.
PolicyModel init_model(std::span<const LayerSpec> spec, std::uint64_t seed,
                       Modality modality = Modality::occupancy);

// Re-draws parameters of layers [from, end) with the init distribution.
void reinitialize_layers(PolicyModel& model, std::size_t from, std::uint64_t seed);

}  // namespace fil::nn
