#include "fil/nn/layer_spec.hpp"

#include <sstream>

#include "fil/common/errors.hpp"

namespace fil::nn {

namespace {

const char* name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "?";
}

}  // namespace

void validate_spec(std::span<const LayerSpec> spec) {
  if (spec.empty()) throw ShapeError("network spec has no layers");
  if (spec.size() > 255) throw ShapeError("network spec has more than 255 layers");
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const auto& l = spec[k];
    if (l.in_dim <= 0 || l.out_dim <= 0 || l.in_dim > 65535 || l.out_dim > 65535)
      throw ShapeError("layer " + std::to_string(k) + " has invalid dims " +
                       std::to_string(l.in_dim) + "->" + std::to_string(l.out_dim));
    if (l.kind == LayerKind::activation && l.in_dim != l.out_dim)
      throw ShapeError("activation layer " + std::to_string(k) + " must have in_dim == out_dim");
    if (k + 1 < spec.size() && l.out_dim != spec[k + 1].in_dim)
      throw ShapeError("layer " + std::to_string(k) + " out_dim " + std::to_string(l.out_dim) +
                       " does not match layer " + std::to_string(k + 1) + " in_dim " +
                       std::to_string(spec[k + 1].in_dim));
  }
}

void validate_policy_spec(std::span<const LayerSpec> spec) {
  validate_spec(spec);
  const auto& last = spec.back();
  if (last.out_dim != 1 || last.activation != Activation::tanh)
    throw ShapeError("policy head must be a single tanh output");
}

NetSpec default_policy_spec(int input_dim) {
  return {LayerSpec::dense(input_dim, 64, Activation::relu),
          LayerSpec::dense(64, 32, Activation::relu),
          LayerSpec::dense(32, 1, Activation::tanh)};
}

NetSpec policy_spec_from_hidden(int input_dim, std::span<const int> hidden) {
  NetSpec spec;
  int in = input_dim;
  for (int h : hidden) {
    spec.push_back(LayerSpec::dense(in, h, Activation::relu));
    in = h;
  }
  spec.push_back(LayerSpec::dense(in, 1, Activation::tanh));
  validate_policy_spec(spec);
  return spec;
}

std::string describe(std::span<const LayerSpec> spec) {
  std::ostringstream os;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    if (k) os << ", ";
    os << (spec[k].kind == LayerKind::dense ? "dense " : "act ") << spec[k].in_dim << "->"
       << spec[k].out_dim << ' ' << name(spec[k].activation);
  }
  return os.str();
}

}  // namespace fil::nn
