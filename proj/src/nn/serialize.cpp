#include "fil/nn/serialize.hpp"

#include "fil/common/digest.hpp"

namespace fil::nn {

Bytes serialize_params(const PolicyModel& model) {
  validate_spec(model.spec());
  ByteWriter w;
  w.tag("FILP");
  w.u16(kParamFormatVersion);
  w.u32(model.version);
  w.u8(static_cast<std::uint8_t>(model.modality));
  w.u8(static_cast<std::uint8_t>(model.layers.size()));
  for (const auto& layer : model.layers) {
    w.u8(static_cast<std::uint8_t>((static_cast<unsigned>(layer.spec.kind) << 4) |
                                   static_cast<unsigned>(layer.spec.activation)));
    w.u16(static_cast<std::uint16_t>(layer.spec.in_dim));
    w.u16(static_cast<std::uint16_t>(layer.spec.out_dim));
    w.u8(layer.frozen ? 1 : 0);
    for (float v : layer.weights) w.f32(v);
    for (float v : layer.biases) w.f32(v);
  }
  return w.take();
}

PolicyModel deserialize_params(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_tag("FILP");
  const auto fmt_at = r.offset();
  if (r.u16() != kParamFormatVersion) throw FormatError("unsupported FILP format version", fmt_at);
  PolicyModel model;
  model.version = r.u32();
  const auto mod_at = r.offset();
  const auto modality = modality_from_tag(r.u8());
  if (!modality) throw FormatError("unknown modality tag", mod_at);
  model.modality = *modality;
  const auto count_at = r.offset();
  const int count = r.u8();
  if (count == 0) throw FormatError("parameter file has zero layers", count_at);

  NetSpec spec;
  for (int k = 0; k < count; ++k) {
    const auto layer_at = r.offset();
    const std::uint8_t kind_byte = r.u8();
    const unsigned kind = kind_byte >> 4;
    const unsigned act = kind_byte & 0x0f;
    if (kind > 1 || act > 2) throw FormatError("invalid layer kind byte", layer_at);
    Layer layer;
    layer.spec.kind = static_cast<LayerKind>(kind);
    layer.spec.activation = static_cast<Activation>(act);
    layer.spec.in_dim = r.u16();
    layer.spec.out_dim = r.u16();
    const auto frozen_at = r.offset();
    const std::uint8_t frozen = r.u8();
    if (frozen > 1) throw FormatError("invalid frozen flag", frozen_at);
    layer.frozen = frozen == 1;
    if (layer.spec.in_dim == 0 || layer.spec.out_dim == 0)
      throw FormatError("zero layer dimension", layer_at);
    if (!spec.empty() && spec.back().out_dim != layer.spec.in_dim)
      throw FormatError("layer " + std::to_string(k) + " does not chain with previous layer",
                        layer_at);
    if (layer.has_params()) {
      const auto n_w = static_cast<std::size_t>(layer.spec.in_dim) * layer.spec.out_dim;
      r.need((n_w + layer.spec.out_dim) * 4);
      layer.weights.resize(n_w);
      layer.biases.resize(static_cast<std::size_t>(layer.spec.out_dim));
      for (auto& v : layer.weights) v = r.f32();
      for (auto& v : layer.biases) v = r.f32();
    } else if (layer.spec.in_dim != layer.spec.out_dim) {
      throw FormatError("activation layer changes dimension", layer_at);
    }
    spec.push_back(layer.spec);
    model.layers.push_back(std::move(layer));
  }
  if (!r.done()) throw FormatError("trailing bytes after parameter payload", r.offset());
  return model;
}

std::uint64_t param_digest(const PolicyModel& model) {
  return Fnv64().add(serialize_params(model)).value();
}

void save_model(const std::string& path, const PolicyModel& model) {
  write_file(path, serialize_params(model));
}

PolicyModel load_model(const std::string& path) { return deserialize_params(read_file(path)); }

}  // namespace fil::nn
