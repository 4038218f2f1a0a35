#pragma once

#include <span>

#include "fil/common/bytes.hpp"
#include "fil/nn/model.hpp"

namespace fil::nn {

inline constexpr char kParamMagic[] = "FILP";
inline constexpr std::uint16_t kParamFormatVersion = 1;

// FILP layout, all integers little-endian:
//   "FILP" | format u16 | model version u32 | modality u8 | layer count u8 |
//   per layer: kind u8 | in_dim u16 | out_dim u16 | frozen u8 |
//              weights f32[out*in] row-major | biases f32[out]
// The kind byte packs (layer kind << 4) | activation. Activation layers have
// no weight or bias payload.
Bytes serialize_params(const PolicyModel& model);
PolicyModel deserialize_params(std::span<const std::uint8_t> bytes);

// FNV-1a over the serialized form.
std::uint64_t param_digest(const PolicyModel& model);

void save_model(const std::string& path, const PolicyModel& model);
PolicyModel load_model(const std::string& path);

}  // namespace fil::nn
