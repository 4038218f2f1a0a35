#pragma once

#include <span>
#include <string>
#include <vector>

#include "fil/common/bytes.hpp"
#include "fil/sim/observation.hpp"

namespace fil::sim {

// FILD: "FILD" | format u16 | modality u8 | count u32 |
//       per record: 256 f32 grid values + f32 steering label. Little-endian.
inline constexpr std::uint16_t kDatasetFormatVersion = 1;

Bytes encode_dataset(Modality modality, std::span<const Demonstration> records);

struct DecodedDataset {
  Modality modality;
  std::vector<Demonstration> records;
};
DecodedDataset decode_dataset(std::span<const std::uint8_t> bytes);

}  // namespace fil::sim
