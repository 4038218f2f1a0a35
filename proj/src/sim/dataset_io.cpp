#include "fil/sim/dataset_io.hpp"

#include <cmath>

namespace fil::sim {

Bytes encode_dataset(Modality modality, std::span<const Demonstration> records) {
  ByteWriter w;
  w.tag("FILD");
  w.u16(kDatasetFormatVersion);
  w.u8(static_cast<std::uint8_t>(modality));
  w.u32(static_cast<std::uint32_t>(records.size()));
  w.bytes().reserve(11 + records.size() * (kGridCells + 1) * 4);
  for (const auto& r : records) {
    for (float v : r.obs.grid) w.f32(v);
    w.f32(r.steering);
  }
  return w.take();
}

DecodedDataset decode_dataset(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_tag("FILD");
  const auto ver_at = r.offset();
  if (r.u16() != kDatasetFormatVersion) throw FormatError("unsupported FILD version", ver_at);
  const auto mod_at = r.offset();
  const auto modality = modality_from_tag(r.u8());
  if (!modality) throw FormatError("unknown modality tag", mod_at);
  const std::uint32_t count = r.u32();
  r.need(static_cast<std::size_t>(count) * (kGridCells + 1) * 4);
  DecodedDataset out{*modality, {}};
  out.records.resize(count);
  for (auto& rec : out.records) {
    rec.obs.modality = *modality;
    for (auto& v : rec.obs.grid) v = r.f32();
    rec.steering = r.f32();
  }
  if (!r.done()) throw FormatError("trailing bytes after dataset records", r.offset());
  return out;
}

}  // namespace fil::sim
