#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace fil {

// Sensor encoding of a scene. Wire value is the enum value.
enum class Modality : std::uint8_t { occupancy = 0, distance = 1, semantic = 2 };

inline constexpr std::array<Modality, 3> kAllModalities = {
    Modality::occupancy, Modality::distance, Modality::semantic};

inline constexpr std::size_t index_of(Modality m) { return static_cast<std::size_t>(m); }

inline std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::occupancy: return "occupancy";
    case Modality::distance: return "distance";
    case Modality::semantic: return "semantic";
  }
  return "unknown";
}

inline std::optional<Modality> parse_modality(std::string_view s) {
  for (auto m : kAllModalities)
    if (to_string(m) == s) return m;
  return std::nullopt;
}

inline std::optional<Modality> modality_from_tag(std::uint8_t tag) {
  if (tag > 2) return std::nullopt;
  return static_cast<Modality>(tag);
}

}  // namespace fil
