#pragma once

#include <array>
#include <span>

#include "fil/common/modality.hpp"

namespace fil::sim {

inline constexpr int kGridSize = 16;
inline constexpr int kGridCells = kGridSize * kGridSize;
// Cell edge length in meters. The window spans 20 m ahead and +/-10 m sideways.
inline constexpr double kCellSize = 1.25;

// Egocentric forward-facing grid. Row 0 is farthest from the vehicle; column 0
// is leftmost. Values are in [0, 1].
struct Observation {
  Modality modality = Modality::occupancy;
  std::array<float, kGridCells> grid{};

  float& at(int row, int col) { return grid[static_cast<std::size_t>(row * kGridSize + col)]; }
  float at(int row, int col) const {
    return grid[static_cast<std::size_t>(row * kGridSize + col)];
  }
  std::span<const float> values() const { return grid; }
  bool operator==(const Observation&) const = default;
};

// A labeled frame produced by the expert.
struct Demonstration {
  Observation obs;
  float steering = 0.0f;
  bool operator==(const Demonstration&) const = default;
};

}  // namespace fil::sim
