#pragma once

#include <array>

#include "fil/sim/observation.hpp"
#include "fil/sim/track.hpp"

namespace fil::sim {

enum class CellClass : std::uint8_t { road = 0, obstacle = 1, off_road = 2 };

// Ground-truth classification of every cell of the egocentric window.
std::array<CellClass, kGridCells> classify_window(const TrackWorld& world);

// occupancy: 1 where off-road or obstacle, else 0.
// distance:  road cells hold distance to the nearest boundary or obstacle
//            divided by the half width (clamped to [1/255, 1]); blocked cells 0.
// semantic:  0 road, 0.5 obstacle, 1 off-road.
Observation render(const TrackWorld& world, Modality modality);

// Renders all three modalities from one classification pass.
std::array<Observation, 3> render_all(const TrackWorld& world);

// Mask of cells that are not drivable (off-road or obstacle), recovered from
// a rendered observation of any modality.
std::array<bool, kGridCells> blocked_mask(const Observation& obs);

// Window cell center in world coordinates.
Vec2 cell_center(const VehicleState& vehicle, int row, int col);

}  // namespace fil::sim
