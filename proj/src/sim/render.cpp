#include "fil/sim/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fil::sim {

namespace {

struct CellInfo {
  CellClass cls = CellClass::road;
  double clearance = 0.0;  // meters to the nearest boundary or obstacle edge (road cells)
};

std::array<CellInfo, kGridCells> survey(const TrackWorld& world) {
  std::array<CellInfo, kGridCells> cells;
  const double hw = world.track_half_width;
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      const Vec2 p = cell_center(world.vehicle, r, c);
      auto& cell = cells[static_cast<std::size_t>(r * kGridSize + c)];
      double obstacle_gap = std::numeric_limits<double>::infinity();
      for (const auto& o : world.obstacles)
        obstacle_gap = std::min(obstacle_gap, norm(p - o.center) - o.radius);
      if (obstacle_gap <= 0.0) {
        cell.cls = CellClass::obstacle;
        continue;
      }
      const double off_center = world.project(p).distance;
      if (off_center >= hw) {
        cell.cls = CellClass::off_road;
        continue;
      }
      cell.clearance = std::min(hw - off_center, obstacle_gap);
    }
  }
  return cells;
}

float encode(Modality m, const CellInfo& cell, double half_width) {
  switch (m) {
    case Modality::occupancy: return cell.cls == CellClass::road ? 0.0f : 1.0f;
    case Modality::distance: {
      if (cell.cls != CellClass::road) return 0.0f;
      const double v = std::clamp(cell.clearance / half_width, 1.0 / 255.0, 1.0);
      return static_cast<float>(v);
    }
    case Modality::semantic:
      switch (cell.cls) {
        case CellClass::road: return 0.0f;
        case CellClass::obstacle: return 0.5f;
        case CellClass::off_road: return 1.0f;
      }
  }
  return 0.0f;
}

}  // namespace

Vec2 cell_center(const VehicleState& vehicle, int row, int col) {
  const double forward = (kGridSize - 1 - row + 0.5) * kCellSize;
  const double lateral = (kGridSize / 2 - col - 0.5) * kCellSize;
  return vehicle.position + heading_vec(vehicle.heading) * forward +
         left_normal(vehicle.heading) * lateral;
}

std::array<CellClass, kGridCells> classify_window(const TrackWorld& world) {
  const auto cells = survey(world);
  std::array<CellClass, kGridCells> out;
  for (std::size_t i = 0; i < cells.size(); ++i) out[i] = cells[i].cls;
  return out;
}

Observation render(const TrackWorld& world, Modality modality) {
  const auto cells = survey(world);
  Observation obs;
  obs.modality = modality;
  for (std::size_t i = 0; i < cells.size(); ++i)
    obs.grid[i] = encode(modality, cells[i], world.track_half_width);
  return obs;
}

std::array<Observation, 3> render_all(const TrackWorld& world) {
  const auto cells = survey(world);
  std::array<Observation, 3> out;
  for (auto m : kAllModalities) {
    auto& obs = out[index_of(m)];
    obs.modality = m;
    for (std::size_t i = 0; i < cells.size(); ++i)
      obs.grid[i] = encode(m, cells[i], world.track_half_width);
  }
  return out;
}

std::array<bool, kGridCells> blocked_mask(const Observation& obs) {
  std::array<bool, kGridCells> mask{};
  for (std::size_t i = 0; i < obs.grid.size(); ++i) {
    const float v = obs.grid[i];
    switch (obs.modality) {
      case Modality::occupancy: mask[i] = v > 0.5f; break;
      case Modality::distance: mask[i] = v <= 0.0f; break;
      case Modality::semantic: mask[i] = v > 0.25f; break;
    }
  }
  return mask;
}

}  // namespace fil::sim
