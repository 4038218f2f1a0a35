#pragma once

#include <cstdint>
#include <vector>

#include "fil/sim/geometry.hpp"

namespace fil::sim {

enum class SegmentKind : std::uint8_t { straight = 0, arc = 1 };

// One piece of the closed centerline. Arcs carry a signed curvature
// (positive turns left); straights have curvature 0.
struct Segment {
  SegmentKind kind = SegmentKind::straight;
  Vec2 start;
  double start_heading = 0.0;
  double length = 0.0;
  double curvature = 0.0;
  double s_begin = 0.0;  // arc length of the start along the whole track

  Vec2 point_at(double s) const;
  double heading_at(double s) const;
  Vec2 center() const;  // arcs only

  bool operator==(const Segment&) const = default;
};

struct Obstacle {
  Vec2 center;
  double radius = 1.0;
  double s = 0.0;        // along-track position of the projection
  double lateral = 0.0;  // signed offset from the centerline, left positive
  bool operator==(const Obstacle&) const = default;
};

struct VehicleState {
  Vec2 position;
  double heading = 0.0;
  double speed = 6.0;
  bool operator==(const VehicleState&) const = default;
};

struct TrackProjection {
  std::size_t segment = 0;
  double s = 0.0;        // along-track coordinate in [0, total_length)
  double lateral = 0.0;  // signed cross-track error, left positive
  double distance = 0.0; // unsigned distance to the centerline
};

inline constexpr double kVehicleRadius = 1.0;
inline constexpr double kVehicleWidth = 2.0 * kVehicleRadius;
inline constexpr double kWheelbase = 2.5;
inline constexpr double kSpeed = 6.0;
inline constexpr double kDt = 0.1;

struct TrackWorld {
  std::vector<Segment> segments;
  std::vector<Vec2> centerline;  // sampled every kCenterlineStep meters, closed implicitly
  double track_half_width = 4.0;
  std::vector<Obstacle> obstacles;
  VehicleState vehicle;
  std::int64_t seed = 0;
  double total_length = 0.0;

  Vec2 point_at(double s) const;
  double heading_at(double s) const;
  const Segment& segment_at(double s) const;
  TrackProjection project(Vec2 p) const;

  // Wrapped signed along-track difference b - a in [-L/2, L/2).
  double along_delta(double a, double b) const;

  bool operator==(const TrackWorld&) const = default;
};

inline constexpr double kCenterlineStep = 1.0;

struct TrackParams {
  double half_width = 5.0;
  double min_straight = 36.0;
  double max_extra_straight = 30.0;
  double min_radius = 12.0;
  double max_radius = 20.0;
  double obstacle_radius = 2.0;
  double min_obstacle_offset = 2.0;
  double max_obstacle_offset = 3.0;
  double obstacle_margin = 12.0;   // keep-out from straight ends
  double obstacle_spacing = 30.0;  // minimum along-track gap between obstacles
};

// Closed track of n_turns arcs alternating with straights. Tracks with an odd
// seed turn right, even seeds turn left. Obstacles sit on straights only and
// leave at least kVehicleWidth of lateral clearance on one side. The vehicle
// starts at the beginning of segment 0 aligned with the centerline.
TrackWorld generate_track(std::int64_t seed, int n_turns, int n_obstacles,
                          const TrackParams& params = {});

// Seed-derived track layout used by data collection, scene banks and
// evaluation suites: n_turns cycles through [min_turns, max_turns].
struct TrackRecipe {
  int min_turns = 3;
  int max_turns = 6;
  int obstacles = 3;
  TrackParams params;
};

TrackWorld make_track(std::int64_t seed, const TrackRecipe& recipe = {});

// Moves the vehicle onto the centerline at along-track coordinate s.
void place_vehicle_at(TrackWorld& world, double s);

// Checks closure, non-self-intersection of the sampled centerline, obstacle
// placement and clearance. Throws GenerationError describing the violation.
void validate_track(const TrackWorld& world);

// Straight track long enough to never run out, for tests and probes.
TrackWorld straight_world(double length = 2000.0, double half_width = 4.0);

}  // namespace fil::sim
