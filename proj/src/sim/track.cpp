#include "fil/sim/track.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fil/common/errors.hpp"
#include "fil/common/rng.hpp"

namespace fil::sim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct LocalProjection {
  double t = 0.0;
  double lateral = 0.0;
  double distance = 0.0;
};

LocalProjection project_segment(const Segment& seg, Vec2 p) {
  LocalProjection out;
  if (seg.kind == SegmentKind::straight) {
    const Vec2 u = heading_vec(seg.start_heading);
    const Vec2 d = p - seg.start;
    const double t = std::clamp(dot(d, u), 0.0, seg.length);
    const Vec2 rel = p - (seg.start + u * t);
    out.t = t;
    out.distance = norm(rel);
    out.lateral = std::copysign(out.distance, cross(u, rel));
    return out;
  }
  const double sigma = seg.curvature > 0 ? 1.0 : -1.0;
  const double radius = 1.0 / std::abs(seg.curvature);
  const Vec2 c = seg.center();
  const Vec2 v = p - c;
  const double r = norm(v);
  const Vec2 s0 = seg.start - c;
  double delta = sigma * (std::atan2(v.y, v.x) - std::atan2(s0.y, s0.x));
  delta = std::fmod(delta, kTwoPi);
  if (delta < 0) delta += kTwoPi;
  const double sweep = seg.length / radius;
  if (r > 1e-12 && delta <= sweep) {
    out.t = delta * radius;
    out.distance = std::abs(r - radius);
    out.lateral = sigma * (radius - r);
    return out;
  }
  // Outside the angular sweep: nearest endpoint.
  const Vec2 end = seg.point_at(seg.length);
  const double d_start = norm(p - seg.start);
  const double d_end = norm(p - end);
  const bool at_end = d_end < d_start;
  out.t = at_end ? seg.length : 0.0;
  out.distance = at_end ? d_end : d_start;
  const Vec2 tangent = heading_vec(seg.heading_at(out.t));
  out.lateral = std::copysign(out.distance, cross(tangent, p - (at_end ? end : seg.start)));
  return out;
}

// Proper crossing of segments ab and cd. Near-collinear pairs produce cross
// products at rounding level with arbitrary signs, so those are treated as
// touching (not crossing), and disjoint bounding boxes are rejected first.
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  if (std::max(a.x, b.x) < std::min(c.x, d.x) || std::max(c.x, d.x) < std::min(a.x, b.x) ||
      std::max(a.y, b.y) < std::min(c.y, d.y) || std::max(c.y, d.y) < std::min(a.y, b.y))
    return false;
  constexpr double eps = 1e-9;
  const double d1 = cross(b - a, c - a);
  const double d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c);
  const double d4 = cross(d - c, b - c);
  if (std::abs(d1) < eps || std::abs(d2) < eps || std::abs(d3) < eps || std::abs(d4) < eps)
    return false;
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

void finish_segments(TrackWorld& w) {
  double s = 0.0;
  for (auto& seg : w.segments) {
    seg.s_begin = s;
    s += seg.length;
  }
  w.total_length = s;
  w.centerline.clear();
  for (double t = 0.0; t < w.total_length; t += kCenterlineStep) w.centerline.push_back(w.point_at(t));
}

}  // namespace

Vec2 Segment::point_at(double s) const {
  if (kind == SegmentKind::straight) return start + heading_vec(start_heading) * s;
  return center() - left_normal(start_heading + curvature * s) * (1.0 / curvature);
}

double Segment::heading_at(double s) const { return start_heading + curvature * s; }

Vec2 Segment::center() const { return start + left_normal(start_heading) * (1.0 / curvature); }

const Segment& TrackWorld::segment_at(double s) const {
  s = std::fmod(s, total_length);
  if (s < 0) s += total_length;
  auto it = std::upper_bound(segments.begin(), segments.end(), s,
                             [](double v, const Segment& seg) { return v < seg.s_begin; });
  return *std::prev(it);
}

Vec2 TrackWorld::point_at(double s) const {
  s = std::fmod(s, total_length);
  if (s < 0) s += total_length;
  const auto& seg = segment_at(s);
  return seg.point_at(s - seg.s_begin);
}

double TrackWorld::heading_at(double s) const {
  s = std::fmod(s, total_length);
  if (s < 0) s += total_length;
  const auto& seg = segment_at(s);
  return seg.heading_at(s - seg.s_begin);
}

TrackProjection TrackWorld::project(Vec2 p) const {
  TrackProjection best;
  best.distance = INFINITY;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto lp = project_segment(segments[i], p);
    if (lp.distance < best.distance) {
      best.segment = i;
      best.s = segments[i].s_begin + lp.t;
      best.lateral = lp.lateral;
      best.distance = lp.distance;
    }
  }
  if (best.s >= total_length) best.s -= total_length;
  return best;
}

double TrackWorld::along_delta(double a, double b) const {
  double d = std::fmod(b - a, total_length);
  if (d < -total_length / 2) d += total_length;
  if (d >= total_length / 2) d -= total_length;
  return d;
}

TrackWorld generate_track(std::int64_t seed, int n_turns, int n_obstacles, const TrackParams& p) {
  if (n_turns < 2) throw ArgumentError("generate_track needs n_turns >= 2");
  if (n_obstacles < 0) throw ArgumentError("generate_track needs n_obstacles >= 0");

  Rng rng(mix_seed(static_cast<std::uint64_t>(seed), 0x7ac));
  const auto n = static_cast<std::size_t>(n_turns);
  std::vector<double> turn(n), radius(n), straight(n);

  if (n == 2) {
    // Stadium: two half circles joined by equal straights.
    const double r = rng.uniform(p.min_radius, p.max_radius);
    const double l = p.min_straight + rng.uniform() * p.max_extra_straight;
    turn = {std::numbers::pi, std::numbers::pi};
    radius = {r, r};
    straight = {l, l};
  } else {
    std::vector<double> weight(n);
    double total = 0.0;
    for (auto& w : weight) total += (w = rng.uniform(1.0, 1.6));
    for (std::size_t i = 0; i < n; ++i) {
      turn[i] = kTwoPi * weight[i] / total;
      radius[i] = rng.uniform(p.min_radius, p.max_radius);
      straight[i] = p.min_straight + rng.uniform() * p.max_extra_straight;
    }
    // Straight i runs at heading dir[i]; all turns are left in this frame.
    std::vector<double> dir(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) dir[i + 1] = dir[i] + turn[i];
    Vec2 residual;
    for (std::size_t i = 0; i < n; ++i) {
      residual = residual + heading_vec(dir[i]) * straight[i];
      residual = residual + Vec2{std::sin(dir[i + 1]) - std::sin(dir[i]),
                                 std::cos(dir[i]) - std::cos(dir[i + 1])} *
                                radius[i];
    }
    // Close the loop by lengthening the two straights whose directions
    // bracket the missing displacement (turns < pi, so they span the plane).
    const Vec2 target = residual * -1.0;
    if (norm(target) > 1e-12) {
      double ang = std::atan2(target.y, target.x);
      if (ang < 0) ang += kTwoPi;
      std::size_t i = 0;
      while (i + 1 < n && !(ang >= dir[i] && ang < dir[i + 1])) ++i;
      const std::size_t j = (i + 1) % n;
      const Vec2 ui = heading_vec(dir[i]);
      const Vec2 uj = heading_vec(dir[j]);
      const double det = cross(ui, uj);
      straight[i] += cross(target, uj) / det;
      straight[j] += cross(ui, target) / det;
    }
  }

  const double sigma = (seed % 2 == 0) ? 1.0 : -1.0;
  TrackWorld world;
  world.seed = seed;
  world.track_half_width = p.half_width;
  Vec2 pos;
  double heading = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Segment s;
    s.kind = SegmentKind::straight;
    s.start = pos;
    s.start_heading = heading;
    s.length = straight[i];
    pos = s.point_at(s.length);
    world.segments.push_back(s);

    Segment a;
    a.kind = SegmentKind::arc;
    a.start = pos;
    a.start_heading = heading;
    a.curvature = sigma / radius[i];
    a.length = turn[i] * radius[i];
    pos = a.point_at(a.length);
    heading = a.heading_at(a.length);
    world.segments.push_back(a);
  }
  finish_segments(world);

  std::vector<const Segment*> straights;
  for (const auto& s : world.segments)
    if (s.kind == SegmentKind::straight && s.length > 2 * p.obstacle_margin) straights.push_back(&s);
  for (int k = 0; k < n_obstacles; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed && !straights.empty(); ++attempt) {
      const Segment& seg = *straights[rng.below(straights.size())];
      const double t = rng.uniform(p.obstacle_margin, seg.length - p.obstacle_margin);
      const double s = seg.s_begin + t;
      const bool crowded = std::any_of(
          world.obstacles.begin(), world.obstacles.end(), [&](const Obstacle& o) {
            return std::abs(world.along_delta(o.s, s)) < p.obstacle_spacing;
          });
      if (crowded) continue;
      Obstacle o;
      o.radius = p.obstacle_radius;
      o.s = s;
      o.lateral = (rng.coin() ? 1.0 : -1.0) * rng.uniform(p.min_obstacle_offset, p.max_obstacle_offset);
      o.center = seg.point_at(t) + left_normal(seg.start_heading) * o.lateral;
      world.obstacles.push_back(o);
      placed = true;
    }
    if (!placed)
      throw GenerationError("could not place obstacle " + std::to_string(k) + " on track seed " +
                            std::to_string(seed));
  }
  std::sort(world.obstacles.begin(), world.obstacles.end(),
            [](const Obstacle& a, const Obstacle& b) { return a.s < b.s; });

  place_vehicle_at(world, 0.0);
  validate_track(world);
  return world;
}

TrackWorld make_track(std::int64_t seed, const TrackRecipe& recipe) {
  if (recipe.max_turns < recipe.min_turns) throw ArgumentError("track recipe turn range is empty");
  const auto span = static_cast<std::uint64_t>(recipe.max_turns - recipe.min_turns + 1);
  const auto pick = mix_seed(static_cast<std::uint64_t>(seed), 0x51) % span;
  return generate_track(seed, recipe.min_turns + static_cast<int>(pick), recipe.obstacles,
                        recipe.params);
}

void place_vehicle_at(TrackWorld& world, double s) {
  world.vehicle.position = world.point_at(s);
  world.vehicle.heading = world.heading_at(s);
  world.vehicle.speed = kSpeed;
}

void validate_track(const TrackWorld& world) {
  if (world.segments.empty()) throw GenerationError("track has no segments");
  const auto& last = world.segments.back();
  const Vec2 end = last.point_at(last.length);
  if (norm(end - world.segments.front().start) > 1e-6)
    throw GenerationError("centerline is not closed");
  const double dh = wrap_angle(last.heading_at(last.length) - world.segments.front().start_heading);
  if (std::abs(dh) > 1e-6) throw GenerationError("centerline heading is not continuous");

  const auto& pts = world.centerline;
  const std::size_t m = pts.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 2; j < m; ++j) {
      if (i == 0 && j == m - 1) continue;  // closing edge is adjacent to the first
      if (segments_intersect(pts[i], pts[(i + 1) % m], pts[j], pts[(j + 1) % m]))
        throw GenerationError("centerline self-intersects near samples " + std::to_string(i) +
                              " and " + std::to_string(j));
    }
  }

  const double hw = world.track_half_width;
  for (const auto& o : world.obstacles) {
    if (world.segment_at(o.s).kind != SegmentKind::straight)
      throw GenerationError("obstacle placed off a straight");
    const double left_gap = hw - (o.lateral + o.radius);
    const double right_gap = (o.lateral - o.radius) + hw;
    if (std::max(left_gap, right_gap) < kVehicleWidth)
      throw GenerationError("obstacle blocks the lane");
  }
}

TrackWorld straight_world(double length, double half_width) {
  TrackWorld w;
  w.track_half_width = half_width;
  Segment s;
  s.kind = SegmentKind::straight;
  s.length = length;
  w.segments.push_back(s);
  finish_segments(w);
  place_vehicle_at(w, 0.0);
  return w;
}

}  // namespace fil::sim
