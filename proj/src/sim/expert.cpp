#include "fil/sim/expert.hpp"

#include <algorithm>
#include <cmath>

#include "fil/common/errors.hpp"
#include "fil/nn/layer_spec.hpp"

namespace fil::sim {

double avoidance_shift(const TrackWorld& world, double s, const ExpertParams& p) {
  double shift = 0.0;
  for (const auto& o : world.obstacles) {
    // Position of s relative to the obstacle; negative means before it.
    const double d = world.along_delta(o.s, s);
    double weight = 0.0;
    const double full_from = -p.hold_before;
    const double ramp_from = full_from - p.ramp_in;
    if (d >= full_from && d <= p.hold_after) {
      weight = 1.0;
    } else if (d > ramp_from && d < full_from) {
      weight = (d - ramp_from) / p.ramp_in;
    } else if (d > p.hold_after && d < p.hold_after + p.ramp_out) {
      weight = 1.0 - (d - p.hold_after) / p.ramp_out;
    }
    if (weight == 0.0) continue;
    const double side = o.lateral >= 0.0 ? 1.0 : -1.0;
    const double target = o.lateral - side * (o.radius + kVehicleRadius + p.pass_margin);
    shift += weight * target;
  }
  return shift;
}

double expert_policy(const TrackWorld& world, const ExpertParams& p) {
  const auto& v = world.vehicle;
  const auto proj = world.project(v.position);
  if (proj.distance > 5.0 * world.track_half_width)
    throw OffTrackError("expert: vehicle is " + std::to_string(proj.distance) +
                            " m from the centerline on track seed " + std::to_string(world.seed),
                        world.seed);
  const double s_target = proj.s + p.lookahead;
  const Vec2 target = world.point_at(s_target) +
                      left_normal(world.heading_at(s_target)) * avoidance_shift(world, s_target, p);
  const Vec2 d = target - v.position;
  const Vec2 u = heading_vec(v.heading);
  const double alpha = std::atan2(cross(u, d), dot(u, d));
  const double ld = std::max(norm(d), 1e-6);
  const double steer = std::atan(2.0 * kWheelbase * std::sin(alpha) / ld);
  return std::clamp(steer, -nn::kSteeringLimit, nn::kSteeringLimit);
}

}  // namespace fil::sim
