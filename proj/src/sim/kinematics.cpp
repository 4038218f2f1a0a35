#include "fil/sim/kinematics.hpp"

#include <cmath>

namespace fil::sim {

void step_in_place(VehicleState& v, double steering, double dt) {
  const double turn = (v.speed / kWheelbase) * std::tan(steering) * dt;
  // Position advances along the mid-step heading.
  v.position = v.position + heading_vec(v.heading + 0.5 * turn) * (v.speed * dt);
  v.heading += turn;
}

TrackWorld step(const TrackWorld& world, double steering, double dt) {
  TrackWorld next = world;
  step_in_place(next.vehicle, steering, dt);
  return next;
}

}  // namespace fil::sim
