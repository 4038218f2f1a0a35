#pragma once

#include "fil/sim/track.hpp"

namespace fil::sim {

// Kinematic bicycle update at fixed speed:
//   heading += (speed / wheelbase) * tan(steering) * dt
//   position += speed * dt * (cos, sin)(heading)
TrackWorld step(const TrackWorld& world, double steering, double dt = kDt);

void step_in_place(VehicleState& vehicle, double steering, double dt = kDt);

}  // namespace fil::sim
