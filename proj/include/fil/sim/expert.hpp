#pragma once

#include "fil/sim/track.hpp"

namespace fil::sim {

struct ExpertParams {
  double lookahead = 4.0;
  double pass_margin = 0.8;  // extra gap between vehicle and obstacle edges
  double ramp_in = 10.0;     // shift ramps up over this distance before full
  double hold_before = 6.0;  // full shift starts this far before the obstacle
  double hold_after = 4.0;
  double ramp_out = 8.0;
};

// Lateral offset of the expert's path at along-track coordinate s.
double avoidance_shift(const TrackWorld& world, double s, const ExpertParams& p = {});

// Pure-pursuit steering toward a lookahead point on the (obstacle-shifted)
// centerline, clamped to +/-0.69. Positive steers left. Throws OffTrackError
// when the vehicle is more than 5 half widths from the centerline.
double expert_policy(const TrackWorld& world, const ExpertParams& p = {});

}  // namespace fil::sim
