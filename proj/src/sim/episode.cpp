#include "fil/sim/episode.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "fil/common/errors.hpp"
#include "fil/nn/kernels.hpp"
#include "fil/sim/expert.hpp"
#include "fil/sim/kinematics.hpp"
#include "fil/sim/render.hpp"

namespace fil::sim {

namespace {

double ratio(int num, int den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; }

}  // namespace

double EvalReport::hit_obstacle_rate() const { return ratio(collisions, episodes); }
double EvalReport::miss_turn_rate() const { return ratio(arcs_missed, arcs_encountered); }
double EvalReport::straight_mistake_rate() const {
  return ratio(straight_mistakes, straights_encountered);
}
double EvalReport::total_mistake_rate() const {
  return ratio(collisions + arcs_missed + straight_mistakes,
               episodes + arcs_encountered + straights_encountered);
}
bool EvalReport::has_zero_denominator() const {
  return episodes == 0 || arcs_encountered == 0 || straights_encountered == 0;
}

void EvalReport::merge(const EvalReport& o) {
  episodes += o.episodes;
  collisions += o.collisions;
  off_track += o.off_track;
  arcs_encountered += o.arcs_encountered;
  arcs_missed += o.arcs_missed;
  straights_encountered += o.straights_encountered;
  straight_mistakes += o.straight_mistakes;
}

EpisodeResult run_episode(const TrackWorld& world, const Controller& controller,
                          Modality modality, const WeatherPerturbation& weather, int max_steps,
                          const ScoringRules& rules) {
  EpisodeResult result;
  auto& rep = result.report;
  rep.weather = weather;
  rep.episodes = 1;
  if (max_steps <= 0) return result;

  const double hw = world.track_half_width;
  TrackWorld w = world;
  std::size_t visit_segment = SIZE_MAX;
  bool visit_bad = false;
  SegmentKind visit_kind = SegmentKind::straight;

  auto close_visit = [&] {
    if (visit_segment == SIZE_MAX || !visit_bad) return;
    (visit_kind == SegmentKind::arc ? rep.arcs_missed : rep.straight_mistakes) += 1;
  };
  auto observe = [&](const TrackProjection& pr) {
    if (pr.segment != visit_segment) {
      close_visit();
      visit_segment = pr.segment;
      visit_kind = w.segments[pr.segment].kind;
      visit_bad = false;
      (visit_kind == SegmentKind::arc ? rep.arcs_encountered : rep.straights_encountered) += 1;
    }
    const double limit =
        visit_kind == SegmentKind::arc ? rules.miss_turn_factor * hw : rules.straight_factor * hw;
    if (std::abs(pr.lateral) > limit) visit_bad = true;
  };

  TrackProjection pr = w.project(w.vehicle.position);
  observe(pr);
  for (int t = 0; t < max_steps; ++t) {
    const Observation obs =
        apply_weather(render(w, modality), weather, static_cast<std::uint64_t>(t));
    const double steer =
        std::clamp(controller(w, obs), -nn::kSteeringLimit, nn::kSteeringLimit);
    result.trajectory.push_back({t, w.vehicle.position.x, w.vehicle.position.y, w.vehicle.heading,
                                 steer, w.segments[pr.segment].kind, pr.lateral});
    step_in_place(w.vehicle, steer);
    pr = w.project(w.vehicle.position);
    observe(pr);

    const bool hit = std::any_of(w.obstacles.begin(), w.obstacles.end(), [&](const Obstacle& o) {
      return norm(w.vehicle.position - o.center) < o.radius + kVehicleRadius;
    });
    if (hit) {
      rep.collisions = 1;
      result.end = EpisodeEnd::collision;
      break;
    }
    if (pr.distance > rules.off_track_factor * hw) {
      rep.off_track = 1;
      result.end = EpisodeEnd::off_track;
      break;
    }
  }
  close_visit();
  return result;
}

double policy_steering(const nn::PolicyModel& model, const Observation& obs) {
  if (model.modality != obs.modality)
    throw ArgumentError("controller modality " + std::string(to_string(model.modality)) +
                        " does not match observation modality " +
                        std::string(to_string(obs.modality)));
  return nn::forward(model, obs.values());
}

EpisodeResult run_episode(const TrackWorld& world, const nn::PolicyModel& controller,
                          Modality modality, const WeatherPerturbation& weather, int max_steps,
                          const ScoringRules& rules) {
  if (controller.modality != modality)
    throw ArgumentError("controller modality " + std::string(to_string(controller.modality)) +
                        " does not match episode modality " + std::string(to_string(modality)));
  return run_episode(
      world,
      [&](const TrackWorld&, const Observation& obs) { return policy_steering(controller, obs); },
      modality, weather, max_steps, rules);
}

Controller expert_controller() {
  return [](const TrackWorld& w, const Observation&) { return expert_policy(w); };
}

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryPoint>& trajectory) {
  os << "step,x,y,heading,steering,segment_kind,cross_track_error\n";
  for (const auto& p : trajectory) {
    os << p.step << ',' << p.x << ',' << p.y << ',' << p.heading << ',' << p.steering << ','
       << (p.segment_kind == SegmentKind::arc ? "arc" : "straight") << ',' << p.cross_track_error
       << '\n';
  }
}

}  // namespace fil::sim
