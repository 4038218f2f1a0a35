#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "fil/nn/model.hpp"
#include "fil/sim/observation.hpp"
#include "fil/sim/track.hpp"
#include "fil/sim/weather.hpp"

namespace fil::sim {

struct TrajectoryPoint {
  int step = 0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double steering = 0.0;
  SegmentKind segment_kind = SegmentKind::straight;
  double cross_track_error = 0.0;
};

enum class EpisodeEnd : std::uint8_t { max_steps, collision, off_track };

// Aggregated closed-loop mistake statistics. Each rate is offending / encountered;
// a zero denominator yields a rate of 0 and is visible through the counts.
struct EvalReport {
  int episodes = 0;
  int collisions = 0;
  int off_track = 0;
  int arcs_encountered = 0;
  int arcs_missed = 0;
  int straights_encountered = 0;
  int straight_mistakes = 0;
  WeatherPerturbation weather;

  double hit_obstacle_rate() const;
  double miss_turn_rate() const;
  double straight_mistake_rate() const;
  // All offending events over all encountered units (episodes + segments).
  double total_mistake_rate() const;
  bool has_zero_denominator() const;

  void merge(const EvalReport& other);
};

struct EpisodeResult {
  std::vector<TrajectoryPoint> trajectory;
  EvalReport report;
  EpisodeEnd end = EpisodeEnd::max_steps;
};

// Steering decision given the true world and the (perturbed) observation.
using Controller = std::function<double(const TrackWorld&, const Observation&)>;

// Thresholds for closed-loop scoring.
struct ScoringRules {
  double miss_turn_factor = 1.0;  // |cte| > factor * half_width inside an arc
  double straight_factor = 0.5;   // |cte| > factor * half_width inside a straight
  double off_track_factor = 2.0;  // episode ends when |cte| > factor * half_width
};

// Loop: render -> perturb -> control -> step, until max_steps, collision or
// off-track. The controller's output is clamped to +/-0.69.
EpisodeResult run_episode(const TrackWorld& world, const Controller& controller,
                          Modality modality, const WeatherPerturbation& weather, int max_steps,
                          const ScoringRules& rules = {});

// Policy-network controller. Throws ArgumentError if the model's modality
// differs from the requested one.
EpisodeResult run_episode(const TrackWorld& world, const nn::PolicyModel& controller,
                          Modality modality, const WeatherPerturbation& weather, int max_steps,
                          const ScoringRules& rules = {});

Controller expert_controller();

// Steering of a policy model for an observation; checks modality.
double policy_steering(const nn::PolicyModel& model, const Observation& obs);

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryPoint>& trajectory);

}  // namespace fil::sim
