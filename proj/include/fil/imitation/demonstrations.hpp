#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fil/common/rng.hpp"
#include "fil/nn/kernels.hpp"
#include "fil/sim/observation.hpp"
#include "fil/sim/track.hpp"
#include "fil/sim/weather.hpp"

namespace fil::imitation {

struct Provenance {
  std::vector<std::int64_t> track_seeds;
  sim::WeatherPerturbation weather;
};

// A local agent's labeled data in one modality. It stays with its agent: the
// protocol layer has no message able to carry it.
struct DemonstrationSet {
  Modality modality = Modality::occupancy;
  std::vector<sim::Demonstration> records;
  Provenance provenance;

  std::size_t size() const { return records.size(); }

  // Views for the training kernels; valid while records is unchanged.
  std::vector<nn::Sample> samples() const;
  std::vector<nn::Sample> samples(std::span<const std::size_t> indices) const;
};

struct CollectOptions {
  sim::TrackRecipe recipe;
  sim::WeatherPerturbation weather;  // applied to recorded frames only
  // Executed steering is expert + AR(1) noise with this stationary std
  // (radians) and per-step correlation; labels stay the clean expert action.
  // Zero noise records the unperturbed expert trajectory.
  double execution_noise = 0.0;
  double noise_correlation = 0.95;
};

// AR(1) steering perturbation added to the executed action. Seeded per track,
// so a rollout can be replayed exactly.
class ExecutionNoise {
 public:
  ExecutionNoise(std::int64_t track_seed, double stddev, double correlation = 0.95);
  // Returns the steering actually executed for the expert's `steer`.
  double apply(double steer);

 private:
  Rng rng_;
  double rho_;
  double innovation_;
  double value_ = 0.0;
  bool active_;
};

// Rolls the expert closed-loop on each seeded track for steps_per_track steps
// and records (render in `modality`, expert steering) per step.
DemonstrationSet collect_demonstrations(std::span<const std::int64_t> seeds, Modality modality,
                                        int steps_per_track, const CollectOptions& options = {});

void save_demonstrations(const std::string& path, const DemonstrationSet& data);
DemonstrationSet load_demonstrations(const std::string& path);

}  // namespace fil::imitation
