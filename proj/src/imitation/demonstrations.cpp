#include "fil/imitation/demonstrations.hpp"

#include <algorithm>
#include <cmath>

#include "fil/common/errors.hpp"
#include "fil/common/rng.hpp"
#include "fil/sim/dataset_io.hpp"
#include "fil/sim/expert.hpp"
#include "fil/sim/kinematics.hpp"
#include "fil/sim/render.hpp"

namespace fil::imitation {

std::vector<nn::Sample> DemonstrationSet::samples() const {
  std::vector<nn::Sample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.obs.grid.data(), r.steering});
  return out;
}

std::vector<nn::Sample> DemonstrationSet::samples(std::span<const std::size_t> indices) const {
  std::vector<nn::Sample> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back({records[i].obs.grid.data(), records[i].steering});
  return out;
}

ExecutionNoise::ExecutionNoise(std::int64_t track_seed, double stddev, double correlation)
    : rng_(mix_seed(static_cast<std::uint64_t>(track_seed), 0xda27)),
      rho_(correlation),
      innovation_(stddev * std::sqrt(1.0 - correlation * correlation)),
      active_(stddev > 0.0) {
  if (stddev < 0.0 || correlation < 0.0 || correlation >= 1.0)
    throw ArgumentError("execution noise needs stddev >= 0 and correlation in [0, 1)");
}

double ExecutionNoise::apply(double steer) {
  if (!active_) return steer;
  value_ = rho_ * value_ + innovation_ * rng_.normal();
  return std::clamp(steer + value_, -nn::kSteeringLimit, nn::kSteeringLimit);
}

DemonstrationSet collect_demonstrations(std::span<const std::int64_t> seeds, Modality modality,
                                        int steps_per_track, const CollectOptions& options) {
  if (seeds.empty()) throw ArgumentError("collect_demonstrations needs at least one seed");
  if (steps_per_track < 1) throw ArgumentError("steps_per_track must be >= 1");
  DemonstrationSet data;
  data.modality = modality;
  data.provenance.track_seeds.assign(seeds.begin(), seeds.end());
  data.provenance.weather = options.weather;
  data.records.reserve(seeds.size() * static_cast<std::size_t>(steps_per_track));
  for (auto seed : seeds) {
    sim::TrackWorld world = sim::make_track(seed, options.recipe);
    ExecutionNoise noise(seed, options.execution_noise, options.noise_correlation);
    for (int t = 0; t < steps_per_track; ++t) {
      const double steer = sim::expert_policy(world);  // OffTrackError carries the seed
      sim::Demonstration d;
      d.obs = sim::apply_weather(sim::render(world, modality), options.weather,
                                 static_cast<std::uint64_t>(t));
      d.steering = static_cast<float>(steer);
      data.records.push_back(d);
      sim::step_in_place(world.vehicle, noise.apply(steer));
    }
  }
  return data;
}

void save_demonstrations(const std::string& path, const DemonstrationSet& data) {
  write_file(path, sim::encode_dataset(data.modality, data.records));
}

DemonstrationSet load_demonstrations(const std::string& path) {
  auto decoded = sim::decode_dataset(read_file(path));
  DemonstrationSet data;
  data.modality = decoded.modality;
  data.records = std::move(decoded.records);
  return data;
}

}  // namespace fil::imitation
