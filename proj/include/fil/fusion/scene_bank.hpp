#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fil/common/bytes.hpp"
#include "fil/sim/observation.hpp"
#include "fil/sim/track.hpp"

namespace fil::fusion {

// Where a scene was rendered: track seed and expert rollout step. Not part of
// the file format, so banks loaded from disk have no origin.
struct SceneOrigin {
  std::int64_t seed = 0;
  std::uint32_t step = 0;
  bool operator==(const SceneOrigin&) const = default;
};

// One world state seen through every modality. Carries no steering label.
struct SceneRecord {
  std::uint32_t scene_id = 0;
  std::map<Modality, sim::Observation> views;
  std::optional<SceneOrigin> origin;

  // Throws DataError if the modality is absent.
  const sim::Observation& view(Modality m) const;
  bool operator==(const SceneRecord&) const = default;
};

struct SceneBank {
  std::vector<SceneRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  // Unique scene ids, all three views present and mutually consistent.
  void validate() const;
  bool operator==(const SceneBank&) const = default;
};

struct BankOptions {
  sim::TrackRecipe recipe;
  int stride = 5;  // expert steps between consecutive scenes of one track
  // Execution noise of the capturing rollouts, as in CollectOptions.
  double execution_noise = 0.0;
  double noise_correlation = 0.95;
};

// Rolls the expert on each track and keeps every stride-th state, rendered in
// all modalities. Scene ids run 0..M-1 in seed order.
SceneBank build_scene_bank(std::span<const std::int64_t> seeds, int scenes_per_seed,
                           const BankOptions& options = {});

// Expert steering for each scene, recomputed by replaying the rollouts named
// by the scene origins. Evaluation only: the bank itself never holds labels.
std::vector<double> expert_steering(const SceneBank& bank, const BankOptions& options = {});

// FILS: "FILS" | version u16 | count u32 |
//       per record: scene_id u32 + 3 x 256 f32 (occupancy, distance, semantic).
inline constexpr std::uint16_t kSceneBankFormatVersion = 1;

Bytes encode_scene_bank(const SceneBank& bank);
SceneBank decode_scene_bank(std::span<const std::uint8_t> bytes);
void save_scene_bank(const std::string& path, const SceneBank& bank);
SceneBank load_scene_bank(const std::string& path);

}  // namespace fil::fusion
