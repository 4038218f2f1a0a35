#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fil/fusion/aggregation.hpp"
#include "fil/fusion/registry.hpp"
#include "fil/fusion/scene_bank.hpp"

namespace fil::fusion {

struct Contributor {
  std::string robot_id;
  std::uint32_t version = 0;
  bool operator==(const Contributor&) const = default;
};

struct PseudoLabel {
  std::uint32_t scene_id = 0;
  double label = 0.0;
  std::vector<Contributor> contributors;
  std::uint32_t round = 0;
  bool operator==(const PseudoLabel&) const = default;
};

// Each model predicts on the view of its own modality; the outputs are
// aggregated. Throws StateError with no models and DataError (naming the
// robot) when a model's modality has no view in the scene.
PseudoLabel label_scene(std::span<const RegisteredModel> models, const SceneRecord& scene,
                        std::uint32_t round, Aggregator how = Aggregator::median);
PseudoLabel label_scene(const ModelRegistry& registry, const SceneRecord& scene,
                        std::uint32_t round, Aggregator how = Aggregator::median);

// One label per scene, in bank order, from a snapshot of the registry.
// Throws StateError for an empty bank or registry.
std::vector<PseudoLabel> fuse_round(std::span<const RegisteredModel> models,
                                    const SceneBank& bank, std::uint32_t round,
                                    Aggregator how = Aggregator::median);
std::vector<PseudoLabel> fuse_round(const ModelRegistry& registry, const SceneBank& bank,
                                    std::uint32_t round, Aggregator how = Aggregator::median);

void write_pseudo_labels_csv(std::ostream& os, std::span<const PseudoLabel> labels);

}  // namespace fil::fusion
