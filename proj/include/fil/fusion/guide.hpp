#pragma once

#include <span>
#include <vector>

#include "fil/fusion/fuse.hpp"
#include "fil/imitation/behavior_cloning.hpp"
#include "fil/nn/layer_spec.hpp"

namespace fil::fusion {

inline constexpr double kDefaultGuideDecay = 1e-3;

// Training pairs (view of `modality`, label) in bank order. Pointers refer into
// bank. Throws DataError when labels and scenes do not match one to one.
std::vector<nn::Sample> guide_samples(Modality modality, const SceneBank& bank,
                                      std::span<const PseudoLabel> labels);

// TrainConfig defaults with weight_decay = kDefaultGuideDecay.
nn::TrainConfig default_guide_config();

// Trains a fresh model on (view of `modality`, pseudo-label) pairs with the
// same split and loop as local training. The result's version is the labels'
// fusion round. Throws ArgumentError unless weight_decay > 0, DataError when
// labels and scenes do not match one to one, StateError on an empty bank.
imitation::TrainedPolicy train_guide(Modality modality, const SceneBank& bank,
                                     std::span<const PseudoLabel> labels,
                                     std::span<const nn::LayerSpec> spec,
                                     const nn::TrainConfig& cfg);

}  // namespace fil::fusion
