#include "fil/fusion/guide.hpp"

#include <unordered_map>

#include "fil/common/errors.hpp"
#include "fil/nn/train.hpp"

namespace fil::fusion {

nn::TrainConfig default_guide_config() {
  nn::TrainConfig cfg;
  cfg.weight_decay = kDefaultGuideDecay;
  return cfg;
}

std::vector<nn::Sample> guide_samples(Modality modality, const SceneBank& bank,
                                      std::span<const PseudoLabel> labels) {
  if (labels.size() != bank.size())
    throw DataError(std::to_string(labels.size()) + " pseudo-labels for " +
                    std::to_string(bank.size()) + " scenes");
  std::unordered_map<std::uint32_t, double> by_id;
  for (const auto& l : labels)
    if (!by_id.emplace(l.scene_id, l.label).second)
      throw DataError("duplicate pseudo-label for scene " + std::to_string(l.scene_id));
  std::vector<nn::Sample> out;
  out.reserve(bank.size());
  for (const auto& r : bank.records) {
    const auto it = by_id.find(r.scene_id);
    if (it == by_id.end())
      throw DataError("no pseudo-label for scene " + std::to_string(r.scene_id));
    out.push_back({r.view(modality).grid.data(), it->second});
  }
  return out;
}

imitation::TrainedPolicy train_guide(Modality modality, const SceneBank& bank,
                                     std::span<const PseudoLabel> labels,
                                     std::span<const nn::LayerSpec> spec,
                                     const nn::TrainConfig& cfg) {
  if (!(cfg.weight_decay > 0.0))
    throw ArgumentError("guide training needs weight_decay > 0");
  if (bank.empty()) throw StateError("scene bank is empty");
  nn::validate_policy_spec(spec);
  const auto samples = guide_samples(modality, bank, labels);
  if (samples.size() < static_cast<std::size_t>(cfg.batch_size))
    throw ArgumentError("scene bank smaller than batch_size");
  const auto split = nn::stride_split(samples.size());
  std::vector<nn::Sample> train, val;
  for (auto i : split.train) train.push_back(samples[i]);
  for (auto i : split.validation) val.push_back(samples[i]);

  imitation::TrainedPolicy out;
  out.model = nn::init_model(spec, imitation::init_seed(cfg.seed), modality);
  const auto res = nn::train_regression(out.model, train, val, cfg);
  out.curve = res.curve;
  out.batch_digest = res.batch_digest;
  out.model.version = labels.front().round;
  return out;
}

}  // namespace fil::fusion
