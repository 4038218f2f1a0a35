#include "fil/fusion/fuse.hpp"

#include <ostream>

#include "fil/common/errors.hpp"
#include "fil/nn/kernels.hpp"

namespace fil::fusion {

namespace {

std::vector<Contributor> contributors_of(std::span<const RegisteredModel> models) {
  std::vector<Contributor> out;
  out.reserve(models.size());
  for (const auto& m : models) out.push_back({m.robot_id, m.model.version});
  return out;
}

const sim::Observation& view_for(const RegisteredModel& m, const SceneRecord& scene) {
  const auto it = scene.views.find(m.model.modality);
  if (it == scene.views.end())
    throw DataError("robot " + m.robot_id + " uses modality " +
                    std::string(to_string(m.model.modality)) + " which scene " +
                    std::to_string(scene.scene_id) + " does not provide");
  return it->second;
}

}  // namespace

PseudoLabel label_scene(std::span<const RegisteredModel> models, const SceneRecord& scene,
                        std::uint32_t round, Aggregator how) {
  if (models.empty()) throw StateError("no private models registered");
  std::vector<double> outputs;
  outputs.reserve(models.size());
  for (const auto& m : models) outputs.push_back(nn::forward(m.model, view_for(m, scene).values()));
  return PseudoLabel{scene.scene_id, aggregate(how, outputs), contributors_of(models), round};
}

PseudoLabel label_scene(const ModelRegistry& registry, const SceneRecord& scene,
                        std::uint32_t round, Aggregator how) {
  const auto snap = registry.snapshot();
  return label_scene(snap, scene, round, how);
}

std::vector<PseudoLabel> fuse_round(std::span<const RegisteredModel> models,
                                    const SceneBank& bank, std::uint32_t round, Aggregator how) {
  if (models.empty()) throw StateError("no private models registered");
  if (bank.empty()) throw StateError("scene bank is empty");
  // outputs[k][j]: model k on scene j, batched per model.
  std::vector<std::vector<double>> outputs;
  outputs.reserve(models.size());
  std::vector<const float*> inputs(bank.size());
  for (const auto& m : models) {
    for (std::size_t j = 0; j < bank.size(); ++j)
      inputs[j] = view_for(m, bank.records[j]).grid.data();
    outputs.push_back(nn::kernels::predict_parallel(m.model, inputs));
  }
  const auto contributors = contributors_of(models);
  std::vector<PseudoLabel> labels;
  labels.reserve(bank.size());
  std::vector<double> column(models.size());
  for (std::size_t j = 0; j < bank.size(); ++j) {
    for (std::size_t k = 0; k < models.size(); ++k) column[k] = outputs[k][j];
    labels.push_back({bank.records[j].scene_id, aggregate(how, column), contributors, round});
  }
  return labels;
}

std::vector<PseudoLabel> fuse_round(const ModelRegistry& registry, const SceneBank& bank,
                                    std::uint32_t round, Aggregator how) {
  const auto snap = registry.snapshot();
  return fuse_round(snap, bank, round, how);
}

void write_pseudo_labels_csv(std::ostream& os, std::span<const PseudoLabel> labels) {
  os << "scene_id,label,round,n_contributors\n";
  const auto old = os.precision(17);
  for (const auto& l : labels)
    os << l.scene_id << ',' << l.label << ',' << l.round << ',' << l.contributors.size() << '\n';
  os.precision(old);
}

}  // namespace fil::fusion
