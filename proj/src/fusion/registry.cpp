#include "fil/fusion/registry.hpp"

#include "fil/common/errors.hpp"
#include "fil/nn/serialize.hpp"

namespace fil::fusion {

ModelRegistry::ModelRegistry(const ModelRegistry& other) {
  std::lock_guard lock(other.mu_);
  models_ = other.models_;
}

ModelRegistry& ModelRegistry::operator=(const ModelRegistry& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mu_, other.mu_);
  models_ = other.models_;
  return *this;
}

UploadOutcome ModelRegistry::upload(const std::string& robot_id, nn::PolicyModel model,
                                    std::uint32_t round) {
  if (robot_id.empty()) throw ArgumentError("robot id must not be empty");
  nn::validate_policy_spec(model.spec());
  const std::uint64_t digest = nn::param_digest(model);
  std::lock_guard lock(mu_);
  const auto it = models_.find(robot_id);
  if (it != models_.end()) {
    const auto& held = it->second;
    if (held.digest == digest && held.model.version == model.version) return UploadOutcome::duplicate;
    if (model.version <= held.model.version)
      throw StateError("robot " + robot_id + " uploaded version " +
                       std::to_string(model.version) + " but version " +
                       std::to_string(held.model.version) + " is already held");
    if (model.modality != held.model.modality)
      throw StateError("robot " + robot_id + " changed modality");
  }
  models_[robot_id] = RegisteredModel{robot_id, std::move(model), round, digest};
  return UploadOutcome::stored;
}

std::vector<RegisteredModel> ModelRegistry::snapshot() const {
  std::lock_guard lock(mu_);
  std::vector<RegisteredModel> out;
  out.reserve(models_.size());
  for (const auto& [id, m] : models_) out.push_back(m);
  return out;
}

std::optional<RegisteredModel> ModelRegistry::find(const std::string& robot_id) const {
  std::lock_guard lock(mu_);
  const auto it = models_.find(robot_id);
  if (it == models_.end()) return std::nullopt;
  return it->second;
}

std::size_t ModelRegistry::size() const {
  std::lock_guard lock(mu_);
  return models_.size();
}

}  // namespace fil::fusion
