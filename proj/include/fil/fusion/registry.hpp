#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fil/nn/model.hpp"

namespace fil::fusion {

struct RegisteredModel {
  std::string robot_id;
  nn::PolicyModel model;
  std::uint32_t upload_round = 0;
  std::uint64_t digest = 0;  // param_digest of model
};

enum class UploadOutcome { stored, duplicate };

// Latest private model per robot. Safe to use from several threads.
class ModelRegistry {
 public:
  ModelRegistry() = default;
  ModelRegistry(const ModelRegistry& other);
  ModelRegistry& operator=(const ModelRegistry& other);

  // Re-sending the exact parameters already held is a no-op. Otherwise the
  // version must be strictly greater than the held one (StateError if not).
  UploadOutcome upload(const std::string& robot_id, nn::PolicyModel model,
                       std::uint32_t round = 0);

  // Consistent copy ordered by robot id.
  std::vector<RegisteredModel> snapshot() const;
  std::optional<RegisteredModel> find(const std::string& robot_id) const;
  std::size_t size() const;
  bool empty() const { return size() == 0; }

 private:
  mutable std::mutex mu_;
  std::map<std::string, RegisteredModel> models_;
};

}  // namespace fil::fusion
