#include "fil/nn/train.hpp"

#include <numeric>

#include "fil/common/digest.hpp"
#include "fil/common/errors.hpp"
#include "fil/common/rng.hpp"

namespace fil::nn {

Split stride_split(std::size_t n) {
  Split s;
  for (std::size_t i = 0; i < n; ++i) (i % 10 == 9 ? s.validation : s.train).push_back(i);
  return s;
}

TrainResult train_regression(PolicyModel& model, std::span<const Sample> train,
                             std::span<const Sample> validation, const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw ArgumentError("training set is empty");

  TrainResult result;
  auto record = [&](int epoch) {
    result.curve.push_back({epoch, mse(model, train), mse(model, validation)});
  };
  record(0);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Sample> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));
  Fnv64 digest;
  Rng rng(cfg.seed);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(cfg.batch_size)) {
      const auto end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) {
        batch.push_back(train[order[i]]);
        digest.add_pod(static_cast<std::uint64_t>(order[i]));
      }
      digest.add_pod(std::uint64_t{0xffffffffffffffffULL});
      sgd_step(model, backward(model, batch), cfg);
      ++result.steps;
    }
    record(epoch);
  }
  result.batch_digest = digest.value();
  ++model.version;
  return result;
}

}  // namespace fil::nn
