#include "fil/imitation/behavior_cloning.hpp"

#include <cmath>
#include <ostream>

#include "fil/common/errors.hpp"
#include "fil/common/rng.hpp"

namespace fil::imitation {

std::uint64_t init_seed(std::uint64_t train_seed) { return mix_seed(train_seed, 0x1417); }

TrainedPolicy continue_training(nn::PolicyModel model, const DemonstrationSet& data,
                                const nn::TrainConfig& cfg) {
  if (data.size() == 0) throw ArgumentError("cannot train on an empty demonstration set");
  if (model.modality != data.modality)
    throw ArgumentError("model modality " + std::string(to_string(model.modality)) +
                        " does not match data modality " + std::string(to_string(data.modality)));
  if (data.size() < static_cast<std::size_t>(cfg.batch_size))
    throw ArgumentError("demonstration set smaller than batch_size");
  const auto split = nn::stride_split(data.size());
  const auto train = data.samples(split.train);
  const auto val = data.samples(split.validation);
  TrainedPolicy out;
  const auto res = nn::train_regression(model, train, val, cfg);
  out.curve = res.curve;
  out.batch_digest = res.batch_digest;
  out.model = std::move(model);
  return out;
}

TrainedPolicy train_bc(const DemonstrationSet& data, std::span<const nn::LayerSpec> spec,
                       const nn::TrainConfig& cfg) {
  if (data.size() == 0) throw ArgumentError("cannot train on an empty demonstration set");
  nn::validate_policy_spec(spec);
  return continue_training(nn::init_model(spec, init_seed(cfg.seed), data.modality), data, cfg);
}

OfflineMetrics evaluate_offline(const nn::PolicyModel& model, const DemonstrationSet& data) {
  if (model.modality != data.modality)
    throw ArgumentError("model modality " + std::string(to_string(model.modality)) +
                        " does not match data modality " + std::string(to_string(data.modality)));
  OfflineMetrics m;
  m.n = data.size();
  if (m.n == 0) return m;
  std::vector<const float*> inputs;
  inputs.reserve(m.n);
  for (const auto& r : data.records) inputs.push_back(r.obs.grid.data());
  const auto pred = nn::kernels::predict_parallel(model, inputs);
  double sse = 0.0;
  for (std::size_t i = 0; i < m.n; ++i) {
    const double e = pred[i] - data.records[i].steering;
    sse += e * e;
    if (std::abs(e) > kOfflineMistakeThreshold) ++m.mistakes;
  }
  m.mse = sse / static_cast<double>(m.n);
  m.mistake_rate = static_cast<double>(m.mistakes) / static_cast<double>(m.n);
  return m;
}

void write_curve_csv(std::ostream& os, const nn::LearningCurve& curve) {
  os << "epoch,train_mse,val_mse\n";
  for (const auto& e : curve) os << e.epoch << ',' << e.train_mse << ',' << e.val_mse << '\n';
}

}  // namespace fil::imitation
