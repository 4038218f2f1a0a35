#include "fil/transfer/transfer.hpp"

#include <ostream>

#include "fil/common/digest.hpp"
#include "fil/common/errors.hpp"
#include "fil/nn/serialize.hpp"

namespace fil::transfer {

std::size_t default_split_index(std::span<const nn::LayerSpec> spec) {
  int dense_seen = 0;
  for (std::size_t i = spec.size(); i-- > 0;) {
    if (spec[i].kind != nn::LayerKind::dense) continue;
    if (++dense_seen == 2) return i;
  }
  throw ArgumentError("transfer needs at least two dense layers");
}

TransferPlan default_plan(const nn::PolicyModel& guide) {
  TransferPlan plan;
  plan.split_index = default_split_index(guide.spec());
  return plan;
}

void validate_plan(const TransferPlan& plan, const nn::PolicyModel& guide) {
  if (plan.split_index == 0 || plan.split_index >= guide.layers.size())
    throw ArgumentError("split index " + std::to_string(plan.split_index) +
                        " must lie in (0, " + std::to_string(guide.layers.size()) + ")");
  if (!(plan.lr_scale > 0.0)) throw ArgumentError("lr_scale must be positive");
}

TransferredModel transfer_init(const nn::PolicyModel& guide, const TransferPlan& plan) {
  validate_plan(plan, guide);
  TransferredModel out;
  out.lineage = {guide.version, nn::param_digest(guide), plan.split_index};
  out.model = guide;
  out.model.version = 0;
  if (plan.head_init == HeadInit::reinitialize)
    nn::reinitialize_layers(out.model, plan.split_index, plan.head_seed);
  out.model.set_frozen_prefix(plan.split_index);
  return out;
}

imitation::TrainedPolicy fine_tune(nn::PolicyModel model, const imitation::DemonstrationSet& data,
                                   const nn::TrainConfig& cfg) {
  if (model.frozen_count() == 0) throw ArgumentError("fine_tune needs at least one frozen layer");
  if (model.trainable_count() == 0) throw ArgumentError("every layer is frozen; nothing to train");
  return imitation::continue_training(std::move(model), data, cfg);
}

nn::TrainConfig scaled_config(const nn::TrainConfig& cfg, const TransferPlan& plan) {
  auto out = cfg;
  out.learning_rate *= plan.lr_scale;
  return out;
}

std::uint64_t training_digest(const nn::TrainConfig& cfg, const imitation::DemonstrationSet& data) {
  Fnv64 h;
  h.add_pod(cfg.learning_rate).add_pod(cfg.weight_decay).add_pod(cfg.epochs);
  h.add_pod(cfg.batch_size).add_pod(cfg.seed).add_pod(cfg.loss);
  h.add_pod(data.modality);
  for (const auto& r : data.records) {
    h.add(std::span(reinterpret_cast<const std::uint8_t*>(r.obs.grid.data()),
                    r.obs.grid.size() * sizeof(float)));
    h.add_pod(r.steering);
  }
  return h.value();
}

std::string_view to_string(Arm arm) { return arm == Arm::scratch ? "scratch" : "transferred"; }

namespace {

imitation::OfflineMetrics validation_metrics(const nn::PolicyModel& model,
                                             const imitation::DemonstrationSet& data) {
  imitation::DemonstrationSet val;
  val.modality = data.modality;
  for (auto i : nn::stride_split(data.size()).validation) val.records.push_back(data.records[i]);
  return imitation::evaluate_offline(model, val);
}

}  // namespace

Comparison compare_training(const nn::PolicyModel& guide, const imitation::DemonstrationSet& data,
                            const TransferPlan& plan, const nn::TrainConfig& cfg,
                            std::span<const std::uint64_t> seeds) {
  if (seeds.size() < 2) throw ArgumentError("compare_training needs at least two seeds");
  if (guide.modality != data.modality)
    throw ArgumentError("guide modality does not match the local data");
  validate_plan(plan, guide);
  Comparison cmp;
  auto& s = cmp.summary;
  for (auto seed : seeds) {
    auto run_cfg = cfg;
    run_cfg.seed = seed;

    ArmRun scratch;
    scratch.seed = seed;
    scratch.arm = Arm::scratch;
    auto a = imitation::train_bc(data, guide.spec(), run_cfg);
    scratch.curve = std::move(a.curve);
    scratch.batch_digest = a.batch_digest;
    scratch.config_digest = training_digest(run_cfg, data);
    scratch.final_validation = validation_metrics(a.model, data);
    scratch.model = std::move(a.model);

    auto arm_plan = plan;
    arm_plan.head_seed = imitation::init_seed(seed);
    const auto tuned_cfg = scaled_config(run_cfg, plan);
    ArmRun transferred;
    transferred.seed = seed;
    transferred.arm = Arm::transferred;
    auto b = fine_tune(transfer_init(guide, arm_plan).model, data, tuned_cfg);
    transferred.curve = std::move(b.curve);
    transferred.batch_digest = b.batch_digest;
    transferred.config_digest = training_digest(tuned_cfg, data);
    transferred.final_validation = validation_metrics(b.model, data);
    transferred.model = std::move(b.model);

    s.mean_initial_val_scratch += scratch.curve.front().val_mse;
    s.mean_initial_val_transferred += transferred.curve.front().val_mse;
    s.mean_final_val_scratch += scratch.curve.back().val_mse;
    s.mean_final_val_transferred += transferred.curve.back().val_mse;
    if (transferred.curve.front().val_mse < scratch.curve.front().val_mse) ++s.head_start_wins;
    cmp.runs.push_back(std::move(scratch));
    cmp.runs.push_back(std::move(transferred));
  }
  s.seeds = static_cast<int>(seeds.size());
  const double n = static_cast<double>(seeds.size());
  s.mean_initial_val_scratch /= n;
  s.mean_initial_val_transferred /= n;
  s.mean_final_val_scratch /= n;
  s.mean_final_val_transferred /= n;
  return cmp;
}

void write_paired_curves_csv(std::ostream& os, std::span<const ArmRun> runs) {
  os << "seed,arm,epoch,train_mse,val_mse\n";
  const auto old = os.precision(17);
  for (const auto& r : runs)
    for (const auto& e : r.curve)
      os << r.seed << ',' << to_string(r.arm) << ',' << e.epoch << ',' << e.train_mse << ','
         << e.val_mse << '\n';
  os.precision(old);
}

void write_summary_csv(std::ostream& os, const Comparison& cmp) {
  os << "seed,arm,initial_val_mse,final_val_mse,final_val_mistake_rate,batch_digest,config_digest\n";
  const auto old = os.precision(17);
  for (const auto& r : cmp.runs)
    os << r.seed << ',' << to_string(r.arm) << ',' << r.curve.front().val_mse << ','
       << r.curve.back().val_mse << ',' << r.final_validation.mistake_rate << ','
       << hex64(r.batch_digest) << ',' << hex64(r.config_digest) << '\n';
  const auto& s = cmp.summary;
  os << "mean,scratch," << s.mean_initial_val_scratch << ',' << s.mean_final_val_scratch << ",,,\n";
  os << "mean,transferred," << s.mean_initial_val_transferred << ','
     << s.mean_final_val_transferred << ",,,\n";
  os.precision(old);
}

}  // namespace fil::transfer
