#include "fil/fusion/scene_bank.hpp"

#include <set>

#include "fil/common/errors.hpp"
#include "fil/imitation/demonstrations.hpp"
#include "fil/sim/expert.hpp"
#include "fil/sim/kinematics.hpp"
#include "fil/sim/render.hpp"

namespace fil::fusion {

namespace {

// Calls visit(world, step) at every stride-th step of the expert rollout.
template <typename F>
void rollout(std::int64_t seed, int count, const BankOptions& options, F&& visit) {
  sim::TrackWorld world = sim::make_track(seed, options.recipe);
  imitation::ExecutionNoise noise(seed, options.execution_noise, options.noise_correlation);
  const int steps = count * options.stride;
  for (int t = 0; t < steps; ++t) {
    const double steer = sim::expert_policy(world);
    if (t % options.stride == 0) visit(world, static_cast<std::uint32_t>(t), steer);
    sim::step_in_place(world.vehicle, noise.apply(steer));
  }
}

}  // namespace

const sim::Observation& SceneRecord::view(Modality m) const {
  const auto it = views.find(m);
  if (it == views.end())
    throw DataError("scene " + std::to_string(scene_id) + " has no " +
                    std::string(to_string(m)) + " view");
  return it->second;
}

void SceneBank::validate() const {
  std::set<std::uint32_t> ids;
  for (const auto& r : records) {
    if (!ids.insert(r.scene_id).second)
      throw DataError("duplicate scene id " + std::to_string(r.scene_id));
    for (auto m : kAllModalities)
      if (r.view(m).modality != m)
        throw DataError("scene " + std::to_string(r.scene_id) + " has a mislabeled view");
    const auto ref = sim::blocked_mask(r.view(Modality::occupancy));
    if (sim::blocked_mask(r.view(Modality::distance)) != ref ||
        sim::blocked_mask(r.view(Modality::semantic)) != ref)
      throw DataError("scene " + std::to_string(r.scene_id) + " views disagree on blocked cells");
  }
}

SceneBank build_scene_bank(std::span<const std::int64_t> seeds, int scenes_per_seed,
                           const BankOptions& options) {
  if (seeds.empty()) throw ArgumentError("build_scene_bank needs at least one seed");
  if (scenes_per_seed < 1) throw ArgumentError("scenes_per_seed must be >= 1");
  if (options.stride < 1) throw ArgumentError("bank stride must be >= 1");
  SceneBank bank;
  bank.records.reserve(seeds.size() * static_cast<std::size_t>(scenes_per_seed));
  for (auto seed : seeds) {
    rollout(seed, scenes_per_seed, options,
            [&](const sim::TrackWorld& world, std::uint32_t step, double) {
              SceneRecord rec;
              rec.scene_id = static_cast<std::uint32_t>(bank.records.size());
              rec.origin = SceneOrigin{seed, step};
              const auto views = sim::render_all(world);
              for (auto m : kAllModalities) rec.views.emplace(m, views[index_of(m)]);
              bank.records.push_back(std::move(rec));
            });
  }
  return bank;
}

std::vector<double> expert_steering(const SceneBank& bank, const BankOptions& options) {
  // Group requested steps by seed so each track is replayed once.
  std::map<std::int64_t, std::map<std::uint32_t, std::vector<std::size_t>>> wanted;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto& o = bank.records[i].origin;
    if (!o)
      throw DataError("scene " + std::to_string(bank.records[i].scene_id) + " has no origin");
    if (o->step % static_cast<std::uint32_t>(options.stride) != 0)
      throw DataError("scene origin step does not match the bank stride");
    wanted[o->seed][o->step].push_back(i);
  }
  std::vector<double> out(bank.size(), 0.0);
  for (const auto& [seed, steps] : wanted) {
    const int count = static_cast<int>(steps.rbegin()->first) / options.stride + 1;
    rollout(seed, count, options, [&](const sim::TrackWorld&, std::uint32_t step, double steer) {
      const auto it = steps.find(step);
      if (it == steps.end()) return;
      for (auto i : it->second) out[i] = steer;
    });
  }
  return out;
}

Bytes encode_scene_bank(const SceneBank& bank) {
  ByteWriter w;
  w.tag("FILS");
  w.u16(kSceneBankFormatVersion);
  w.u32(static_cast<std::uint32_t>(bank.size()));
  w.bytes().reserve(10 + bank.size() * (4 + 3 * sim::kGridCells * 4));
  for (const auto& r : bank.records) {
    w.u32(r.scene_id);
    for (auto m : kAllModalities)
      for (float v : r.view(m).grid) w.f32(v);
  }
  return w.take();
}

SceneBank decode_scene_bank(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_tag("FILS");
  const auto ver_at = r.offset();
  if (r.u16() != kSceneBankFormatVersion) throw FormatError("unsupported FILS version", ver_at);
  const std::uint32_t count = r.u32();
  r.need(static_cast<std::size_t>(count) * (4 + 3 * sim::kGridCells * 4));
  SceneBank bank;
  bank.records.resize(count);
  for (auto& rec : bank.records) {
    rec.scene_id = r.u32();
    for (auto m : kAllModalities) {
      sim::Observation obs;
      obs.modality = m;
      for (auto& v : obs.grid) v = r.f32();
      rec.views.emplace(m, obs);
    }
  }
  if (!r.done()) throw FormatError("trailing bytes after scene records", r.offset());
  return bank;
}

void save_scene_bank(const std::string& path, const SceneBank& bank) {
  write_file(path, encode_scene_bank(bank));
}

SceneBank load_scene_bank(const std::string& path) { return decode_scene_bank(read_file(path)); }

}  // namespace fil::fusion
