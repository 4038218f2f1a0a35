#include "fil/app/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "fil/common/bytes.hpp"
#include "fil/common/digest.hpp"
#include "fil/common/errors.hpp"
#include "fil/fusion/guide.hpp"
#include "fil/sim/render.hpp"

namespace fil::app {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

template <typename T>
T parse_number(std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ArgumentError("not a number: '" + std::string(v) + "'");
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
std::string join(const std::vector<T>& items, auto&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += fmt(items[i]);
  }
  return out;
}

struct Field {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

template <typename T>
Field number(T ExperimentConfig::*member) {
  return {[member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*member);
            else return std::to_string(c.*member);
          },
          [member](ExperimentConfig& c, std::string_view v) { c.*member = parse_number<T>(v); }};
}

template <typename T>
Field train_number(nn::TrainConfig ExperimentConfig::*cfg, T nn::TrainConfig::*member) {
  return {[=](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*cfg.*member);
            else return std::to_string(c.*cfg.*member);
          },
          [=](ExperimentConfig& c, std::string_view v) { c.*cfg.*member = parse_number<T>(v); }};
}

void add_train_fields(std::map<std::string, Field, std::less<>>& f, const std::string& prefix,
                      nn::TrainConfig ExperimentConfig::*cfg) {
  f[prefix + ".learning_rate"] = train_number(cfg, &nn::TrainConfig::learning_rate);
  f[prefix + ".weight_decay"] = train_number(cfg, &nn::TrainConfig::weight_decay);
  f[prefix + ".epochs"] = train_number(cfg, &nn::TrainConfig::epochs);
  f[prefix + ".batch_size"] = train_number(cfg, &nn::TrainConfig::batch_size);
}

const std::map<std::string, Field, std::less<>>& fields() {
  static const auto table = [] {
    std::map<std::string, Field, std::less<>> f;
    f["experiment.seeds"] = {
        [](const ExperimentConfig& c) {
          return join(c.experiments, [](std::int64_t s) { return std::to_string(s); });
        },
        [](ExperimentConfig& c, std::string_view v) {
          c.experiments.clear();
          for (auto item : split_list(v)) c.experiments.push_back(parse_number<std::int64_t>(item));
        }};
    f["robot.tracks"] = number(&ExperimentConfig::robot_tracks);
    f["robot.steps"] = number(&ExperimentConfig::robot_steps);
    f["robot.execution_noise"] = number(&ExperimentConfig::robot_noise);
    f["bank.tracks"] = number(&ExperimentConfig::bank_tracks);
    f["bank.scenes_per_track"] = number(&ExperimentConfig::bank_scenes_per_track);
    f["bank.stride"] = number(&ExperimentConfig::bank_stride);
    f["bank.execution_noise"] = number(&ExperimentConfig::bank_noise);
    f["test.tracks"] = number(&ExperimentConfig::test_tracks);
    f["test.steps"] = number(&ExperimentConfig::test_steps);
    f["net.hidden"] = {
        [](const ExperimentConfig& c) {
          return join(c.hidden, [](int h) { return std::to_string(h); });
        },
        [](ExperimentConfig& c, std::string_view v) {
          c.hidden.clear();
          for (auto item : split_list(v)) c.hidden.push_back(parse_number<int>(item));
        }};
    add_train_fields(f, "train", &ExperimentConfig::train);
    add_train_fields(f, "guide", &ExperimentConfig::guide);
    f["server.robots"] = number(&ExperimentConfig::server_robots);
    f["server.frequency"] = number(&ExperimentConfig::server_frequency);
    f["server.mode"] = {[](const ExperimentConfig& c) { return std::string(protocol::to_string(c.server_mode)); },
                        [](ExperimentConfig& c, std::string_view v) {
                          const auto m = protocol::parse_mode(v);
                          if (!m) throw ArgumentError("mode must be sync or async");
                          c.server_mode = *m;
                        }};
    f["server.listen"] = {[](const ExperimentConfig& c) { return c.server_listen; },
                          [](ExperimentConfig& c, std::string_view v) { c.server_listen = v; }};
    f["server.async_period_ms"] = number(&ExperimentConfig::server_async_period_ms);
    f["fusion.aggregator"] = {
        [](const ExperimentConfig& c) { return std::string(fusion::to_string(c.aggregator)); },
        [](ExperimentConfig& c, std::string_view v) {
          const auto a = fusion::parse_aggregator(v);
          if (!a) throw ArgumentError("aggregator must be median or mean");
          c.aggregator = *a;
        }};
    f["transfer.split_index"] = number(&ExperimentConfig::transfer_split);
    f["transfer.head_init"] = {
        [](const ExperimentConfig& c) {
          return std::string(c.transfer_head == transfer::HeadInit::keep_guide ? "keep_guide"
                                                                               : "reinitialize");
        },
        [](ExperimentConfig& c, std::string_view v) {
          if (v == "keep_guide") c.transfer_head = transfer::HeadInit::keep_guide;
          else if (v == "reinitialize") c.transfer_head = transfer::HeadInit::reinitialize;
          else throw ArgumentError("head_init must be keep_guide or reinitialize");
        }};
    f["transfer.lr_scale"] = number(&ExperimentConfig::transfer_lr_scale);
    f["transfer.tracks"] = number(&ExperimentConfig::transfer_tracks);
    f["transfer.steps"] = number(&ExperimentConfig::transfer_steps);
    f["transfer.execution_noise"] = number(&ExperimentConfig::transfer_noise);
    f["transfer.arm_seeds"] = number(&ExperimentConfig::transfer_arm_seeds);
    f["eval.tracks"] = number(&ExperimentConfig::eval_tracks);
    f["eval.max_steps"] = number(&ExperimentConfig::eval_max_steps);
    f["eval.weathers"] = {
        [](const ExperimentConfig& c) {
          return join(c.weathers, [](sim::WeatherKind k) { return std::string(sim::to_string(k)); });
        },
        [](ExperimentConfig& c, std::string_view v) {
          c.weathers.clear();
          for (auto item : split_list(v)) {
            const auto k = sim::parse_weather(item);
            if (!k) throw ArgumentError("unknown weather '" + std::string(item) + "'");
            c.weathers.push_back(*k);
          }
        }};
    f["eval.weather_intensity"] = number(&ExperimentConfig::weather_intensity);
    return f;
  }();
  return table;
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  guide = fusion::default_guide_config();
  guide.epochs = 150;
}

nn::NetSpec ExperimentConfig::net_spec() const {
  return nn::policy_spec_from_hidden(sim::kGridCells, hidden);
}

transfer::TransferPlan ExperimentConfig::transfer_plan(std::uint64_t head_seed) const {
  transfer::TransferPlan plan;
  plan.split_index = transfer_split == 0 ? transfer::default_split_index(net_spec()) : transfer_split;
  plan.head_init = transfer_head;
  plan.lr_scale = transfer_lr_scale;
  plan.head_seed = head_seed;
  return plan;
}

protocol::ServerConfig ExperimentConfig::server_config(std::uint64_t guide_seed) const {
  protocol::ServerConfig cfg;
  cfg.robots = server_robots;
  cfg.frequency = server_frequency;
  cfg.mode = server_mode;
  cfg.listen = server_listen;
  cfg.async_period = std::chrono::milliseconds(server_async_period_ms);
  cfg.aggregator = aggregator;
  cfg.guide_spec = net_spec();
  cfg.guide_cfg = guide;
  cfg.guide_cfg.seed = guide_seed;
  return cfg;
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ArgumentError(std::string("config: ") + what);
  };
  require(!experiments.empty(), "experiment.seeds must list at least one seed");
  require(std::all_of(experiments.begin(), experiments.end(),
                      [](std::int64_t s) { return s >= 0 && s < 40; }),
          "experiment seeds must lie in [0, 40)");
  require(robot_tracks >= 1 && robot_tracks <= 50, "robot.tracks must lie in [1, 50]");
  require(bank_tracks >= 1 && bank_tracks <= 1000, "bank.tracks must lie in [1, 1000]");
  require(transfer_tracks >= 1 && transfer_tracks <= 10, "transfer.tracks must lie in [1, 10]");
  require(robot_steps >= 1 && test_steps >= 1 && transfer_steps >= 1, "step counts must be >= 1");
  require(bank_scenes_per_track >= 1 && bank_stride >= 1, "bank sizes must be >= 1");
  require(test_tracks >= 1 && eval_tracks >= 1 && eval_max_steps >= 1, "eval sizes must be >= 1");
  require(robot_noise >= 0 && bank_noise >= 0 && transfer_noise >= 0, "noise must be >= 0");
  require(transfer_arm_seeds >= 2, "transfer.arm_seeds must be >= 2");
  require(!weathers.empty(), "eval.weathers must not be empty");
  require(weather_intensity >= 0.0 && weather_intensity <= 1.0,
          "eval.weather_intensity must lie in [0, 1]");
  require(server_async_period_ms > 0, "server.async_period_ms must be positive");
  train.validate();
  guide.validate();
  nn::validate_policy_spec(net_spec());
  server_config(1).validate();
  transfer::TransferPlan plan = transfer_plan(1);
  require(plan.split_index > 0 && plan.split_index < net_spec().size(),
          "transfer.split_index out of range");
  require(transfer_lr_scale > 0.0, "transfer.lr_scale must be positive");
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + "=" + field.get(*this) + "\n";
  return out;
}

std::uint64_t ExperimentConfig::digest() const { return Fnv64().add(to_text()).value(); }

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ArgumentError("unknown config key '" + std::string(key) + "'");
  try {
    it->second.set(*this, trim(value));
  } catch (const ArgumentError& e) {
    throw ArgumentError(std::string(key) + ": " + e.what());
  }
}

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  ExperimentConfig cfg;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    auto body = trim(std::string_view(line).substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw ArgumentError("config line " + std::to_string(line_no) + ": expected key=value");
    try {
      cfg.set(trim(body.substr(0, eq)), body.substr(eq + 1));
    } catch (const ArgumentError& e) {
      throw ArgumentError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  const auto bytes = read_file(path);
  return parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace fil::app
