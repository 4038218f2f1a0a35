#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fil/fusion/aggregation.hpp"
#include "fil/nn/layer_spec.hpp"
#include "fil/nn/optimizer.hpp"
#include "fil/protocol/server.hpp"
#include "fil/sim/weather.hpp"
#include "fil/transfer/transfer.hpp"

namespace fil::app {

// Everything an experiment run depends on. Read from a flat key=value file
// ("train.learning_rate = 0.01", '#' comments); keys left out keep their
// defaults. The digest covers the canonical text of all keys, so two files
// that resolve to the same values share a digest.
struct ExperimentConfig {
  std::vector<std::int64_t> experiments = {1, 2, 3, 4, 5};

  int robot_tracks = 8;
  int robot_steps = 500;
  double robot_noise = 0.15;

  int bank_tracks = 10;
  int bank_scenes_per_track = 100;
  int bank_stride = 5;
  double bank_noise = 0.15;

  int test_tracks = 6;
  int test_steps = 500;

  std::vector<int> hidden = {64, 32};
  nn::TrainConfig train;
  nn::TrainConfig guide;

  int server_robots = 3;
  int server_frequency = 1;
  protocol::FusionMode server_mode = protocol::FusionMode::synchronous;
  std::string server_listen = "127.0.0.1:0";
  int server_async_period_ms = 10000;
  fusion::Aggregator aggregator = fusion::Aggregator::median;

  std::size_t transfer_split = 0;  // 0 picks the default split for the net
  transfer::HeadInit transfer_head = transfer::HeadInit::keep_guide;
  double transfer_lr_scale = 1.0;
  int transfer_tracks = 2;
  int transfer_steps = 300;
  double transfer_noise = 0.15;
  int transfer_arm_seeds = 2;

  int eval_tracks = 4;
  int eval_max_steps = 1000;
  std::vector<sim::WeatherKind> weathers = {sim::WeatherKind::none, sim::WeatherKind::rain,
                                            sim::WeatherKind::snow, sim::WeatherKind::fog,
                                            sim::WeatherKind::dust};
  double weather_intensity = 0.5;

  ExperimentConfig();

  nn::NetSpec net_spec() const;
  transfer::TransferPlan transfer_plan(std::uint64_t head_seed) const;
  protocol::ServerConfig server_config(std::uint64_t guide_seed) const;

  // Range checks across all fields; throws ArgumentError.
  void validate() const;

  // Every key, sorted, one "key=value" per line.
  std::string to_text() const;
  std::uint64_t digest() const;

  // Throws ArgumentError naming the line for unknown keys or bad values.
  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::string& path);

  // Applies one "key=value" override on top of the current values.
  void set(std::string_view key, std::string_view value);
};

}  // namespace fil::app
