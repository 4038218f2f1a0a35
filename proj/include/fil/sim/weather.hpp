#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "fil/sim/observation.hpp"

namespace fil::sim {

enum class WeatherKind : std::uint8_t { none = 0, rain, snow, fog, dust };

inline std::string_view to_string(WeatherKind k) {
  switch (k) {
    case WeatherKind::none: return "normal";
    case WeatherKind::rain: return "rain";
    case WeatherKind::snow: return "snow";
    case WeatherKind::fog: return "fog";
    case WeatherKind::dust: return "dust";
  }
  return "unknown";
}

std::optional<WeatherKind> parse_weather(std::string_view s);

struct WeatherPerturbation {
  WeatherKind kind = WeatherKind::none;
  double intensity = 0.0;
  std::uint64_t seed = 0;
};

// rain: salt-and-pepper flips on floor(intensity * 0.10 * 256) distinct cells
// snow: floor(intensity * 3) random 2x2 patches set to 1
// fog:  blend toward 0.5 by factor intensity
// dust: +0.3 * intensity, then 3x3 box blur
// Results are clamped to [0, 1]. kind none or intensity 0 is the identity.
Observation apply_weather(const Observation& obs, const WeatherPerturbation& w);

// Same perturbation family with a per-frame stream derived from w.seed.
Observation apply_weather(const Observation& obs, const WeatherPerturbation& w,
                          std::uint64_t frame);

}  // namespace fil::sim
