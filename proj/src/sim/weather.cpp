#include "fil/sim/weather.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fil/common/errors.hpp"
#include "fil/common/rng.hpp"

namespace fil::sim {

std::optional<WeatherKind> parse_weather(std::string_view s) {
  for (auto k : {WeatherKind::none, WeatherKind::rain, WeatherKind::snow, WeatherKind::fog,
                 WeatherKind::dust})
    if (to_string(k) == s) return k;
  if (s == "none") return WeatherKind::none;
  return std::nullopt;
}

Observation apply_weather(const Observation& obs, const WeatherPerturbation& w) {
  if (!(w.intensity >= 0.0 && w.intensity <= 1.0))
    throw ArgumentError("weather intensity must be within [0, 1]");
  if (w.kind == WeatherKind::none || w.intensity == 0.0) return obs;

  Observation out = obs;
  auto& g = out.grid;
  Rng rng(mix_seed(w.seed, static_cast<std::uint64_t>(w.kind)));
  const double t = w.intensity;

  switch (w.kind) {
    case WeatherKind::none: break;
    case WeatherKind::rain: {
      const auto count = static_cast<std::size_t>(std::floor(t * 0.10 * kGridCells));
      std::array<int, kGridCells> idx;
      std::iota(idx.begin(), idx.end(), 0);
      for (std::size_t i = 0; i < count; ++i) {
        std::swap(idx[i], idx[i + rng.below(kGridCells - i)]);
        auto& v = g[static_cast<std::size_t>(idx[i])];
        v = v < 0.5f ? 1.0f : 0.0f;
      }
      break;
    }
    case WeatherKind::snow: {
      const int patches = static_cast<int>(std::floor(t * 3.0));
      for (int k = 0; k < patches; ++k) {
        const int r = static_cast<int>(rng.below(kGridSize - 1));
        const int c = static_cast<int>(rng.below(kGridSize - 1));
        out.at(r, c) = out.at(r + 1, c) = out.at(r, c + 1) = out.at(r + 1, c + 1) = 1.0f;
      }
      break;
    }
    case WeatherKind::fog:
      for (auto& v : g) v = static_cast<float>((1.0 - t) * v + t * 0.5);
      break;
    case WeatherKind::dust: {
      Observation lifted = out;
      for (auto& v : lifted.grid) v = static_cast<float>(std::min(1.0, v + 0.3 * t));
      for (int r = 0; r < kGridSize; ++r) {
        for (int c = 0; c < kGridSize; ++c) {
          double sum = 0.0;
          int n = 0;
          for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
              const int rr = r + dr, cc = c + dc;
              if (rr < 0 || cc < 0 || rr >= kGridSize || cc >= kGridSize) continue;
              sum += lifted.at(rr, cc);
              ++n;
            }
          out.at(r, c) = static_cast<float>(sum / n);
        }
      }
      break;
    }
  }
  for (auto& v : g) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

Observation apply_weather(const Observation& obs, const WeatherPerturbation& w,
                          std::uint64_t frame) {
  WeatherPerturbation per_frame = w;
  per_frame.seed = mix_seed(w.seed, frame);
  return apply_weather(obs, per_frame);
}

}  // namespace fil::sim
