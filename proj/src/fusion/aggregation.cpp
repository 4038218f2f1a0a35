#include "fil/fusion/aggregation.hpp"

#include <algorithm>
#include <vector>

#include "fil/common/errors.hpp"

namespace fil::fusion {

double median(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("median of an empty set");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("mean of an empty set");
  double s = 0.0;
  for (double x : values) s += x;
  return s / static_cast<double>(values.size());
}

double aggregate(Aggregator how, std::span<const double> values) {
  return how == Aggregator::median ? median(values) : mean(values);
}

std::string_view to_string(Aggregator a) { return a == Aggregator::median ? "median" : "mean"; }

std::optional<Aggregator> parse_aggregator(std::string_view name) {
  if (name == "median") return Aggregator::median;
  if (name == "mean") return Aggregator::mean;
  return std::nullopt;
}

}  // namespace fil::fusion
