#pragma once

#include <optional>
#include <span>
#include <string_view>

namespace fil::fusion {

enum class Aggregator { median, mean };

// Even counts take the mean of the two middle values. Throws ArgumentError on
// an empty input.
double median(std::span<const double> values);
double mean(std::span<const double> values);
double aggregate(Aggregator how, std::span<const double> values);

std::string_view to_string(Aggregator a);
std::optional<Aggregator> parse_aggregator(std::string_view name);

}  // namespace fil::fusion
