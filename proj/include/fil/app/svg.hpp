#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace fil::app {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;  // non-positive values are dropped on a log axis
  int width = 720;
  int height = 420;
};

// Minimal line chart: axes with five ticks each, one polyline per series and
// a legend. Output depends only on the inputs.
void write_line_chart(std::ostream& os, const std::vector<Series>& series,
                      const ChartOptions& options);

}  // namespace fil::app
