#include "fil/app/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "fil/common/errors.hpp"

namespace fil::app {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

void write_line_chart(std::ostream& os, const std::vector<Series>& series,
                      const ChartOptions& o) {
  if (o.width < 200 || o.height < 150) throw ArgumentError("chart is too small");
  const double left = 70, right = 170, top = 40, bottom = 50;
  const double pw = o.width - left - right, ph = o.height - top - bottom;

  auto ty = [&](double y) { return o.log_y ? std::log10(y) : y; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      if (o.log_y && !(y > 0)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, ty(y));
      y1 = std::max(y1, ty(y));
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + ph - (ty(y) - y0) / (y1 - y0) * ph; };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width << "\" height=\""
     << o.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << escape(o.title) << "</text>\n";
  os << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw)
     << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0;
    const double fy = y0 + (y1 - y0) * i / 4.0;
    const double sx = left + pw * i / 4.0, sy = top + ph - ph * i / 4.0;
    os << "<line x1=\"" << num(sx) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(sx)
       << "\" y2=\"" << num(top + ph + 5) << "\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << num(sx) << "\" y=\"" << num(top + ph + 18)
       << "\" text-anchor=\"middle\">" << tick_label(fx) << "</text>\n";
    os << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(sy) << "\" x2=\"" << num(left)
       << "\" y2=\"" << num(sy) << "\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << num(left - 8) << "\" y=\"" << num(sy + 4) << "\" text-anchor=\"end\">"
       << tick_label(o.log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
  }
  os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(o.height - 10.0)
     << "\" text-anchor=\"middle\">" << escape(o.x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << num(top + ph / 2) << ") rotate(-90)\" "
     << "text-anchor=\"middle\">" << escape(o.y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (auto [x, y] : series[i].points) {
      if (o.log_y && !(y > 0)) continue;
      os << (first ? "" : " ") << num(px(x)) << ',' << num(py(y));
      first = false;
    }
    os << "\"/>\n";
    const double ly = top + 10 + 18.0 * static_cast<double>(i);
    os << "<line x1=\"" << num(left + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\""
       << num(left + pw + 32) << "\" y2=\"" << num(ly) << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << num(left + pw + 38) << "\" y=\"" << num(ly + 4) << "\">"
       << escape(series[i].name) << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace fil::app
