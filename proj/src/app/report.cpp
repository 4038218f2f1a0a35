#include "fil/app/report.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "fil/app/svg.hpp"
#include "fil/common/digest.hpp"
#include "fil/common/errors.hpp"

namespace fil::app {

namespace {

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T to_number(const std::string& s, const char* what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError(std::string("bad ") + what + " value '" + s + "'");
  return v;
}

Modality to_modality(const std::string& s) {
  const auto m = parse_modality(s);
  if (!m) throw DataError("unknown modality '" + s + "'");
  return *m;
}

// Yields the data rows of a CSV, checking the header.
std::vector<std::vector<std::string>> read_rows(std::istream& is, const std::string& header) {
  std::vector<std::vector<std::string>> rows;
  bool saw_header = false;
  const auto width = split(header).size();
  for (std::string line; std::getline(is, line);) {
    if (line.empty() || line[0] == '#') continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!saw_header) {
      if (line != header) throw DataError("unexpected CSV header '" + line + "'");
      saw_header = true;
      continue;
    }
    auto cells = split(line);
    if (cells.size() != width)
      throw DataError("CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(width));
    rows.push_back(std::move(cells));
  }
  if (!saw_header) throw DataError("CSV has no header line");
  return rows;
}

const std::string kEvalHeader =
    "group,suite,controller,modality,weather,intensity,episodes,collisions,off_track,"
    "arcs_encountered,arcs_missed,straights_encountered,straight_mistakes";
const std::string kOfflineHeader = "group,controller,modality,mse,mistakes,n,mistake_rate";
const std::string kCurvesHeader = "group,series,seed,epoch,train_mse,val_mse";

template <typename Key, typename Value>
struct Ordered {
  std::vector<Key> order;
  std::map<Key, Value> values;
  Value& at(const Key& k) {
    auto [it, fresh] = values.try_emplace(k);
    if (fresh) order.push_back(k);
    return it->second;
  }
};

}  // namespace

std::string header_comment(const Provenance& p) {
  return "# producer=" + p.producer + " config=" + hex64(p.config_digest) + " seed=" + p.seed + "\n";
}

void write_sidecar(const std::string& artifact_path, const Provenance& p) {
  std::ofstream out(artifact_path + ".meta", std::ios::trunc);
  if (!out) throw ArgumentError("cannot write " + artifact_path + ".meta");
  out << "producer=" << p.producer << "\nconfig=" << hex64(p.config_digest) << "\nseed=" << p.seed
      << "\n";
}

std::optional<Provenance> read_provenance(const std::string& path) {
  auto parse_digest = [](const std::string& hex) {
    std::uint64_t v = 0;
    std::from_chars(hex.data(), hex.data() + hex.size(), v, 16);
    return v;
  };
  if (std::ifstream meta(path + ".meta"); meta) {
    Provenance p;
    for (std::string line; std::getline(meta, line);) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const auto key = line.substr(0, eq), value = line.substr(eq + 1);
      if (key == "producer") p.producer = value;
      else if (key == "config") p.config_digest = parse_digest(value);
      else if (key == "seed") p.seed = value;
    }
    return p;
  }
  std::ifstream in(path);
  std::string first;
  if (!in || !std::getline(in, first) || first.rfind("# producer=", 0) != 0) return std::nullopt;
  Provenance p;
  std::istringstream words(first.substr(2));
  for (std::string word; words >> word;) {
    const auto eq = word.find('=');
    if (eq == std::string::npos) {
      p.producer += " " + word;  // producer names contain a space
      continue;
    }
    const auto key = word.substr(0, eq), value = word.substr(eq + 1);
    if (key == "producer") p.producer = value;
    else if (key == "config") p.config_digest = parse_digest(value);
    else if (key == "seed") p.seed = value;
  }
  return p;
}

bool check_fresh(const std::string& path, std::uint64_t config_digest, std::ostream& warn) {
  const auto p = read_provenance(path);
  if (!p || p->config_digest == config_digest) return true;
  warn << "warning: " << path << " was produced by '" << p->producer << "' under config "
       << hex64(p->config_digest) << ", current config is " << hex64(config_digest)
       << "; it may be stale\n";
  return false;
}

void write_eval_csv(std::ostream& os, std::span<const EvalRow> rows) {
  os << kEvalHeader << '\n';
  for (const auto& r : rows) {
    const auto& e = r.report;
    os << r.group << ',' << r.suite << ',' << r.controller << ',' << to_string(r.modality) << ','
       << sim::to_string(e.weather.kind) << ',' << fmt17(e.weather.intensity) << ',' << e.episodes
       << ',' << e.collisions << ',' << e.off_track << ',' << e.arcs_encountered << ','
       << e.arcs_missed << ',' << e.straights_encountered << ',' << e.straight_mistakes << '\n';
  }
}

std::vector<EvalRow> read_eval_csv(std::istream& is) {
  std::vector<EvalRow> out;
  for (const auto& c : read_rows(is, kEvalHeader)) {
    EvalRow r;
    r.group = c[0];
    r.suite = c[1];
    r.controller = c[2];
    r.modality = to_modality(c[3]);
    const auto kind = sim::parse_weather(c[4]);
    if (!kind) throw DataError("unknown weather '" + c[4] + "'");
    r.report.weather.kind = *kind;
    r.report.weather.intensity = to_number<double>(c[5], "intensity");
    r.report.episodes = to_number<int>(c[6], "episodes");
    r.report.collisions = to_number<int>(c[7], "collisions");
    r.report.off_track = to_number<int>(c[8], "off_track");
    r.report.arcs_encountered = to_number<int>(c[9], "arcs_encountered");
    r.report.arcs_missed = to_number<int>(c[10], "arcs_missed");
    r.report.straights_encountered = to_number<int>(c[11], "straights_encountered");
    r.report.straight_mistakes = to_number<int>(c[12], "straight_mistakes");
    out.push_back(std::move(r));
  }
  return out;
}

void write_offline_csv(std::ostream& os, std::span<const OfflineRow> rows) {
  os << kOfflineHeader << '\n';
  for (const auto& r : rows)
    os << r.group << ',' << r.controller << ',' << to_string(r.modality) << ',' << fmt17(r.mse)
       << ',' << r.mistakes << ',' << r.n << ','
       << fmt(r.n ? static_cast<double>(r.mistakes) / static_cast<double>(r.n) : 0.0) << '\n';
}

std::vector<OfflineRow> read_offline_csv(std::istream& is) {
  std::vector<OfflineRow> out;
  for (const auto& c : read_rows(is, kOfflineHeader)) {
    OfflineRow r;
    r.group = c[0];
    r.controller = c[1];
    r.modality = to_modality(c[2]);
    r.mse = to_number<double>(c[3], "mse");
    r.mistakes = to_number<std::size_t>(c[4], "mistakes");
    r.n = to_number<std::size_t>(c[5], "n");
    out.push_back(std::move(r));
  }
  return out;
}

void write_table1_csv(std::ostream& os, std::span<const EvalRow> rows,
                      std::span<const OfflineRow> offline) {
  struct Acc {
    Modality modality;
    sim::EvalReport report;
    std::size_t mistakes = 0, n = 0;
  };
  Ordered<std::string, Acc> acc;
  for (const auto& r : rows) {
    if (r.suite != "table1") continue;
    auto& a = acc.at(r.controller);
    a.modality = r.modality;
    a.report.merge(r.report);
  }
  for (const auto& o : offline) {
    auto& a = acc.at(o.controller);
    a.modality = o.modality;
    a.mistakes += o.mistakes;
    a.n += o.n;
  }
  os << "controller,modality,episodes,hit_obstacle_rate,miss_turn_rate,straight_mistake_rate,"
        "offline_mistake_rate\n";
  for (const auto& name : acc.order) {
    const auto& a = acc.values.at(name);
    os << name << ',' << to_string(a.modality) << ',' << a.report.episodes << ','
       << fmt(a.report.hit_obstacle_rate()) << ',' << fmt(a.report.miss_turn_rate()) << ','
       << fmt(a.report.straight_mistake_rate()) << ','
       << (a.n ? fmt(static_cast<double>(a.mistakes) / static_cast<double>(a.n)) : "") << '\n';
  }
}

void write_table2_csv(std::ostream& os, std::span<const EvalRow> rows) {
  Ordered<std::string, Modality> controllers;
  Ordered<sim::WeatherKind, double> weathers;
  std::map<std::pair<std::string, sim::WeatherKind>, sim::EvalReport> acc;
  for (const auto& r : rows) {
    if (r.suite != "table2") continue;
    controllers.at(r.controller) = r.modality;
    weathers.at(r.report.weather.kind) = r.report.weather.intensity;
    acc[{r.controller, r.report.weather.kind}].merge(r.report);
  }
  os << "controller,modality,weather,intensity,episodes,error_rate\n";
  for (const auto& name : controllers.order)
    for (auto w : weathers.order) {
      const auto it = acc.find({name, w});
      if (it == acc.end()) continue;
      os << name << ',' << to_string(controllers.values.at(name)) << ',' << sim::to_string(w)
         << ',' << fmt17(weathers.values.at(w)) << ',' << it->second.episodes << ','
         << fmt(it->second.total_mistake_rate()) << '\n';
    }
}

void write_curves_csv(std::ostream& os, std::span<const CurvePoint> points) {
  os << kCurvesHeader << '\n';
  for (const auto& p : points)
    os << p.group << ',' << p.series << ',' << p.seed << ',' << p.epoch << ',' << fmt17(p.train_mse)
       << ',' << fmt17(p.val_mse) << '\n';
}

std::vector<CurvePoint> read_curves_csv(std::istream& is) {
  std::vector<CurvePoint> out;
  for (const auto& c : read_rows(is, kCurvesHeader)) {
    CurvePoint p;
    p.group = c[0];
    p.series = c[1];
    p.seed = to_number<std::uint64_t>(c[2], "seed");
    p.epoch = to_number<int>(c[3], "epoch");
    p.train_mse = to_number<double>(c[4], "train_mse");
    p.val_mse = to_number<double>(c[5], "val_mse");
    out.push_back(p);
  }
  return out;
}

void write_curves_svg(std::ostream& os, std::span<const CurvePoint> points,
                      const std::string& title) {
  Ordered<std::string, std::map<int, std::pair<double, int>>> acc;
  for (const auto& p : points) {
    auto& slot = acc.at(p.series)[p.epoch];
    slot.first += p.val_mse;
    slot.second += 1;
  }
  std::vector<Series> series;
  for (const auto& name : acc.order) {
    Series s{name, {}};
    for (const auto& [epoch, sum] : acc.values.at(name))
      s.points.emplace_back(epoch, sum.first / sum.second);
    series.push_back(std::move(s));
  }
  ChartOptions opt;
  opt.title = title;
  opt.x_label = "epoch";
  opt.y_label = "validation MSE (rad^2)";
  opt.log_y = true;
  write_line_chart(os, series, opt);
}

}  // namespace fil::app
