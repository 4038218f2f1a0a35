#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fil/app/pipeline.hpp"
#include "fil/app/svg.hpp"
#include "fil/common/errors.hpp"

using namespace fil;
using namespace fil::app;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("fil_test_app_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

sim::EvalReport report(sim::WeatherKind w, int episodes, int collisions, int arcs, int missed) {
  sim::EvalReport r;
  r.weather = {w, w == sim::WeatherKind::none ? 0.0 : 0.5, 1};
  r.episodes = episodes;
  r.collisions = collisions;
  r.arcs_encountered = arcs;
  r.arcs_missed = missed;
  r.straights_encountered = arcs;
  return r;
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("config text round-trips and drives the digest") {
  const ExperimentConfig def;
  CHECK_NOTHROW(def.validate());
  const auto text = def.to_text();
  const auto back = ExperimentConfig::parse(text);
  CHECK(back.to_text() == text);
  CHECK(back.digest() == def.digest());

  auto changed = def;
  changed.set("train.epochs", "7");
  CHECK(changed.train.epochs == 7);
  CHECK(changed.digest() != def.digest());

  const auto parsed = ExperimentConfig::parse("# comment\n\ntrain.epochs = 7  # trailing\n");
  CHECK(parsed.digest() == changed.digest());

  SUBCASE("keys are sorted") {
    std::istringstream is(text);
    std::string line, prev;
    while (std::getline(is, line)) {
      CHECK(prev < line);
      prev = line;
    }
  }
  SUBCASE("errors name the line") {
    try {
      ExperimentConfig::parse("train.epochs=3\nno.such_key=1\n");
      FAIL("expected ArgumentError");
    } catch (const ArgumentError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(ExperimentConfig::parse("train.epochs=lots\n"), ArgumentError);
    CHECK_THROWS_AS(ExperimentConfig::parse("missing equals\n"), ArgumentError);
    CHECK_THROWS_AS(ExperimentConfig::parse("server.mode=sometimes\n"), ArgumentError);
    CHECK_THROWS_AS(ExperimentConfig::parse("eval.weathers=hail\n"), ArgumentError);
  }
  SUBCASE("derived settings") {
    auto cfg = def;
    cfg.set("net.hidden", "16,8");
    CHECK(cfg.net_spec().size() == 3);
    CHECK(cfg.net_spec()[0].out_dim == 16);
    cfg.set("server.frequency", "2");
    cfg.set("server.mode", "async");
    const auto sc = cfg.server_config(9);
    CHECK(sc.frequency == 2);
    CHECK(sc.mode == protocol::FusionMode::asynchronous);
    CHECK(sc.guide_cfg.seed == 9);
    CHECK(cfg.transfer_plan(4).head_seed == 4);
  }
}

TEST_CASE("seed layout keeps the suites apart") {
  std::set<std::int64_t> seen;
  std::size_t total = 0;
  for (std::int64_t e = 1; e <= 5; ++e) {
    std::set<int> envs;
    for (auto m : kAllModalities) {
      envs.insert(robot_environment(e, m));
      for (auto s : robot_track_seeds(e, m, 8)) seen.insert(s), ++total;
      for (auto s : transfer_track_seeds(e, m, 2)) seen.insert(s), ++total;
    }
    CHECK(envs.size() == 3);
    for (auto s : bank_track_seeds(e, 10)) seen.insert(s), ++total;
  }
  for (auto s : test_track_seeds(6)) seen.insert(s), ++total;
  for (auto s : eval_track_seeds(4)) seen.insert(s), ++total;
  CHECK(seen.size() == total);
  CHECK(robot_recipe(2).obstacles == 0);
  CHECK(robot_recipe(0).obstacles > 0);
  CHECK_THROWS_AS(robot_recipe(3), ArgumentError);
}

TEST_CASE("robot environments shape the tracks") {
  for (auto m : kAllModalities) {
    const int env = robot_environment(1, m);
    std::set<int> signs;
    std::size_t obstacles = 0;
    for (auto s : robot_track_seeds(1, m, 4)) {
      const auto w = sim::make_track(s, robot_recipe(env));
      obstacles += w.obstacles.size();
      for (const auto& seg : w.segments)
        if (seg.kind == sim::SegmentKind::arc) signs.insert(seg.curvature > 0 ? 1 : -1);
    }
    CAPTURE(env);
    CHECK((obstacles == 0) == (env == 2));
    CHECK(signs.size() == (env == 2 ? 2u : 1u));
  }
}

TEST_CASE("eval and offline CSVs round-trip") {
  std::vector<EvalRow> rows = {
      {"1", "table1", "local-distance", Modality::distance, report(sim::WeatherKind::none, 4, 1, 10, 2)},
      {"1", "table2", "scratch-semantic", Modality::semantic, report(sim::WeatherKind::fog, 4, 0, 8, 3)},
  };
  std::stringstream ss;
  write_eval_csv(ss, rows);
  const auto back = read_eval_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[1].controller == "scratch-semantic");
  CHECK(back[1].report.weather.kind == sim::WeatherKind::fog);
  CHECK(back[1].report.arcs_missed == 3);
  CHECK(back[0].report.collisions == 1);

  std::vector<OfflineRow> off = {{"1", "cloud-occupancy", Modality::occupancy, 0.01, 7, 100}};
  std::stringstream so;
  write_offline_csv(so, off);
  const auto off_back = read_offline_csv(so);
  REQUIRE(off_back.size() == 1);
  CHECK(off_back[0].mistakes == 7);
  CHECK(off_back[0].mse == doctest::Approx(0.01));

  std::stringstream bad("group,oops\n1,2\n");
  CHECK_THROWS(read_eval_csv(bad));
}

TEST_CASE("tables pool rows per controller") {
  std::vector<EvalRow> rows;
  std::vector<OfflineRow> offline;
  for (const char* group : {"1", "2"})
    for (auto m : kAllModalities) {
      const std::string name(to_string(m));
      rows.push_back({group, "table1", "local-" + name, m, report(sim::WeatherKind::none, 2, 1, 4, 1)});
      rows.push_back({group, "table1", "cloud-" + name, m, report(sim::WeatherKind::none, 2, 0, 4, 0)});
      offline.push_back({group, "local-" + name, m, 0.0, 3, 10});
      offline.push_back({group, "cloud-" + name, m, 0.0, 1, 10});
      for (auto w : {sim::WeatherKind::none, sim::WeatherKind::rain, sim::WeatherKind::snow,
                     sim::WeatherKind::fog, sim::WeatherKind::dust}) {
        rows.push_back({group, "table2", "scratch-" + name, m, report(w, 2, 1, 4, 1)});
        rows.push_back({group, "table2", "transferred-" + name, m, report(w, 2, 0, 4, 1)});
      }
    }
  std::ostringstream t1, t2;
  write_table1_csv(t1, rows, offline);
  write_table2_csv(t2, rows);
  const auto s1 = t1.str();
  const auto s2 = t2.str();
  CHECK(lines(s1) == 1 + 6);
  CHECK(lines(s2) == 1 + 6 * 5);
  // Pooled over both groups: 2 collisions in 4 episodes, 6/20 offline mistakes.
  CHECK(s1.find("local-occupancy,occupancy,4,0.500000,0.250000,0.000000,0.300000") != std::string::npos);
  CHECK(s1.find("cloud-occupancy,occupancy,4,0.000000,0.000000,0.000000,0.100000") != std::string::npos);
  // Total rate: (2 collisions + 2 missed arcs) / (4 episodes + 8 arcs + 8 straights).
  CHECK(s2.find("scratch-distance,distance,fog,0.5,4,0.200000") != std::string::npos);
}

TEST_CASE("provenance headers and staleness") {
  const auto dir = temp_dir("prov");
  const Provenance p{"fil test", 0xabcdef, "3"};
  const auto csv = (dir / "a.csv").string();
  { std::ofstream(csv) << header_comment(p) << "x\n1\n"; }
  REQUIRE(read_provenance(csv).has_value());
  CHECK(*read_provenance(csv) == p);
  std::ostringstream warn;
  CHECK(check_fresh(csv, 0xabcdef, warn));
  CHECK(warn.str().empty());
  CHECK_FALSE(check_fresh(csv, 0x1234, warn));
  CHECK(warn.str().find("a.csv") != std::string::npos);

  const auto bin = (dir / "m.filp").string();
  { std::ofstream(bin) << "FILP"; }
  CHECK_FALSE(read_provenance(bin).has_value());
  write_sidecar(bin, p);
  CHECK(read_provenance(bin) == p);
  fs::remove_all(dir);
}

TEST_CASE("svg charts are deterministic") {
  const std::vector<Series> series = {{"a", {{0, 1.0}, {1, 0.5}, {2, 0.25}}}, {"b", {{0, 0.8}, {2, 0.0}}}};
  ChartOptions opt;
  opt.title = "T & <x>";
  opt.log_y = true;
  std::ostringstream one, two;
  write_line_chart(one, series, opt);
  write_line_chart(two, series, opt);
  const auto text = one.str();
  CHECK(text == two.str());
  CHECK(text.rfind("<svg", 0) == 0);
  CHECK(text.find("T &amp; &lt;x&gt;") != std::string::npos);
  CHECK(lines(text) > 5);

  std::vector<CurvePoint> pts;
  for (int e = 0; e < 3; ++e) pts.push_back({"1", "scratch-distance", 1, e, 0.1 / (e + 1), 0.2 / (e + 1)});
  std::stringstream cs;
  write_curves_csv(cs, pts);
  const auto back = read_curves_csv(cs);
  REQUIRE(back.size() == 3);
  CHECK(back[2].val_mse == pts[2].val_mse);
  std::ostringstream svg;
  write_curves_svg(svg, pts, "curves");
  CHECK(svg.str().find("scratch-distance") != std::string::npos);
}

TEST_CASE("expert controller scores zero mistakes through evaluate_controller") {
  const auto tracks = eval_track_seeds(3);
  const auto r = evaluate_controller(sim::expert_controller(), Modality::distance, tracks,
                                     sim::WeatherKind::none, 0.0, 600);
  CHECK(r.episodes == 3);
  CHECK(r.arcs_encountered > 0);
  CHECK(r.total_mistake_rate() == 0.0);
}
