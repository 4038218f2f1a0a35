#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fil/common/modality.hpp"
#include "fil/sim/episode.hpp"

namespace fil::app {

// Who made an artifact. CSVs carry it as their first line, binary files in a
// "<path>.meta" sidecar.
struct Provenance {
  std::string producer;  // e.g. "fil train-local"
  std::uint64_t config_digest = 0;
  std::string seed;

  bool operator==(const Provenance&) const = default;
};

std::string header_comment(const Provenance& p);
void write_sidecar(const std::string& artifact_path, const Provenance& p);

// From the sidecar if one exists, else from a leading header comment.
std::optional<Provenance> read_provenance(const std::string& path);

// Prints a staleness warning when `path` records a different config digest.
// Returns false in that case.
bool check_fresh(const std::string& path, std::uint64_t config_digest, std::ostream& warn);

// One closed-loop evaluation. suite is "table1" (local vs cloud, normal
// weather) or "table2" (general vs transferred, per weather).
struct EvalRow {
  std::string group;  // experiment seed
  std::string suite;
  std::string controller;
  Modality modality = Modality::occupancy;
  sim::EvalReport report;
};

struct OfflineRow {
  std::string group;
  std::string controller;
  Modality modality = Modality::occupancy;
  double mse = 0.0;
  std::size_t mistakes = 0;
  std::size_t n = 0;
};

void write_eval_csv(std::ostream& os, std::span<const EvalRow> rows);
std::vector<EvalRow> read_eval_csv(std::istream& is);
void write_offline_csv(std::ostream& os, std::span<const OfflineRow> rows);
std::vector<OfflineRow> read_offline_csv(std::istream& is);

// Table-1 shape: per controller, pooled hit / miss / straight rates over the
// table1 rows, plus the pooled offline mistake rate when offline rows exist.
void write_table1_csv(std::ostream& os, std::span<const EvalRow> rows,
                      std::span<const OfflineRow> offline);

// Table-2 shape: per (controller, weather), pooled total mistake rate over the
// table2 rows. Controllers keep their first-seen order, weathers too.
void write_table2_csv(std::ostream& os, std::span<const EvalRow> rows);

struct CurvePoint {
  std::string group;
  std::string series;  // e.g. "transferred-distance"
  std::uint64_t seed = 0;
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

void write_curves_csv(std::ostream& os, std::span<const CurvePoint> points);
std::vector<CurvePoint> read_curves_csv(std::istream& is);

// Mean validation curve per series, averaged over groups and seeds.
void write_curves_svg(std::ostream& os, std::span<const CurvePoint> points,
                      const std::string& title);

}  // namespace fil::app
