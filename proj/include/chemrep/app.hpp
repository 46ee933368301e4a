#pragma once

// Run configuration, initial-condition presets, output writers, and the
// run / check / sweep-eps drivers behind the command-line tool.

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "chemrep/diagnostics.hpp"
#include "chemrep/schemes.hpp"

namespace chemrep {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitSolver = 3, kExitProperty = 4 };

struct RunConfig {
  SchemeKind scheme = SchemeKind::uv;
  int nx = 20;
  int ny = 20;
  double lx = 2.0;
  double ly = 2.0;
  double k = 1e-5;
  int n_steps = 100;
  double eps = 1e-3;
  double a_shift = 1.0;
  double picard_tol = 1e-4;
  int picard_max_iters = 100;
  std::string ic_preset = "energy2";
  std::filesystem::path output_dir = "out";
  int snapshot_stride = 0;  // 0: no VTK snapshots
  bool parallel = true;

  /// Throws ConfigError.
  void validate() const;
  RegParams reg() const { return {eps, a_shift}; }
  PicardSettings picard() const { return {picard_tol, picard_max_iters}; }
};

/// positivity, energy1, energy2, constant, custom-gaussian. Throws ConfigError.
InitialData preset_ic(std::string_view name);
std::vector<std::string> preset_names();

/// Fixed CSV header and row formatting (shortest round-trip doubles).
std::string_view csv_header();
std::string csv_row(const TimeSeriesRow& row);

void write_vtk(std::ostream& os, const Mesh& mesh, const SchemeState& state);

struct RunSummary {
  int steps_completed = 0;
  bool failed = false;
  std::string error;
  double final_e_mod = 0.0;
  double final_e_exact = 0.0;
  double max_re_exact = -std::numeric_limits<double>::infinity();  // over steps n >= 1
  double min_min_u = 0.0;
  double max_neg_norm_sq = 0.0;
  double max_mass_drift = 0.0;
  int max_picard_iters = 0;
};

/// In-memory run: rows[0] is the initial state. Stops early on StepError,
/// recording the message in the summary.
struct RunResult {
  std::vector<TimeSeriesRow> rows;
  RunSummary summary;
};
RunResult simulate(const RunConfig& cfg);

/// Writes series.csv, summary.json and optional snapshots under
/// cfg.output_dir. Returns an ExitCode.
int run(const RunConfig& cfg, std::ostream& log);

/// Invariant suite on cfg; prints one PASS/FAIL line per property.
int check(const RunConfig& cfg, std::ostream& log);

/// Independent runs for each eps, concurrently; outputs go to
/// output_dir/eps_<value>/.
int sweep_eps(const RunConfig& cfg, const std::vector<double>& eps_values, std::ostream& log);

}  // namespace chemrep
