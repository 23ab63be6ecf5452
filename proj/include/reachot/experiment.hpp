#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reachot/config.hpp"
#include "reachot/objective.hpp"
#include "reachot/optimizer.hpp"
#include "reachot/sampling.hpp"

namespace reachot {

/// Artifact version, "reachot <semver> (<git describe>)".
std::string version_string();

struct MetricRecord {
  CoverageMetrics coverage;
  /// d = 1 only: W1 and KS distance to uniform on `reference_interval`.
  std::optional<double> w1_uniform;
  std::optional<double> ks_uniform;
  std::optional<std::array<double, 2>> reference_interval;
  std::size_t oracle_rollouts = 0;
  double oracle_h = 0.0;

  nlohmann::json to_json() const;
};

struct RunReport {
  std::string command;
  ExperimentConfig config;
  std::string version;
  std::vector<IterationRecord> history;
  std::optional<ObjectiveBreakdown> initial;
  ObjectiveBreakdown final;
  MetricRecord metrics;
  std::string solver_status;
  std::vector<std::string> flags;
  std::map<std::string, double> timings;
  std::optional<std::string> error;

  nlohmann::json to_json() const;
};

struct RunArtifacts {
  ParticleEnsemble ensemble;
  PointCloud terminals;
  RunReport report;
};

/// Builds the reference oracle for `cfg` (seeded from cfg.seed).
OracleResult build_oracle(const ExperimentConfig& cfg, const ControlAffineSystem& sys,
                          const Execution& exec);

/// Coverage metrics plus the 1-D uniformity distances.
MetricRecord compute_metrics(const ExperimentConfig& cfg, const PointCloud& cloud,
                             const OracleResult& oracle);

/// init_ensemble -> solve -> coverage metrics.
RunArtifacts run_optimize(const ExperimentConfig& cfg, const Execution& exec);

/// baseline_ensemble -> terminal cloud -> coverage metrics.
RunArtifacts run_baseline(const ExperimentConfig& cfg, const Execution& exec);

/// Writes terminal_points.csv, initial_points.csv, controls.csv, history.csv
/// and report.json into `dir` (created if needed).
void write_run(const RunArtifacts& run, const std::filesystem::path& dir);
void write_report(const RunReport& report, const std::filesystem::path& dir);

struct GradcheckProbe {
  std::string variable;  // "u[i,k,j]" or "x0[i,k]"
  double adjoint = 0.0;
  double finite_difference = 0.0;
  double rel_error = 0.0;
};

struct GradcheckResult {
  std::vector<GradcheckProbe> probes;
  /// max |g_i - fd_i| / scale.
  double max_rel_error = 0.0;
  /// Largest |adjoint| or |finite difference| over the probes.
  double scale = 0.0;
  double tolerance = 0.0;
  bool passed = false;

  nlohmann::json to_json() const;
};

/// Compares the adjoint gradient with central differences (step 1e-6) on
/// `n_probes` random coordinates; every coordinate when n_probes covers them
/// all. Errors are relative to the largest probed gradient magnitude.
/// `corruption` is added to the adjoint gradient (negative-control hook).
GradcheckResult run_gradcheck(const ExperimentConfig& cfg, std::size_t n_probes,
                              const Execution& exec, double corruption = 0.0);

struct SweepCell {
  double epsilon = 0.0;
  double delta = 0.0;
  std::string status;
  std::optional<ObjectiveBreakdown> final;
  std::optional<MetricRecord> metrics;
  std::string error;
};

/// Runs run_optimize for each (epsilon, delta) pair, writing each run to
/// `dir / "eps<i>_delta<j>"` and the table to `dir / "sweep.csv"`. A failing
/// cell is recorded and the sweep continues.
std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, const std::vector<double>& epsilons,
                                 const std::vector<double>& deltas, const Execution& exec,
                                 const std::filesystem::path& dir);

/// Recomputes the metric record and objective breakdown from the CSVs in
/// `dir`. Energies need initial_points.csv and controls.csv to be present.
nlohmann::json run_metrics(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                           const Execution& exec);

nlohmann::json to_json(const ObjectiveBreakdown& b);

}  // namespace reachot
