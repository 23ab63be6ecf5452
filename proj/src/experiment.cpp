#include "reachot/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "reachot/io.hpp"
#include "reachot/random.hpp"

#ifndef REACHOT_VERSION
#define REACHOT_VERSION "0.0.0"
#endif
#ifndef REACHOT_GIT_DESCRIBE
#define REACHOT_GIT_DESCRIBE "unknown"
#endif

namespace reachot {

using nlohmann::json;

std::string version_string() {
  return std::string("reachot ") + REACHOT_VERSION + " (" + REACHOT_GIT_DESCRIBE + ")";
}

namespace {

constexpr std::uint64_t kOracleStream = 0x6f7261636c65ULL;  // "oracle"
constexpr std::uint64_t kProbeStream = 0x70726f6265ULL;     // "probe"

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Objective make_objective(const ExperimentConfig& cfg, const SystemPtr& sys, const Execution& exec) {
  Execution e = exec;
  e.reduction = cfg.reduction;
  return Objective(sys, cfg.grid(), cfg.scheme, KernelSpec(cfg.kernel_family, cfg.delta, sys->state_dim()),
                   cfg.epsilon, e);
}

std::vector<std::string> standing_flags(const ExperimentConfig& cfg) {
  std::vector<std::string> flags;
  if (cfg.kernel_family == KernelFamily::gaussian) flags.push_back("kernel_not_compactly_supported");
  flags.push_back("oracle_is_random_rollout_under_approximation");
  return flags;
}

}  // namespace

json to_json(const ObjectiveBreakdown& b) {
  return {{"control_energy", b.control_energy},
          {"interaction_energy", b.interaction_energy},
          {"total", b.total},
          {"epsilon", b.epsilon}};
}

json MetricRecord::to_json() const {
  json j = {{"interaction_energy", coverage.interaction_energy},
            {"coverage", coverage.coverage},
            {"nn_min", coverage.nn_min},
            {"nn_mean", coverage.nn_mean},
            {"outside_frac", coverage.outside_frac},
            {"covered_cells", coverage.covered_cells},
            {"occupied_cells", coverage.occupied_cells},
            {"c_hat", coverage.c_hat},
            {"oracle_rollouts", oracle_rollouts},
            {"oracle_h", oracle_h}};
  if (w1_uniform) j["w1_uniform"] = *w1_uniform;
  if (ks_uniform) j["ks_uniform"] = *ks_uniform;
  if (reference_interval) j["reference_interval"] = *reference_interval;
  return j;
}

json RunReport::to_json() const {
  json hist = json::array();
  for (const auto& r : history) {
    hist.push_back({{"iter", r.iter},
                    {"total", r.total},
                    {"control_energy", r.control_energy},
                    {"interaction_energy", r.interaction_energy},
                    {"step", r.step},
                    {"grad_norm", r.grad_norm}});
  }
  json j = {{"command", command},
            {"version", version},
            {"config", config_to_json(config)},
            {"seed", config.seed},
            {"iterations", hist},
            {"final", reachot::to_json(final)},
            {"metrics", metrics.to_json()},
            {"solver_status", solver_status},
            {"flags", flags},
            {"timings_s", timings}};
  if (initial) j["initial"] = reachot::to_json(*initial);
  if (error) j["error"] = *error;
  return j;
}

json GradcheckResult::to_json() const {
  json probes_json = json::array();
  for (const auto& p : probes) {
    probes_json.push_back({{"variable", p.variable},
                           {"adjoint", p.adjoint},
                           {"finite_difference", p.finite_difference},
                           {"rel_error", p.rel_error}});
  }
  return {{"max_rel_error", max_rel_error}, {"scale", scale}, {"tolerance", tolerance}, {"passed", passed},
          {"probes", probes_json}};
}

OracleResult build_oracle(const ExperimentConfig& cfg, const ControlAffineSystem& sys,
                          const Execution& exec) {
  return oracle_reachable(sys, cfg.grid(), cfg.scheme, cfg.omega, cfg.u_box, cfg.oracle_rollouts,
                          cfg.resolved_oracle_segments(), cfg.resolved_oracle_h(),
                          derive_seed(cfg.seed, kOracleStream), exec);
}

MetricRecord compute_metrics(const ExperimentConfig& cfg, const PointCloud& cloud,
                             const OracleResult& oracle) {
  MetricRecord rec;
  rec.coverage = coverage_metrics(cloud, oracle.grid,
                                  KernelSpec(cfg.kernel_family, cfg.delta, cloud.dim), cfg.epsilon);
  rec.oracle_rollouts = cfg.oracle_rollouts;
  rec.oracle_h = cfg.resolved_oracle_h();
  if (cloud.dim == 1) {
    std::array<double, 2> interval{};
    if (cfg.reference_interval) {
      interval = *cfg.reference_interval;
    } else {
      const auto [lo, hi] = std::minmax_element(oracle.cloud.points.begin(), oracle.cloud.points.end());
      interval = {*lo, *hi};
    }
    rec.reference_interval = interval;
    rec.w1_uniform = wasserstein1_1d(cloud.points, interval[0], interval[1]);
    if (interval[0] < interval[1]) rec.ks_uniform = ks_statistic_uniform(cloud.points, interval[0], interval[1]);
  }
  return rec;
}

RunArtifacts run_optimize(const ExperimentConfig& cfg, const Execution& exec) {
  const SystemPtr sys = cfg.validate();
  RunArtifacts run;
  auto& rep = run.report;
  rep.command = "optimize";
  rep.config = cfg;
  rep.version = version_string();
  rep.flags = standing_flags(cfg);

  auto t0 = Clock::now();
  const auto ens0 =
      init_ensemble(*sys, cfg.grid(), cfg.omega, cfg.u_box, cfg.particles, cfg.init, cfg.seed);
  const Objective objective = make_objective(cfg, sys, exec);
  rep.timings["init"] = seconds_since(t0);

  t0 = Clock::now();
  SolverConfig sc = cfg.solver;
  sc.seed = cfg.seed;
  auto result = solve(ens0, objective, cfg.omega, cfg.u_box, sc);
  rep.timings["solve"] = seconds_since(t0);
  rep.history = std::move(result.history);
  rep.initial = result.initial;
  rep.final = result.final;
  rep.solver_status = to_string(result.status);
  if (result.status == SolveStatus::stalled) rep.flags.push_back("solver_stalled");
  run.ensemble = std::move(result.ensemble);

  t0 = Clock::now();
  run.terminals = terminal_cloud(*sys, run.ensemble, cfg.grid(), cfg.scheme, exec, "optimized");
  const auto oracle = build_oracle(cfg, *sys, exec);
  rep.metrics = compute_metrics(cfg, run.terminals, oracle);
  rep.timings["metrics"] = seconds_since(t0);
  return run;
}

RunArtifacts run_baseline(const ExperimentConfig& cfg, const Execution& exec) {
  const SystemPtr sys = cfg.validate();
  RunArtifacts run;
  auto& rep = run.report;
  rep.command = "baseline";
  rep.config = cfg;
  rep.version = version_string();
  rep.flags = standing_flags(cfg);
  rep.solver_status = "not_run";

  auto t0 = Clock::now();
  run.ensemble = baseline_ensemble(*sys, cfg.grid(), cfg.omega, cfg.u_box, cfg.particles,
                                   cfg.resolved_baseline_segments(), cfg.seed);
  const Objective objective = make_objective(cfg, sys, exec);
  const auto eval = objective.evaluate(run.ensemble);
  rep.final = eval.breakdown;
  run.terminals.dim = sys->state_dim();
  run.terminals.label = "baseline";
  run.terminals.points = eval.terminals;
  rep.timings["sample"] = seconds_since(t0);

  t0 = Clock::now();
  const auto oracle = build_oracle(cfg, *sys, exec);
  rep.metrics = compute_metrics(cfg, run.terminals, oracle);
  rep.timings["metrics"] = seconds_since(t0);
  return run;
}

void write_report(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "report.json", std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write report.json in '" + dir.string() + "'");
  out << report.to_json().dump(2) << '\n';
}

void write_run(const RunArtifacts& run, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& cfg = run.report.config;
  io::write_points_csv(dir / "terminal_points.csv", run.terminals.points, run.terminals.dim);
  io::write_points_csv(dir / "initial_points.csv", run.ensemble.x0s, run.ensemble.state_dim);
  io::write_controls_csv(dir / "controls.csv", run.ensemble, cfg.grid());
  io::write_history_csv(dir / "history.csv", run.report.history);
  write_report(run.report, dir);
}

GradcheckResult run_gradcheck(const ExperimentConfig& cfg, std::size_t n_probes,
                              const Execution& exec, double corruption) {
  const SystemPtr sys = cfg.validate();
  if (cfg.particles > 5) throw ConfigError("config: gradcheck requires ensemble.N <= 5");
  if (cfg.steps > 100) throw ConfigError("config: gradcheck requires grid.steps <= 100");
  if (n_probes == 0) throw ConfigError("config: gradcheck needs at least one probe");

  const Objective objective = make_objective(cfg, sys, exec);
  auto ens = init_ensemble(*sys, cfg.grid(), cfg.omega, cfg.u_box, cfg.particles,
                           InitStrategy::uniform_random, cfg.seed);
  const auto grad = objective.gradient(ens);

  const std::size_t n = ens.size();
  const std::size_t K = cfg.steps;
  const std::size_t m = sys->control_dim();
  const std::size_t d = sys->state_dim();
  const std::size_t n_ctrl = n * K * m;
  const std::size_t n_vars = n_ctrl + n * d;

  std::vector<std::size_t> coords(n_vars);
  for (std::size_t q = 0; q < n_vars; ++q) coords[q] = q;
  if (n_probes < n_vars) {
    Rng rng(derive_seed(cfg.seed, kProbeStream));
    for (std::size_t q = 0; q < n_probes; ++q) {
      std::swap(coords[q], coords[q + rng.below(n_vars - q)]);
    }
    coords.resize(n_probes);
  }

  constexpr double kStep = 1e-6;
  GradcheckResult out;
  out.tolerance = cfg.gradcheck_tolerance;
  for (std::size_t q : coords) {
    double* slot;
    double adjoint;
    GradcheckProbe probe;
    if (q < n_ctrl) {
      const std::size_t i = q / (K * m);
      const std::size_t r = q % (K * m);
      slot = &ens.controls[i].values[r];
      adjoint = grad.controls[q];
      probe.variable = "u[" + std::to_string(i) + "," + std::to_string(r / m) + "," +
                       std::to_string(r % m) + "]";
    } else {
      const std::size_t p = q - n_ctrl;
      slot = &ens.x0s[p];
      adjoint = grad.x0s[p];
      probe.variable = "x0[" + std::to_string(p / d) + "," + std::to_string(p % d) + "]";
    }
    adjoint += corruption;
    const double saved = *slot;
    *slot = saved + kStep;
    const double plus = objective.evaluate(ens).breakdown.total;
    *slot = saved - kStep;
    const double minus = objective.evaluate(ens).breakdown.total;
    *slot = saved;
    probe.adjoint = adjoint;
    probe.finite_difference = (plus - minus) / (2.0 * kStep);
    out.scale = std::max({out.scale, std::abs(probe.adjoint), std::abs(probe.finite_difference)});
    out.probes.push_back(std::move(probe));
  }
  // Errors are measured against the largest probed gradient entry. Entries far
  // below that sit under the finite-difference roundoff floor (|J| eps / step),
  // where a componentwise ratio measures noise rather than the adjoint.
  const double scale = std::max(out.scale, std::numeric_limits<double>::min());
  for (auto& probe : out.probes) {
    probe.rel_error = std::abs(probe.adjoint - probe.finite_difference) / scale;
    out.max_rel_error = std::max(out.max_rel_error, probe.rel_error);
  }
  out.passed = out.max_rel_error <= out.tolerance;
  return out;
}

std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, const std::vector<double>& epsilons,
                                 const std::vector<double>& deltas, const Execution& exec,
                                 const std::filesystem::path& dir) {
  if (epsilons.empty() || deltas.empty()) {
    throw ConfigError("config: sweep needs non-empty epsilon and delta lists");
  }
  const SystemPtr sys = cfg.validate();
  if (sys->state_dim() > 2) throw ConfigError("config: sweep supports 1-D and 2-D systems only");
  for (double e : epsilons) {
    if (!(e > 0.0)) throw ConfigError("config: sweep epsilons must be positive");
  }
  for (double v : deltas) {
    if (!(v > 0.0)) throw ConfigError("config: sweep deltas must be positive");
  }

  std::filesystem::create_directories(dir);
  std::vector<SweepCell> cells;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    for (std::size_t j = 0; j < deltas.size(); ++j) {
      SweepCell cell;
      cell.epsilon = epsilons[i];
      cell.delta = deltas[j];
      ExperimentConfig c = cfg;
      c.epsilon = epsilons[i];
      c.delta = deltas[j];
      const auto sub = dir / ("eps" + std::to_string(i) + "_delta" + std::to_string(j));
      c.output = sub.string();
      try {
        auto run = run_optimize(c, exec);
        write_run(run, sub);
        cell.status = run.report.solver_status;
        cell.final = run.report.final;
        cell.metrics = run.report.metrics;
      } catch (const std::exception& e) {
        cell.status = "error";
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
  }

  std::ofstream out(dir / "sweep.csv", std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write sweep.csv");
  out << "epsilon,delta,status,total,control_energy,interaction_energy,coverage,w1_uniform\n";
  for (const auto& c : cells) {
    out << io::format_double(c.epsilon) << ',' << io::format_double(c.delta) << ',' << c.status;
    if (c.final) {
      out << ',' << io::format_double(c.final->total) << ',' << io::format_double(c.final->control_energy)
          << ',' << io::format_double(c.final->interaction_energy);
    } else {
      out << ",,,";
    }
    if (c.metrics) {
      out << ',' << io::format_double(c.metrics->coverage.coverage) << ',';
      if (c.metrics->w1_uniform) out << io::format_double(*c.metrics->w1_uniform);
    } else {
      out << ",,";
    }
    out << '\n';
  }
  return cells;
}

json run_metrics(const ExperimentConfig& cfg, const std::filesystem::path& dir, const Execution& exec) {
  const SystemPtr sys = cfg.validate();
  std::size_t dim = 0;
  PointCloud cloud;
  cloud.points = io::read_points_csv(dir / "terminal_points.csv", dim);
  cloud.dim = dim;
  cloud.label = "terminal_points.csv";
  if (dim != sys->state_dim()) throw ConfigError("config: terminal_points.csv dimension differs from system");

  const auto oracle = build_oracle(cfg, *sys, exec);
  json out = {{"metrics", compute_metrics(cfg, cloud, oracle).to_json()}};

  const auto x0_path = dir / "initial_points.csv";
  const auto u_path = dir / "controls.csv";
  if (std::filesystem::exists(x0_path) && std::filesystem::exists(u_path)) {
    ParticleEnsemble ens;
    std::size_t d0 = 0;
    ens.x0s = io::read_points_csv(x0_path, d0);
    ens.state_dim = d0;
    ens.controls = io::read_controls_csv(u_path, cfg.steps);
    const Objective objective = make_objective(cfg, sys, exec);
    const auto eval = objective.evaluate(ens);
    out["breakdown"] = to_json(eval.breakdown);
    double diff = 0.0;
    for (std::size_t q = 0; q < eval.terminals.size() && q < cloud.points.size(); ++q) {
      diff = std::max(diff, std::abs(eval.terminals[q] - cloud.points[q]));
    }
    out["terminal_max_abs_diff"] = diff;
    out["feasible"] = ens.feasible(cfg.omega, cfg.u_box);
  }
  return out;
}

}  // namespace reachot
