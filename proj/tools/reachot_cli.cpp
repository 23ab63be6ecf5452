// reachot command-line driver: optimize | baseline | gradcheck | sweep | metrics.
//
// Exit codes: 0 ok, 1 check failed, 2 configuration error, 3 runtime error.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "reachot/config.hpp"
#include "reachot/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kCheckFailed = 1, kConfigError = 2, kRuntimeError = 3 };

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
  std::string scheme;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory (overrides config 'output')");
  cmd->add_option("--seed", f.seed, "RNG seed (overrides config)");
  cmd->add_option("--threads", f.threads, "worker cap; 0 = all cores, 1 = serial");
  cmd->add_option("--scheme", f.scheme, "integration scheme override")->check(CLI::IsMember({"euler", "rk4"}));
}

reachot::ExperimentConfig resolve(const CommonFlags& f) {
  auto cfg = reachot::load_config(f.config);
  if (f.seed) {
    cfg.seed = *f.seed;
    cfg.solver.seed = *f.seed;
  }
  if (!f.scheme.empty()) cfg.scheme = reachot::scheme_from_string(f.scheme);
  if (!f.out.empty()) cfg.output = f.out;
  cfg.validate();
  return cfg;
}

reachot::Execution execution(const CommonFlags& f, const reachot::ExperimentConfig& cfg) {
  reachot::Execution e;
  e.threads = f.threads;
  e.reduction = cfg.reduction;
  return e;
}

void summarize(const reachot::RunReport& r) {
  const auto& m = r.metrics.coverage;
  std::printf("%s: total=%.6g control=%.6g interaction=%.6g status=%s\n", r.command.c_str(),
              r.final.total, r.final.control_energy, r.final.interaction_energy, r.solver_status.c_str());
  std::printf("  coverage=%.4f (%zu/%zu cells) outside=%.4f nn_min=%.4g nn_mean=%.4g\n", m.coverage,
              m.covered_cells, m.occupied_cells, m.outside_frac, m.nn_min, m.nn_mean);
  if (r.metrics.w1_uniform) std::printf("  w1_uniform=%.6g\n", *r.metrics.w1_uniform);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uniform sampling of reachable sets by particle optimal transport"};
  app.require_subcommand(1);
  app.set_version_flag("--version", reachot::version_string());

  CommonFlags opt_flags, base_flags, grad_flags, sweep_flags, metric_flags;
  auto* optimize = app.add_subcommand("optimize", "optimize particle controls and write a run");
  add_common(optimize, opt_flags);
  auto* baseline = app.add_subcommand("baseline", "random-control Monte Carlo baseline");
  add_common(baseline, base_flags);
  auto* gradcheck = app.add_subcommand("gradcheck", "adjoint gradient vs central differences");
  add_common(gradcheck, grad_flags);
  std::optional<std::size_t> probes;
  double corrupt = 0.0;
  gradcheck->add_option("--probes", probes, "number of random coordinates to probe");
  gradcheck->add_option("--corrupt-gradient", corrupt, "test hook: perturb the adjoint gradient")
      ->group("");
  auto* sweep = app.add_subcommand("sweep", "(epsilon, delta) refinement study");
  add_common(sweep, sweep_flags);
  std::vector<double> epsilons, deltas;
  sweep->add_option("--epsilons", epsilons, "epsilon values (overrides config sweep.epsilons)")->delimiter(',');
  sweep->add_option("--deltas", deltas, "delta values (overrides config sweep.deltas)")->delimiter(',');
  auto* metrics = app.add_subcommand("metrics", "recompute metrics and energies from run CSVs");
  add_common(metrics, metric_flags);
  std::string run_dir;
  metrics->add_option("--run", run_dir, "run directory with CSVs (default: --out / config output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  CommonFlags* flags = optimize->parsed()    ? &opt_flags
                       : baseline->parsed()  ? &base_flags
                       : gradcheck->parsed() ? &grad_flags
                       : sweep->parsed()     ? &sweep_flags
                                             : &metric_flags;
  reachot::ExperimentConfig cfg;
  try {
    cfg = resolve(*flags);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  const auto exec = execution(*flags, cfg);
  const std::filesystem::path out_dir = cfg.output;

  try {
    if (optimize->parsed() || baseline->parsed()) {
      reachot::RunArtifacts run;
      try {
        run = optimize->parsed() ? reachot::run_optimize(cfg, exec) : reachot::run_baseline(cfg, exec);
      } catch (const reachot::DivergenceError& e) {
        reachot::RunReport partial;
        partial.command = optimize->parsed() ? "optimize" : "baseline";
        partial.config = cfg;
        partial.version = reachot::version_string();
        partial.solver_status = "diverged";
        partial.error = e.what();
        reachot::write_report(partial, out_dir);
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
      }
      reachot::write_run(run, out_dir);
      summarize(run.report);
      return kOk;
    }
    if (gradcheck->parsed()) {
      const auto result = reachot::run_gradcheck(cfg, probes.value_or(cfg.gradcheck_probes), exec, corrupt);
      std::filesystem::create_directories(out_dir);
      std::ofstream(out_dir / "gradcheck.json") << result.to_json().dump(2) << '\n';
      std::printf("gradcheck: %zu probes, max relative error %.3e (tolerance %.1e) -> %s\n",
                  result.probes.size(), result.max_rel_error, result.tolerance,
                  result.passed ? "PASS" : "FAIL");
      return result.passed ? kOk : kCheckFailed;
    }
    if (sweep->parsed()) {
      if (epsilons.empty()) epsilons = cfg.sweep_epsilons;
      if (deltas.empty()) deltas = cfg.sweep_deltas;
      const auto cells = reachot::run_sweep(cfg, epsilons, deltas, exec, out_dir);
      for (const auto& c : cells) {
        std::printf("eps=%-8g delta=%-8g %-15s", c.epsilon, c.delta, c.status.c_str());
        if (c.metrics) {
          std::printf(" coverage=%.4f interaction=%.6g", c.metrics->coverage.coverage,
                      c.metrics->coverage.interaction_energy);
          if (c.metrics->w1_uniform) std::printf(" w1=%.5f", *c.metrics->w1_uniform);
        } else {
          std::printf(" %s", c.error.c_str());
        }
        std::printf("\n");
      }
      return kOk;
    }
    const std::filesystem::path src = run_dir.empty() ? out_dir : std::filesystem::path(run_dir);
    const auto result = reachot::run_metrics(cfg, src, exec);
    std::ofstream(src / "metrics.json") << result.dump(2) << '\n';
    std::cout << result.dump(2) << '\n';
    return kOk;
  } catch (const reachot::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}
