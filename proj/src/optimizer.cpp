#include "reachot/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "reachot/random.hpp"

namespace reachot {

std::string to_string(InitStrategy s) {
  return s == InitStrategy::uniform_random ? "uniform_random" : "zero_control";
}

InitStrategy init_strategy_from_string(const std::string& s) {
  if (s == "uniform_random") return InitStrategy::uniform_random;
  if (s == "zero_control") return InitStrategy::zero_control;
  throw std::invalid_argument("unknown init strategy '" + s +
                              "' (expected uniform_random|zero_control)");
}

std::string to_string(ControlMetric m) { return m == ControlMetric::l2 ? "l2" : "euclidean"; }

ControlMetric control_metric_from_string(const std::string& s) {
  if (s == "l2") return ControlMetric::l2;
  if (s == "euclidean") return ControlMetric::euclidean;
  throw std::invalid_argument("unknown control metric '" + s + "' (expected l2|euclidean)");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged_grad: return "converged_grad";
    case SolveStatus::converged_obj: return "converged_obj";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::stalled: return "stalled";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("solver: " + what); };
  if (max_iters == 0) fail("max_iters must be >= 1");
  if (!(step0 > 0.0) || !std::isfinite(step0)) fail("step0 must be > 0");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) fail("armijo_c must lie in (0, 1)");
  if (!(backtrack > 0.0 && backtrack < 1.0)) fail("backtrack must lie in (0, 1)");
  if (tol_grad && !(*tol_grad >= 0.0)) fail("tol_grad must be >= 0");
  if (!(tol_obj >= 0.0)) fail("tol_obj must be >= 0");
  if (!(step_growth >= 1.0) || !std::isfinite(step_growth)) fail("step_growth must be >= 1");
}

ParticleEnsemble init_ensemble(const ControlAffineSystem& sys, const TimeGrid& grid,
                               const BoxSet& omega, const BoxSet& u_box, std::size_t n,
                               InitStrategy strategy, std::uint64_t seed) {
  const std::size_t d = sys.state_dim();
  const std::size_t m = sys.control_dim();
  if (n == 0) throw std::invalid_argument("init_ensemble: N must be >= 1");
  if (omega.dim() != d) throw std::invalid_argument("init_ensemble: Omega dimension mismatch");
  if (u_box.dim() != m) throw std::invalid_argument("init_ensemble: U dimension mismatch");

  Rng rng(seed);
  ParticleEnsemble ens;
  ens.state_dim = d;
  ens.x0s.resize(n * d);
  for (std::size_t i = 0; i < n; ++i) rng.fill_uniform(omega, ens.x0(i));
  ens.controls.assign(n, DiscretizedControl(grid.steps, m));
  const std::vector<double> zero(m, 0.0);
  for (auto& c : ens.controls) {
    for (std::size_t k = 0; k < grid.steps; ++k) {
      if (strategy == InitStrategy::uniform_random) {
        rng.fill_uniform(u_box, c.row(k));
      } else {
        u_box.project(zero, c.row(k));
      }
    }
  }
  return ens;
}

namespace {

struct Metric {
  double control_weight;
  bool optimize_x0;
};

// ||v - P(v - W^{-1} g)||_W
double projected_grad_norm(const ParticleEnsemble& ens, const EnsembleGradient& g,
                           const BoxSet& omega, const BoxSet& u_box, const Metric& w) {
  double sq = 0.0;
  std::size_t q = 0;
  for (const auto& c : ens.controls) {
    for (std::size_t k = 0; k < c.steps; ++k) {
      for (std::size_t j = 0; j < c.dim; ++j, ++q) {
        const double u = c.values[k * c.dim + j];
        const double p = std::clamp(u - g.controls[q] / w.control_weight, u_box.lower()[j],
                                    u_box.upper()[j]);
        sq += w.control_weight * (u - p) * (u - p);
      }
    }
  }
  if (w.optimize_x0) {
    const std::size_t d = ens.state_dim;
    for (std::size_t i = 0; i < ens.x0s.size(); ++i) {
      const double x = ens.x0s[i];
      const double p = std::clamp(x - g.x0s[i], omega.lower()[i % d], omega.upper()[i % d]);
      sq += (x - p) * (x - p);
    }
  }
  return std::sqrt(sq);
}

// Writes P(v - alpha W^{-1} g) into `out` and returns |out - v|_W^2.
double projected_step(const ParticleEnsemble& ens, const EnsembleGradient& g, double alpha,
                      const BoxSet& omega, const BoxSet& u_box, const Metric& w,
                      ParticleEnsemble& out) {
  out = ens;
  double sq = 0.0;
  std::size_t q = 0;
  const double cstep = alpha / w.control_weight;
  for (auto& c : out.controls) {
    for (std::size_t k = 0; k < c.steps; ++k) {
      for (std::size_t j = 0; j < c.dim; ++j, ++q) {
        double& u = c.values[k * c.dim + j];
        const double p = std::clamp(u - cstep * g.controls[q], u_box.lower()[j], u_box.upper()[j]);
        sq += w.control_weight * (p - u) * (p - u);
        u = p;
      }
    }
  }
  if (w.optimize_x0) {
    const std::size_t d = out.state_dim;
    for (std::size_t i = 0; i < out.x0s.size(); ++i) {
      double& x = out.x0s[i];
      const double p = std::clamp(x - alpha * g.x0s[i], omega.lower()[i % d], omega.upper()[i % d]);
      sq += (p - x) * (p - x);
      x = p;
    }
  }
  return sq;
}

}  // namespace

SolveResult solve(const ParticleEnsemble& ens0, const Objective& objective, const BoxSet& omega,
                  const BoxSet& u_box, const SolverConfig& cfg,
                  const std::function<void(const IterationRecord&)>& on_iteration) {
  cfg.validate();
  if (!ens0.feasible(omega, u_box)) {
    throw std::invalid_argument("solve: initial ensemble is not feasible");
  }
  const auto& grid = objective.grid();
  const Metric metric{cfg.control_metric == ControlMetric::l2 ? grid.dt() : 1.0, cfg.optimize_x0};
  const std::size_t n_vars =
      ens0.size() * grid.steps * objective.system().control_dim() +
      (cfg.optimize_x0 ? ens0.x0s.size() : 0);
  const double tol_grad = cfg.tol_grad.value_or(1e-6 * std::sqrt(static_cast<double>(n_vars)));

  SolveResult result;
  result.ensemble = ens0;
  Evaluation eval = objective.evaluate(result.ensemble);
  EnsembleGradient grad = objective.gradient(result.ensemble, eval);
  result.initial = eval.breakdown;

  double alpha = cfg.step0;
  ParticleEnsemble candidate;
  for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
    const double pg = projected_grad_norm(result.ensemble, grad, omega, u_box, metric);
    if (pg <= tol_grad) {
      result.status = SolveStatus::converged_grad;
      break;
    }

    const double current = eval.breakdown.total;
    bool accepted = false;
    double sq = 0.0;
    Evaluation trial;
    for (std::size_t b = 0; b <= cfg.max_backtracks; ++b, alpha *= cfg.backtrack) {
      sq = projected_step(result.ensemble, grad, alpha, omega, u_box, metric, candidate);
      try {
        trial = objective.evaluate(candidate);
      } catch (const DivergenceError&) {
        continue;
      }
      if (trial.breakdown.total <= current - cfg.armijo_c * sq / alpha) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      result.status = SolveStatus::stalled;
      break;
    }

    IterationRecord rec;
    rec.iter = iter;
    rec.total = trial.breakdown.total;
    rec.control_energy = trial.breakdown.control_energy;
    rec.interaction_energy = trial.breakdown.interaction_energy;
    rec.step = alpha;
    rec.grad_norm = pg;
    rec.step_sq_norm = sq;
    result.history.push_back(rec);
    if (on_iteration) on_iteration(rec);

    std::swap(result.ensemble, candidate);
    eval = std::move(trial);
    grad = objective.gradient(result.ensemble, eval);

    const double decrease = (current - eval.breakdown.total) / std::max(1.0, std::abs(current));
    if (decrease <= cfg.tol_obj) {
      result.status = SolveStatus::converged_obj;
      break;
    }
    alpha *= cfg.step_growth;
  }
  result.final = eval.breakdown;
  result.final_grad_norm = projected_grad_norm(result.ensemble, grad, omega, u_box, metric);
  return result;
}

}  // namespace reachot
