#include "reachot/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reachot {

bool ParticleEnsemble::feasible(const BoxSet& omega, const BoxSet& u_box) const {
  for (std::size_t i = 0; i < size(); ++i) {
    if (!omega.contains(x0(i))) return false;
    const auto& c = controls[i];
    for (std::size_t k = 0; k < c.steps; ++k) {
      if (!u_box.contains(c.row(k))) return false;
    }
  }
  return true;
}

double control_energy(const ParticleEnsemble& ens, const TimeGrid& grid) {
  if (ens.size() == 0) return 0.0;
  double sum = 0.0;
  for (const auto& c : ens.controls) {
    double particle = 0.0;
    for (double v : c.values) particle += v * v;
    sum += particle;
  }
  return sum * grid.dt() / static_cast<double>(ens.size());
}

namespace {

void check_points(std::span<const double> points, const KernelSpec& kernel, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("epsilon must be positive and finite");
  }
  if (points.empty() || points.size() % kernel.dim() != 0) {
    throw std::invalid_argument("point array size is not a positive multiple of the kernel dimension");
  }
}

}  // namespace

double interaction_energy(std::span<const double> points, const KernelSpec& kernel,
                          double epsilon, const Execution& exec) {
  check_points(points, kernel, epsilon);
  const std::size_t d = kernel.dim();
  const std::size_t n = points.size() / d;
  const double peak = kernel.peak();

  // Row i holds K(0) + 2 sum_{j>i} K(x_i - x_j).
  auto row_sum = [&](std::size_t i) {
    const double* xi = points.data() + i * d;
    double s = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double* xj = points.data() + j * d;
      double r2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double dz = xi[k] - xj[k];
        r2 += dz * dz;
      }
      s += kernel.radial(r2);
    }
    return peak + 2.0 * s;
  };

  double total = 0.0;
  if (exec.reduction == Reduction::deterministic) {
    std::vector<double> rows(n);
    parallel_for(n, exec, [&](std::size_t i) { rows[i] = row_sum(i); });
    for (double r : rows) total += r;
  } else {
    const std::size_t workers = exec.workers(n);
    std::vector<double> partial(workers, 0.0);
    const std::size_t chunk = (n + workers - 1) / workers;
    parallel_for(workers, exec, [&](std::size_t w) {
      for (std::size_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) partial[w] += row_sum(i);
    });
    for (double p : partial) total += p;
  }
  const double nn = static_cast<double>(n);
  return total / (nn * nn * epsilon);
}

std::vector<double> interaction_gradient(std::span<const double> points,
                                         const KernelSpec& kernel, double epsilon,
                                         const Execution& exec) {
  check_points(points, kernel, epsilon);
  const std::size_t d = kernel.dim();
  const std::size_t n = points.size() / d;
  const double nn = static_cast<double>(n);
  const double scale = 2.0 / (nn * nn * epsilon);
  std::vector<double> out(n * d, 0.0);
  parallel_for(n, exec, [&](std::size_t i) {
    std::vector<double> z(d), g(d);
    std::span<double> row(out.data() + i * d, d);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      for (std::size_t k = 0; k < d; ++k) z[k] = points[i * d + k] - points[j * d + k];
      kernel.value_and_grad(z, g);
      for (std::size_t k = 0; k < d; ++k) row[k] += g[k];
    }
    for (auto& v : row) v *= scale;
  });
  return out;
}

// Objective -----------------------------------------------------------------

Objective::Objective(SystemPtr system, TimeGrid grid, Scheme scheme, KernelSpec kernel,
                     double epsilon, Execution exec)
    : system_(std::move(system)),
      grid_(grid),
      scheme_(scheme),
      kernel_(std::move(kernel)),
      epsilon_(epsilon),
      exec_(exec) {
  if (!system_) throw std::invalid_argument("Objective: null system");
  if (kernel_.dim() != system_->state_dim()) {
    throw std::invalid_argument("Objective: kernel dimension differs from state dimension");
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("epsilon must be positive and finite");
  }
}

void Objective::check(const ParticleEnsemble& ens) const {
  const std::size_t d = system_->state_dim();
  if (ens.size() == 0) throw std::invalid_argument("ensemble is empty");
  if (ens.state_dim != d || ens.x0s.size() != ens.size() * d) {
    throw std::invalid_argument("ensemble state dimension mismatch");
  }
  for (const auto& c : ens.controls) {
    if (c.dim != system_->control_dim() || c.steps != grid_.steps ||
        c.values.size() != c.steps * c.dim) {
      throw std::invalid_argument("ensemble control shape mismatch");
    }
  }
}

Evaluation Objective::evaluate(const ParticleEnsemble& ens) const {
  check(ens);
  const std::size_t n = ens.size();
  const std::size_t d = system_->state_dim();
  Evaluation out;
  out.trajectories.resize(n);
  parallel_for(n, exec_, [&](std::size_t i) {
    try {
      out.trajectories[i] = integrate_forward(*system_, ens.x0(i), ens.controls[i], grid_, scheme_);
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.step(), static_cast<std::ptrdiff_t>(i));
    }
  });
  out.terminals.resize(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xT = out.trajectories[i].terminal();
    std::copy(xT.begin(), xT.end(), out.terminals.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  auto& b = out.breakdown;
  b.epsilon = epsilon_;
  b.control_energy = control_energy(ens, grid_);
  b.interaction_energy = interaction_energy(out.terminals, kernel_, epsilon_, exec_);
  b.total = b.control_energy + b.interaction_energy;
  return out;
}

EnsembleGradient Objective::gradient(const ParticleEnsemble& ens, const Evaluation& eval) const {
  check(ens);
  const std::size_t n = ens.size();
  const std::size_t d = system_->state_dim();
  const std::size_t m = system_->control_dim();
  const std::size_t K = grid_.steps;
  if (eval.trajectories.size() != n) throw std::invalid_argument("evaluation does not match ensemble");

  const auto terminal_costates = interaction_gradient(eval.terminals, kernel_, epsilon_, exec_);
  const double energy_weight = 2.0 * grid_.dt() / static_cast<double>(n);

  EnsembleGradient g;
  g.controls.resize(n * K * m);
  g.x0s.resize(n * d);
  parallel_for(n, exec_, [&](std::size_t i) {
    std::span<const double> lam_T(terminal_costates.data() + i * d, d);
    const auto adj = integrate_adjoint(*system_, eval.trajectories[i], ens.controls[i], lam_T,
                                       grid_, scheme_);
    const auto& u = ens.controls[i].values;
    double* gu = g.controls.data() + i * K * m;
    for (std::size_t q = 0; q < K * m; ++q) gu[q] = energy_weight * u[q] + adj.control_sensitivity[q];
    std::copy(adj.costates.begin(), adj.costates.begin() + static_cast<std::ptrdiff_t>(d),
              g.x0s.begin() + static_cast<std::ptrdiff_t>(i * d));
  });
  return g;
}

EnsembleGradient Objective::gradient(const ParticleEnsemble& ens) const {
  return gradient(ens, evaluate(ens));
}

}  // namespace reachot
