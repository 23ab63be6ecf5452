#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "reachot/dynamics.hpp"
#include "reachot/integrate.hpp"
#include "reachot/kernel.hpp"
#include "reachot/parallel.hpp"

namespace reachot {

/// N particles: initial states (N x d, row-major) and one control signal each.
struct ParticleEnsemble {
  std::size_t state_dim = 0;
  std::vector<double> x0s;
  std::vector<DiscretizedControl> controls;

  std::size_t size() const { return controls.size(); }
  std::span<double> x0(std::size_t i) { return {x0s.data() + i * state_dim, state_dim}; }
  std::span<const double> x0(std::size_t i) const {
    return {x0s.data() + i * state_dim, state_dim};
  }

  /// True when every x0 lies in `omega` and every control row in `u_box`.
  bool feasible(const BoxSet& omega, const BoxSet& u_box) const;

  bool operator==(const ParticleEnsemble&) const = default;
};

struct ObjectiveBreakdown {
  double control_energy = 0.0;
  double interaction_energy = 0.0;
  double total = 0.0;
  double epsilon = 0.0;

  bool operator==(const ObjectiveBreakdown&) const = default;
};

/// Same layout as the decision variables of ParticleEnsemble.
struct EnsembleGradient {
  std::vector<double> controls;  // N x K x m
  std::vector<double> x0s;       // N x d
};

struct Evaluation {
  ObjectiveBreakdown breakdown;
  std::vector<Trajectory> trajectories;
  std::vector<double> terminals;  // N x d
};

/// (1/N) sum_i sum_k |u_i[k]|^2 dt.
double control_energy(const ParticleEnsemble& ens, const TimeGrid& grid);

/// (1/(N^2 eps)) sum_i sum_j K(x_i - x_j) over the full double sum, diagonal
/// included. `points` is N x d with d = kernel.dim().
double interaction_energy(std::span<const double> points, const KernelSpec& kernel,
                          double epsilon, const Execution& exec = {});

/// d/dx_i of interaction_energy: (2/(N^2 eps)) sum_j grad K(x_i - x_j). N x d.
std::vector<double> interaction_gradient(std::span<const double> points,
                                         const KernelSpec& kernel, double epsilon,
                                         const Execution& exec = {});

/// The particle objective: control energy plus kernel interaction energy of
/// the terminal states, with the exact gradient of its time discretisation.
class Objective {
 public:
  Objective(SystemPtr system, TimeGrid grid, Scheme scheme, KernelSpec kernel, double epsilon,
            Execution exec = {});

  const ControlAffineSystem& system() const { return *system_; }
  const SystemPtr& system_ptr() const { return system_; }
  const TimeGrid& grid() const { return grid_; }
  Scheme scheme() const { return scheme_; }
  const KernelSpec& kernel() const { return kernel_; }
  double epsilon() const { return epsilon_; }
  const Execution& execution() const { return exec_; }

  /// Integrates every particle. DivergenceError carries the particle index.
  Evaluation evaluate(const ParticleEnsemble& ens) const;

  /// Gradient at `ens`, reusing the trajectories of a prior evaluate(ens).
  EnsembleGradient gradient(const ParticleEnsemble& ens, const Evaluation& eval) const;
  EnsembleGradient gradient(const ParticleEnsemble& ens) const;

 private:
  void check(const ParticleEnsemble& ens) const;

  SystemPtr system_;
  TimeGrid grid_;
  Scheme scheme_;
  KernelSpec kernel_;
  double epsilon_;
  Execution exec_;
};

}  // namespace reachot
