#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "reachot/objective.hpp"

namespace reachot {

enum class InitStrategy { uniform_random, zero_control };

std::string to_string(InitStrategy s);
InitStrategy init_strategy_from_string(const std::string& s);

/// Inner product used for the control block of the descent direction.
/// `l2` weights each control value by dt, so the step follows dH/du (the
/// L2(0,T) gradient) rather than the raw discrete gradient, which is O(dt).
enum class ControlMetric { l2, euclidean };

std::string to_string(ControlMetric m);
ControlMetric control_metric_from_string(const std::string& s);

struct SolverConfig {
  std::size_t max_iters = 200;
  double step0 = 1.0;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  /// Projected-gradient norm tolerance; defaults to 1e-6 sqrt(#variables).
  std::optional<double> tol_grad;
  double tol_obj = 1e-10;
  bool optimize_x0 = true;
  std::uint64_t seed = 0;
  std::size_t max_backtracks = 40;
  /// First trial step of iteration k+1 is growth * (accepted step of k).
  double step_growth = 2.0;
  ControlMetric control_metric = ControlMetric::l2;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
  bool operator==(const SolverConfig&) const = default;
};

struct IterationRecord {
  std::size_t iter = 0;
  double total = 0.0;
  double control_energy = 0.0;
  double interaction_energy = 0.0;
  double step = 0.0;
  /// Projected-gradient norm at the iterate the step started from.
  double grad_norm = 0.0;
  /// |v_{k+1} - v_k|^2 in the solver metric; Armijo guarantees
  /// total_{k+1} <= total_k - armijo_c * step_sq_norm / step.
  double step_sq_norm = 0.0;
};

enum class SolveStatus { converged_grad, converged_obj, max_iters, stalled };

std::string to_string(SolveStatus s);

struct SolveResult {
  ParticleEnsemble ensemble;
  std::vector<IterationRecord> history;
  ObjectiveBreakdown initial;
  ObjectiveBreakdown final;
  double final_grad_norm = 0.0;
  SolveStatus status = SolveStatus::max_iters;
};

/// x0s i.i.d. uniform in `omega`; controls i.i.d. uniform in `u_box` per step
/// or identically zero (projected onto `u_box`).
ParticleEnsemble init_ensemble(const ControlAffineSystem& sys, const TimeGrid& grid,
                               const BoxSet& omega, const BoxSet& u_box, std::size_t n,
                               InitStrategy strategy, std::uint64_t seed);

/// Projected gradient descent with Armijo backtracking on the projection arc.
/// Every returned iterate is feasible and accepted totals are non-increasing.
SolveResult solve(const ParticleEnsemble& ens0, const Objective& objective, const BoxSet& omega,
                  const BoxSet& u_box, const SolverConfig& cfg,
                  const std::function<void(const IterationRecord&)>& on_iteration = {});

}  // namespace reachot
