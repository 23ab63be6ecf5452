#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "reachot/dynamics.hpp"

namespace reachot {

enum class Scheme { euler, rk4 };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

/// Uniform grid on [0, T] with `steps` intervals.
struct TimeGrid {
  double horizon = 1.0;
  std::size_t steps = 1;

  TimeGrid() = default;
  TimeGrid(double horizon, std::size_t steps);

  double dt() const { return horizon / static_cast<double>(steps); }
  double time(std::size_t k) const {
    return horizon * static_cast<double>(k) / static_cast<double>(steps);
  }
  bool operator==(const TimeGrid&) const = default;
};

/// Zero-order-hold control: row k (length m) is applied on [t_k, t_{k+1}).
struct DiscretizedControl {
  std::size_t steps = 0;
  std::size_t dim = 0;
  std::vector<double> values;  // steps x dim, row-major

  DiscretizedControl() = default;
  DiscretizedControl(std::size_t steps, std::size_t dim, double fill = 0.0)
      : steps(steps), dim(dim), values(steps * dim, fill) {}

  std::span<double> row(std::size_t k) { return {values.data() + k * dim, dim}; }
  std::span<const double> row(std::size_t k) const { return {values.data() + k * dim, dim}; }

  bool operator==(const DiscretizedControl&) const = default;
};

struct Trajectory {
  Scheme scheme = Scheme::rk4;
  std::size_t dim = 0;
  std::vector<double> states;  // (K+1) x d

  std::size_t steps() const { return dim == 0 ? 0 : states.size() / dim - 1; }
  std::span<const double> state(std::size_t k) const { return {states.data() + k * dim, dim}; }
  std::span<const double> terminal() const { return state(steps()); }
};

/// Thrown when a trajectory leaves the finite doubles.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t step, std::ptrdiff_t particle = -1);
  std::size_t step() const { return step_; }
  std::ptrdiff_t particle() const { return particle_; }

 private:
  std::size_t step_;
  std::ptrdiff_t particle_;
};

Trajectory integrate_forward(const ControlAffineSystem& sys, std::span<const double> x0,
                             const DiscretizedControl& u, const TimeGrid& grid, Scheme scheme);

std::vector<double> endpoint(const ControlAffineSystem& sys, std::span<const double> x0,
                             const DiscretizedControl& u, const TimeGrid& grid, Scheme scheme);

struct AdjointResult {
  /// lambda_k = dJ/dx_k, (K+1) x d.
  std::vector<double> costates;
  /// Row k: (dx_{k+1}/du_k)^T lambda_{k+1}, i.e. dJ/du_k through the dynamics. K x m.
  std::vector<double> control_sensitivity;
};

/// Reverse pass of the discrete scheme used for `traj`. `terminal_costate` is
/// dJ/dx_K. Throws std::invalid_argument if `scheme` differs from the forward
/// pass or sizes disagree.
AdjointResult integrate_adjoint(const ControlAffineSystem& sys, const Trajectory& traj,
                                const DiscretizedControl& u,
                                std::span<const double> terminal_costate, const TimeGrid& grid,
                                Scheme scheme);

}  // namespace reachot
