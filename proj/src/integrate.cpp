#include "reachot/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace reachot {

std::string to_string(Scheme s) { return s == Scheme::euler ? "euler" : "rk4"; }

Scheme scheme_from_string(const std::string& s) {
  if (s == "euler") return Scheme::euler;
  if (s == "rk4") return Scheme::rk4;
  throw std::invalid_argument("unknown scheme '" + s + "' (expected euler|rk4)");
}

TimeGrid::TimeGrid(double horizon, std::size_t steps) : horizon(horizon), steps(steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("TimeGrid: horizon must be positive and finite");
  }
  if (steps == 0) throw std::invalid_argument("TimeGrid: steps must be >= 1");
}

DivergenceError::DivergenceError(std::size_t step, std::ptrdiff_t particle)
    : std::runtime_error("trajectory diverged at step " + std::to_string(step) +
                         (particle >= 0 ? " (particle " + std::to_string(particle) + ")" : "")),
      step_(step),
      particle_(particle) {}

namespace {

void check_control(const ControlAffineSystem& sys, const DiscretizedControl& u,
                   const TimeGrid& grid) {
  if (u.dim != sys.control_dim()) throw std::invalid_argument("control dimension mismatch");
  if (u.steps != grid.steps || u.values.size() != u.steps * u.dim) {
    throw std::invalid_argument("control has " + std::to_string(u.steps) +
                                " rows, grid has " + std::to_string(grid.steps) + " steps");
  }
}

// y = a + s * b
inline void axpy(std::span<const double> a, double s, std::span<const double> b,
                 std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] + s * b[i];
}

// y += A^T v for row-major n x n A
inline void add_transpose_mul(std::span<const double> A, std::span<const double> v,
                              std::span<double> y) {
  const std::size_t n = y.size();
  for (std::size_t r = 0; r < n; ++r) {
    const double vr = v[r];
    for (std::size_t c = 0; c < n; ++c) y[c] += A[r * n + c] * vr;
  }
}

// y = A^T v
inline void transpose_mul(std::span<const double> A, std::span<const double> v,
                          std::span<double> y) {
  std::fill(y.begin(), y.end(), 0.0);
  add_transpose_mul(A, v, y);
}

// bu += G^T v for row-major d x m G
inline void add_control_adjoint(std::span<const double> G, std::span<const double> v,
                                std::span<double> bu) {
  const std::size_t m = bu.size();
  for (std::size_t r = 0; r < v.size(); ++r) {
    for (std::size_t c = 0; c < m; ++c) bu[c] += G[r * m + c] * v[r];
  }
}

struct Rk4Stages {
  explicit Rk4Stages(std::size_t d) : k1(d), k2(d), k3(d), k4(d), X2(d), X3(d), X4(d) {}
  std::vector<double> k1, k2, k3, k4, X2, X3, X4;

  void compute(const ControlAffineSystem& sys, std::span<const double> x,
               std::span<const double> u, double h) {
    sys.rhs_into(x, u, k1);
    axpy(x, 0.5 * h, k1, X2);
    sys.rhs_into(X2, u, k2);
    axpy(x, 0.5 * h, k2, X3);
    sys.rhs_into(X3, u, k3);
    axpy(x, h, k3, X4);
    sys.rhs_into(X4, u, k4);
  }
};

}  // namespace

Trajectory integrate_forward(const ControlAffineSystem& sys, std::span<const double> x0,
                             const DiscretizedControl& u, const TimeGrid& grid, Scheme scheme) {
  const std::size_t d = sys.state_dim();
  if (x0.size() != d) throw std::invalid_argument("initial state dimension mismatch");
  check_control(sys, u, grid);
  for (double v : x0) {
    if (!std::isfinite(v)) throw DivergenceError(0);
  }

  const std::size_t K = grid.steps;
  const double h = grid.dt();
  Trajectory traj;
  traj.scheme = scheme;
  traj.dim = d;
  traj.states.resize((K + 1) * d);
  std::copy(x0.begin(), x0.end(), traj.states.begin());

  Rk4Stages st(d);
  for (std::size_t k = 0; k < K; ++k) {
    std::span<const double> x(traj.states.data() + k * d, d);
    std::span<double> next(traj.states.data() + (k + 1) * d, d);
    const auto uk = u.row(k);
    if (scheme == Scheme::euler) {
      sys.rhs_into(x, uk, st.k1);
      axpy(x, h, st.k1, next);
    } else {
      st.compute(sys, x, uk, h);
      for (std::size_t i = 0; i < d; ++i) {
        next[i] = x[i] + (h / 6.0) * (st.k1[i] + 2.0 * st.k2[i] + 2.0 * st.k3[i] + st.k4[i]);
      }
    }
    for (double v : next) {
      if (!std::isfinite(v)) throw DivergenceError(k + 1);
    }
  }
  return traj;
}

std::vector<double> endpoint(const ControlAffineSystem& sys, std::span<const double> x0,
                             const DiscretizedControl& u, const TimeGrid& grid, Scheme scheme) {
  const auto traj = integrate_forward(sys, x0, u, grid, scheme);
  const auto xT = traj.terminal();
  return {xT.begin(), xT.end()};
}

AdjointResult integrate_adjoint(const ControlAffineSystem& sys, const Trajectory& traj,
                                const DiscretizedControl& u,
                                std::span<const double> terminal_costate, const TimeGrid& grid,
                                Scheme scheme) {
  const std::size_t d = sys.state_dim();
  const std::size_t m = sys.control_dim();
  if (scheme != traj.scheme) {
    throw std::invalid_argument("adjoint scheme " + to_string(scheme) +
                                " does not match forward scheme " + to_string(traj.scheme));
  }
  check_control(sys, u, grid);
  if (traj.dim != d || traj.steps() != grid.steps) {
    throw std::invalid_argument("trajectory does not match system/grid");
  }
  if (terminal_costate.size() != d) throw std::invalid_argument("terminal costate dimension mismatch");

  const std::size_t K = grid.steps;
  const double h = grid.dt();
  AdjointResult out;
  out.costates.assign((K + 1) * d, 0.0);
  out.control_sensitivity.assign(K * m, 0.0);
  std::copy(terminal_costate.begin(), terminal_costate.end(), out.costates.begin() + K * d);

  std::vector<double> A(d * d), G(d * m);
  Rk4Stages st(d);
  std::vector<double> bk1(d), bk2(d), bk3(d), bk4(d), bX(d);

  for (std::size_t k = K; k-- > 0;) {
    std::span<const double> x = traj.state(k);
    std::span<const double> lam_next(out.costates.data() + (k + 1) * d, d);
    std::span<double> lam(out.costates.data() + k * d, d);
    std::span<double> bu(out.control_sensitivity.data() + k * m, m);
    const auto uk = u.row(k);

    if (scheme == Scheme::euler) {
      // x' = x + h f(x, u)
      sys.jacobian_into(x, uk, A);
      sys.control_matrix_into(x, G);
      std::copy(lam_next.begin(), lam_next.end(), lam.begin());
      transpose_mul(A, lam_next, bX);
      for (std::size_t i = 0; i < d; ++i) lam[i] += h * bX[i];
      for (std::size_t i = 0; i < d; ++i) bk1[i] = h * lam_next[i];
      add_control_adjoint(G, bk1, bu);
      continue;
    }

    st.compute(sys, x, uk, h);
    for (std::size_t i = 0; i < d; ++i) {
      bk1[i] = (h / 6.0) * lam_next[i];
      bk2[i] = (h / 3.0) * lam_next[i];
      bk3[i] = (h / 3.0) * lam_next[i];
      bk4[i] = (h / 6.0) * lam_next[i];
      lam[i] = lam_next[i];
    }
    // k4 = f(X4), X4 = x + h k3
    sys.jacobian_into(st.X4, uk, A);
    sys.control_matrix_into(st.X4, G);
    transpose_mul(A, bk4, bX);
    add_control_adjoint(G, bk4, bu);
    for (std::size_t i = 0; i < d; ++i) {
      lam[i] += bX[i];
      bk3[i] += h * bX[i];
    }
    // k3 = f(X3), X3 = x + h/2 k2
    sys.jacobian_into(st.X3, uk, A);
    sys.control_matrix_into(st.X3, G);
    transpose_mul(A, bk3, bX);
    add_control_adjoint(G, bk3, bu);
    for (std::size_t i = 0; i < d; ++i) {
      lam[i] += bX[i];
      bk2[i] += 0.5 * h * bX[i];
    }
    // k2 = f(X2), X2 = x + h/2 k1
    sys.jacobian_into(st.X2, uk, A);
    sys.control_matrix_into(st.X2, G);
    transpose_mul(A, bk2, bX);
    add_control_adjoint(G, bk2, bu);
    for (std::size_t i = 0; i < d; ++i) {
      lam[i] += bX[i];
      bk1[i] += 0.5 * h * bX[i];
    }
    // k1 = f(x)
    sys.jacobian_into(x, uk, A);
    sys.control_matrix_into(x, G);
    transpose_mul(A, bk1, bX);
    add_control_adjoint(G, bk1, bu);
    for (std::size_t i = 0; i < d; ++i) lam[i] += bX[i];
  }
  return out;
}

}  // namespace reachot
