#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "reachot/dynamics.hpp"
#include "reachot/integrate.hpp"
#include "reachot/random.hpp"

using namespace reachot;

namespace {

// x' = (x2, -x1) + u * (sin x1, x1 x2): exercises state-dependent control fields.
class TwistedOscillator final : public ControlAffineSystem {
 public:
  std::string name() const override { return "twisted"; }
  std::size_t state_dim() const override { return 2; }
  std::size_t control_dim() const override { return 1; }
  ParamMap params() const override { return {}; }
  void drift(std::span<const double> x, std::span<double> out) const override {
    out[0] = x[1];
    out[1] = -x[0];
  }
  void control_field(std::size_t, std::span<const double> x, std::span<double> out) const override {
    out[0] = std::sin(x[0]);
    out[1] = x[0] * x[1];
  }
  void drift_jacobian(std::span<const double>, std::span<double> out) const override {
    out[0] = 0;
    out[1] = 1;
    out[2] = -1;
    out[3] = 0;
  }
  void control_field_jacobian(std::size_t, std::span<const double> x,
                              std::span<double> out) const override {
    out[0] = std::cos(x[0]);
    out[1] = 0;
    out[2] = x[1];
    out[3] = x[0];
  }
  bool control_fields_constant() const override { return false; }
};

// x' = x^2 blows up at t = 1/x0.
class Riccati final : public ControlAffineSystem {
 public:
  std::string name() const override { return "riccati"; }
  std::size_t state_dim() const override { return 1; }
  std::size_t control_dim() const override { return 1; }
  ParamMap params() const override { return {}; }
  void drift(std::span<const double> x, std::span<double> out) const override { out[0] = x[0] * x[0]; }
  void control_field(std::size_t, std::span<const double>, std::span<double> out) const override {
    out[0] = 1.0;
  }
  void drift_jacobian(std::span<const double> x, std::span<double> out) const override {
    out[0] = 2 * x[0];
  }
};

DiscretizedControl random_control(std::size_t steps, std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  DiscretizedControl u(steps, m);
  for (auto& v : u.values) v = rng.uniform(-1, 1);
  return u;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Checks the adjoint against central differences of phi(x_K) = c . x_K.
void check_adjoint_fd(const ControlAffineSystem& sys, Scheme scheme, std::uint64_t seed) {
  const TimeGrid grid(2.0, 40);
  const std::size_t d = sys.state_dim(), m = sys.control_dim();
  Rng rng(seed);
  std::vector<double> x0(d), c(d);
  for (auto& v : x0) v = rng.uniform(-1, 1);
  for (auto& v : c) v = rng.uniform(-1, 1);
  auto u = random_control(grid.steps, m, seed + 1);

  const auto traj = integrate_forward(sys, x0, u, grid, scheme);
  const auto adj = integrate_adjoint(sys, traj, u, c, grid, scheme);
  const double h = 1e-6;
  for (std::size_t k = 0; k < grid.steps; k += 7) {
    for (std::size_t j = 0; j < m; ++j) {
      const double keep = u.row(k)[j];
      u.row(k)[j] = keep + h;
      const double fp = dot(c, endpoint(sys, x0, u, grid, scheme));
      u.row(k)[j] = keep - h;
      const double fm = dot(c, endpoint(sys, x0, u, grid, scheme));
      u.row(k)[j] = keep;
      EXPECT_NEAR(adj.control_sensitivity[k * m + j], (fp - fm) / (2 * h), 1e-8)
          << sys.name() << " " << to_string(scheme) << " step " << k;
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    auto xp = x0, xm = x0;
    xp[i] += h;
    xm[i] -= h;
    const double fd = (dot(c, endpoint(sys, xp, u, grid, scheme)) -
                       dot(c, endpoint(sys, xm, u, grid, scheme))) / (2 * h);
    EXPECT_NEAR(adj.costates[i], fd, 1e-8) << sys.name() << " " << to_string(scheme);
  }
  for (std::size_t i = 0; i < d; ++i) EXPECT_EQ(adj.costates[grid.steps * d + i], c[i]);
}

double rk4_error(const ControlAffineSystem& sys, const std::vector<double>& x0, double T,
                 std::size_t steps, Scheme scheme, const std::vector<double>& reference) {
  const auto xT = endpoint(sys, x0, DiscretizedControl(steps, sys.control_dim()), TimeGrid(T, steps), scheme);
  return std::hypot(xT[0] - reference[0], sys.state_dim() > 1 ? xT[1] - reference[1] : 0.0);
}

}  // namespace

TEST(TimeGrid, Validation) {
  EXPECT_THROW(TimeGrid(0.0, 10), std::invalid_argument);
  EXPECT_THROW(TimeGrid(1.0, 0), std::invalid_argument);
  const TimeGrid g(15.0, 1500);
  EXPECT_DOUBLE_EQ(g.dt(), 0.01);
  EXPECT_DOUBLE_EQ(g.time(1500), 15.0);
}

TEST(Integrate, EulerIsExactForSingleIntegrator) {
  SingleIntegrator sys(1);
  const TimeGrid grid(1.0, 10);
  auto u = random_control(10, 1, 4);
  double expect = 0.25;
  for (double v : u.values) expect += v * grid.dt();
  for (Scheme s : {Scheme::euler, Scheme::rk4}) {
    const std::vector<double> x0{0.25};
    EXPECT_NEAR(endpoint(sys, x0, u, grid, s)[0], expect, 1e-15);
  }
}

TEST(Integrate, EquilibriumIsPreserved) {
  DampedPendulum p;
  const std::vector<double> x0{0.0, 0.0};
  const auto traj = integrate_forward(p, x0, DiscretizedControl(1500, 1), TimeGrid(15, 1500), Scheme::rk4);
  for (double v : traj.states) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(traj.steps(), 1500u);
}

TEST(Integrate, Rk4MatchesClosedFormStepPolynomial) {
  // For x' = a x the RK4 step multiplies by the degree-4 Taylor polynomial of e^{ha}.
  ScalarLinear sys(-1.0, 1.0);
  const TimeGrid grid(1.0, 8);
  const double z = -grid.dt();
  const double r = 1 + z + z * z / 2 + z * z * z / 6 + z * z * z * z / 24;
  const std::vector<double> x0{1.0};
  const double xT = endpoint(sys, x0, DiscretizedControl(8, 1), grid, Scheme::rk4)[0];
  EXPECT_NEAR(xT, std::pow(r, 8), 1e-15);
}

TEST(Integrate, ConvergenceOrders) {
  ScalarLinear sys(-1.0, 1.0);
  const std::vector<double> x0{1.0}, ref{std::exp(-2.0)};
  const double e1 = rk4_error(sys, x0, 2.0, 20, Scheme::rk4, ref);
  const double e2 = rk4_error(sys, x0, 2.0, 40, Scheme::rk4, ref);
  EXPECT_NEAR(std::log2(e1 / e2), 4.0, 0.15);
  const double f1 = rk4_error(sys, x0, 2.0, 200, Scheme::euler, ref);
  const double f2 = rk4_error(sys, x0, 2.0, 400, Scheme::euler, ref);
  EXPECT_NEAR(std::log2(f1 / f2), 1.0, 0.05);
}

TEST(Integrate, VanDerPolSelfConvergence) {
  VanDerPol vdp(1.0);
  const std::vector<double> x0{0.5, -0.5};
  const auto fine = endpoint(vdp, x0, DiscretizedControl(12000, 1), TimeGrid(15, 12000), Scheme::rk4);
  const double e1 = rk4_error(vdp, x0, 15, 750, Scheme::rk4, fine);
  const double e2 = rk4_error(vdp, x0, 15, 1500, Scheme::rk4, fine);
  EXPECT_LT(e2, 1e-6);
  EXPECT_GT(e1 / e2, 12.0);
}

TEST(Integrate, DivergenceIsReported) {
  Riccati sys;
  const std::vector<double> x0{10.0};
  try {
    integrate_forward(sys, x0, DiscretizedControl(1000, 1), TimeGrid(1.0, 1000), Scheme::euler);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.step(), 0u);
    EXPECT_EQ(e.particle(), -1);
  }
}

TEST(Adjoint, ClosedFormForScalarLinearEuler) {
  // x_{k+1} = (1 + h a) x_k + h b u_k: lambda_k = (1 + h a)^{K-k} lambda_K,
  // d x_K / d u_k = h b (1 + h a)^{K-k-1}.
  const double a = -0.7, b = 2.0;
  ScalarLinear sys(a, b);
  const TimeGrid grid(3.0, 30);
  const double h = grid.dt(), r = 1 + h * a;
  const auto u = random_control(30, 1, 9);
  const std::vector<double> x0{0.3}, lam{1.5};
  const auto traj = integrate_forward(sys, x0, u, grid, Scheme::euler);
  const auto adj = integrate_adjoint(sys, traj, u, lam, grid, Scheme::euler);
  for (std::size_t k = 0; k <= 30; ++k) {
    EXPECT_NEAR(adj.costates[k], 1.5 * std::pow(r, 30 - k), 1e-13);
  }
  for (std::size_t k = 0; k < 30; ++k) {
    EXPECT_NEAR(adj.control_sensitivity[k], 1.5 * h * b * std::pow(r, 29 - k), 1e-13);
  }
}

TEST(Adjoint, ClosedFormForScalarLinearRk4) {
  // With zero-order hold, RK4 gives x_{k+1} = R(z) x_k + h b P(z) u_k where
  // z = h a, R = 1 + z + z^2/2 + z^3/6 + z^4/24, P = 1 + z/2 + z^2/6 + z^3/24.
  const double a = 0.4, b = -1.3;
  ScalarLinear sys(a, b);
  const TimeGrid grid(2.0, 16);
  const double h = grid.dt(), z = h * a;
  const double R = 1 + z + z * z / 2 + z * z * z / 6 + z * z * z * z / 24;
  const double P = 1 + z / 2 + z * z / 6 + z * z * z / 24;
  const auto u = random_control(16, 1, 10);
  const std::vector<double> x0{-0.2}, lam{0.8};
  const auto traj = integrate_forward(sys, x0, u, grid, Scheme::rk4);
  const auto adj = integrate_adjoint(sys, traj, u, lam, grid, Scheme::rk4);
  for (std::size_t k = 0; k <= 16; ++k) EXPECT_NEAR(adj.costates[k], 0.8 * std::pow(R, 16 - k), 1e-13);
  for (std::size_t k = 0; k < 16; ++k) {
    EXPECT_NEAR(adj.control_sensitivity[k], 0.8 * h * b * P * std::pow(R, 15 - k), 1e-13);
  }
}

TEST(Adjoint, MatchesFiniteDifferences) {
  VanDerPol vdp;
  DampedPendulum pend;
  TwistedOscillator twisted;
  DoubleIntegrator dbl;
  std::uint64_t seed = 100;
  for (const ControlAffineSystem* sys :
       std::initializer_list<const ControlAffineSystem*>{&vdp, &pend, &twisted, &dbl}) {
    for (Scheme s : {Scheme::euler, Scheme::rk4}) check_adjoint_fd(*sys, s, seed++);
  }
}

TEST(Adjoint, SchemeMismatchThrows) {
  VanDerPol vdp;
  const TimeGrid grid(1.0, 10);
  const DiscretizedControl u(10, 1);
  const std::vector<double> x0{0.1, 0.1}, lam{1.0, 0.0};
  const auto traj = integrate_forward(vdp, x0, u, grid, Scheme::rk4);
  EXPECT_THROW(integrate_adjoint(vdp, traj, u, lam, grid, Scheme::euler), std::invalid_argument);
  const std::vector<double> bad{1.0};
  EXPECT_THROW(integrate_adjoint(vdp, traj, u, bad, grid, Scheme::rk4), std::invalid_argument);
}

TEST(Scheme, StringRoundTrip) {
  EXPECT_EQ(scheme_from_string("euler"), Scheme::euler);
  EXPECT_EQ(scheme_from_string(to_string(Scheme::rk4)), Scheme::rk4);
  EXPECT_THROW(scheme_from_string("rk45"), std::invalid_argument);
}
