#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "reachot/dynamics.hpp"
#include "reachot/optimizer.hpp"

using namespace reachot;

namespace {

Objective make_objective(const std::string& sys, double T, std::size_t steps, double delta,
                         double eps, std::size_t dim = 2) {
  return Objective(make_system(sys), TimeGrid(T, steps), Scheme::rk4,
                   KernelSpec(KernelFamily::gaussian, delta, dim), eps);
}

}  // namespace

TEST(Solve, SingleParticleDrivesControlToZero) {
  const auto obj = make_objective("van_der_pol", 2.0, 20, 0.2, 0.05);
  const BoxSet omega = BoxSet::cube(2, -1, 1), ubox = BoxSet::cube(1, -1, 1);
  const auto ens = init_ensemble(obj.system(), obj.grid(), omega, ubox, 1, InitStrategy::uniform_random, 3);
  SolverConfig cfg;
  cfg.max_iters = 50;
  const auto res = solve(ens, obj, omega, ubox, cfg);
  EXPECT_LT(res.final.control_energy, 1e-20);
  EXPECT_NE(res.status, SolveStatus::stalled);
  EXPECT_NE(res.status, SolveStatus::max_iters);
  EXPECT_NEAR(res.final.interaction_energy, obj.kernel().peak() / 0.05, 1e-12);
}

TEST(Solve, TwoParticlesReachAnalyticSeparation) {
  // x' = u from the origin, T = 1, constant controls +a and -a:
  // J(a) = a^2 + (K(0) + K(2a)) / (2 eps), stationary where K(2a) = 2 eps delta^2.
  const double delta = 0.5, eps = 0.1;
  const auto obj = make_objective("integrator1d", 1.0, 10, delta, eps, 1);
  const BoxSet omega({0.0}, {0.0}), ubox = BoxSet::cube(1, -1, 1);
  ParticleEnsemble ens;
  ens.state_dim = 1;
  ens.x0s = {0.0, 0.0};
  ens.controls = {DiscretizedControl(10, 1, 0.1), DiscretizedControl(10, 1, -0.1)};
  SolverConfig cfg;
  cfg.max_iters = 2000;
  cfg.tol_grad = 1e-12;
  cfg.tol_obj = 0.0;
  const auto res = solve(ens, obj, omega, ubox, cfg);
  const double peak = 1.0 / std::sqrt(4 * M_PI * delta * delta);
  const double a = delta * std::sqrt(-std::log(2 * eps * delta * delta / peak));
  const auto ev = obj.evaluate(res.ensemble);
  EXPECT_NEAR(ev.terminals[0], a, 1e-6);
  EXPECT_NEAR(ev.terminals[1], -a, 1e-6);
}

TEST(Solve, MonotoneFeasibleAndProjected) {
  const auto obj = make_objective("pendulum", 3.0, 60, 0.3, 0.02);
  const BoxSet omega = BoxSet::cube(2, -0.5, 0.5), ubox = BoxSet::cube(1, -0.3, 0.3);
  const auto ens = init_ensemble(obj.system(), obj.grid(), omega, ubox, 12, InitStrategy::uniform_random, 8);
  SolverConfig cfg;
  cfg.max_iters = 60;
  const auto res = solve(ens, obj, omega, ubox, cfg);
  ASSERT_FALSE(res.history.empty());
  double prev = res.initial.total;
  for (const auto& r : res.history) {
    EXPECT_LE(r.total, prev);
    EXPECT_LE(r.total, prev - cfg.armijo_c * r.step_sq_norm / r.step + 1e-15);
    EXPECT_DOUBLE_EQ(r.total, r.control_energy + r.interaction_energy);
    prev = r.total;
  }
  EXPECT_EQ(res.final.total, res.history.back().total);
  EXPECT_TRUE(res.ensemble.feasible(omega, ubox));
  // The bound is active somewhere: the projection really did something.
  bool saturated = false;
  for (const auto& c : res.ensemble.controls) {
    for (double v : c.values) saturated |= std::abs(v) == 0.3;
  }
  EXPECT_TRUE(saturated);
  EXPECT_LT(res.final.total, res.initial.total);
}

TEST(Solve, FixedInitialStatesStayFixed) {
  const auto obj = make_objective("van_der_pol", 2.0, 20, 0.3, 0.05);
  const BoxSet omega = BoxSet::cube(2, -1, 1), ubox = BoxSet::cube(1, -1, 1);
  const auto ens = init_ensemble(obj.system(), obj.grid(), omega, ubox, 5, InitStrategy::zero_control, 2);
  SolverConfig cfg;
  cfg.max_iters = 10;
  cfg.optimize_x0 = false;
  const auto res = solve(ens, obj, omega, ubox, cfg);
  EXPECT_EQ(res.ensemble.x0s, ens.x0s);
  cfg.optimize_x0 = true;
  const auto moved = solve(ens, obj, omega, ubox, cfg);
  EXPECT_NE(moved.ensemble.x0s, ens.x0s);
}

TEST(Solve, Deterministic) {
  const auto obj = make_objective("van_der_pol", 3.0, 30, 0.3, 0.05);
  const BoxSet omega = BoxSet::cube(2, -1, 1), ubox = BoxSet::cube(1, -1, 1);
  const auto ens = init_ensemble(obj.system(), obj.grid(), omega, ubox, 8, InitStrategy::uniform_random, 5);
  SolverConfig cfg;
  cfg.max_iters = 15;
  const auto a = solve(ens, obj, omega, ubox, cfg);
  const auto b = solve(ens, obj, omega, ubox, cfg);
  EXPECT_EQ(a.ensemble, b.ensemble);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].total, b.history[i].total);
}

TEST(Solve, InfeasibleStartAndBadConfigThrow) {
  const auto obj = make_objective("van_der_pol", 1.0, 10, 0.3, 0.05);
  const BoxSet omega = BoxSet::cube(2, -1, 1), ubox = BoxSet::cube(1, -1, 1);
  auto ens = init_ensemble(obj.system(), obj.grid(), omega, ubox, 2, InitStrategy::zero_control, 1);
  ens.controls[1].values[3] = 1.5;
  EXPECT_THROW(solve(ens, obj, omega, ubox, SolverConfig{}), std::invalid_argument);
  ens.controls[1].values[3] = 0.0;
  SolverConfig bad;
  bad.armijo_c = 1.0;
  EXPECT_THROW(solve(ens, obj, omega, ubox, bad), std::invalid_argument);
  bad = SolverConfig{};
  bad.backtrack = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(InitEnsemble, UniformControlsAreCentred) {
  // Mean of n i.i.d. U[-1, 1] draws has standard deviation 1 / sqrt(3n).
  VanDerPol vdp;
  const TimeGrid grid(15, 1500);
  const BoxSet omega = BoxSet::cube(2, -1, 1), ubox = BoxSet::cube(1, -1, 1);
  const auto ens = init_ensemble(vdp, grid, omega, ubox, 40, InitStrategy::uniform_random, 17);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : ens.controls) {
    for (double v : c.values) {
      sum += v;
      ++n;
    }
  }
  EXPECT_LT(std::abs(sum / n), 4.0 / std::sqrt(3.0 * n));
  EXPECT_TRUE(ens.feasible(omega, ubox));

  const auto zero = init_ensemble(vdp, grid, omega, BoxSet({0.2}, {1.0}), 3, InitStrategy::zero_control, 17);
  for (const auto& c : zero.controls) {
    for (double v : c.values) EXPECT_EQ(v, 0.2);
  }
  EXPECT_EQ(zero.x0s, init_ensemble(vdp, grid, omega, ubox, 3, InitStrategy::zero_control, 17).x0s);
}

TEST(Enums, StringRoundTrip) {
  EXPECT_EQ(init_strategy_from_string(to_string(InitStrategy::zero_control)), InitStrategy::zero_control);
  EXPECT_EQ(control_metric_from_string(to_string(ControlMetric::euclidean)), ControlMetric::euclidean);
  EXPECT_EQ(to_string(SolveStatus::stalled), "stalled");
  EXPECT_THROW(init_strategy_from_string("sobol"), std::invalid_argument);
}
