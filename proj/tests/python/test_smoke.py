import math

import numpy as np
import pytest

import reachot


def small_config(**over):
    cfg = {
        "system": {"name": "van_der_pol"},
        "grid": {"T": 3, "steps": 60},
        "ensemble": {"N": 5},
        "kernel": {"delta": 0.3},
        "solver": {"max_iters": 10},
        "oracle": {"M": 300},
        "seed": 3,
    }
    cfg.update(over)
    return cfg


def test_version_and_registry():
    assert reachot.version().startswith("reachot ")
    assert {"van_der_pol", "pendulum", "integrator1d"} <= set(reachot.systems())


def test_rhs_and_kernel_values():
    f = reachot.rhs("van_der_pol", [2.0, 1.0], [0.5])
    assert f.tolist() == [1.0, -3.0 - 2.0 + 0.5]
    assert reachot.kernel("gaussian", 0.5, [0.0, 0.0]) == pytest.approx(1 / math.pi, abs=1e-12)
    g = reachot.kernel_grad("gaussian", 0.5, [0.5])
    assert g[0] == pytest.approx(-math.exp(-0.25) / math.sqrt(math.pi), abs=1e-14)
    assert reachot.kernel("bump", 0.5, [1.2, 0.0]) == 0.0


def test_interaction_energy_single_point():
    e = reachot.interaction_energy(np.array([[0.1, 0.2]]), "gaussian", 0.5, 1.0)
    assert e == pytest.approx(1 / math.pi, abs=1e-12)


def test_wasserstein_midpoints():
    pts = (np.arange(10) + 0.5) / 10
    assert reachot.wasserstein1_1d(pts, 0.0, 1.0) == pytest.approx(0.025, abs=1e-15)


def test_problem_gradient_matches_finite_difference():
    p = reachot.Problem("pendulum", horizon=2.0, steps=20, delta=0.4, epsilon=0.05)
    rng = np.random.default_rng(0)
    x0s = rng.uniform(-1, 1, size=(3, 2))
    u = rng.uniform(-1, 1, size=(3, 20, 1))
    gu, gx = p.gradient(x0s, u)
    assert gu.shape == u.shape and gx.shape == x0s.shape
    h = 1e-6
    up, um = u.copy(), u.copy()
    up[1, 7, 0] += h
    um[1, 7, 0] -= h
    fd = (p.evaluate(x0s, up)["total"] - p.evaluate(x0s, um)["total"]) / (2 * h)
    assert gu[1, 7, 0] == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_solve_decreases_and_stays_feasible():
    p = reachot.Problem("van_der_pol", horizon=2.0, steps=20, delta=0.3, epsilon=0.05)
    rng = np.random.default_rng(1)
    x0s = rng.uniform(-1, 1, size=(6, 2))
    u = rng.uniform(-0.5, 0.5, size=(6, 20, 1))
    res = p.solve(x0s, u, [-1, -1], [1, 1], [-0.5], [0.5], max_iters=20)
    hist = res["history"]
    assert len(hist) > 0 and np.all(np.diff(hist) <= 0)
    assert res["final"]["total"] < res["initial"]["total"]
    assert np.all(np.abs(res["controls"]) <= 0.5)


def test_config_driven_runs():
    out = reachot.optimize(small_config())
    assert out["terminals"].shape == (5, 2)
    assert out["controls"].shape == (5, 60, 1)
    assert out["report"]["command"] == "optimize"
    base = reachot.baseline(small_config())
    assert base["report"]["final"]["control_energy"] > 0
    again = reachot.optimize(small_config())
    assert np.array_equal(out["terminals"], again["terminals"])


def test_gradcheck_and_config_errors():
    res = reachot.gradcheck(small_config(grid={"T": 2, "steps": 20}, ensemble={"N": 3}), probes=20)
    assert res["passed"] and res["max_rel_error"] <= 1e-6
    with pytest.raises(ValueError):
        reachot.load_config(small_config(bogus=1))
    full = reachot.load_config(small_config())
    assert full["oracle"]["M"] == 300 and full["grid"]["scheme"] == "rk4"
