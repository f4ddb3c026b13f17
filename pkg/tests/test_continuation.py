import time

import numpy as np
import pytest

from fcy import catalog
from fcy.assembly import Problem, manufacture_f, normalize_f, residual
from fcy.continuation import NewtonFailure, continuity_solve, newton_solve_at_t
from fcy.forms import PositivityError, min_eigenvalue
from fcy.assembly import assemble_psi_u
from fcy.torus import GridSpec, mean_zero, trig_field

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def manufactured():
    grid = GridSpec(2, 16)
    base = Problem.constant(grid)
    u_star = 0.05 * np.cos(TWO_PI * grid.x(1))
    return base.with_data(manufacture_f(u_star, base)), u_star


def test_newton_trivial_at_zero(manufactured):
    problem, _ = manufactured
    out = newton_solve_at_t(np.zeros(problem.grid.shape), 0.0, problem)
    assert out.iterations == 0 and out.residual == 0.0


def test_newton_from_nearby(manufactured):
    problem, u_star = manufactured
    out = newton_solve_at_t(0.9 * u_star, 1.0, problem)
    assert out.iterations <= 6
    assert np.abs(out.u - mean_zero(u_star)).max() <= 1e-8
    assert out.residual <= problem.newton_tol


def test_newton_near_degenerate_start():
    grid = GridSpec(2, 8)
    base = Problem.constant(grid)
    # pick the amplitude so the start has min eigenvalue about 1e-3
    amp = (1 - 1e-3) / np.pi ** 2
    u0 = amp * np.cos(TWO_PI * grid.x(1))
    lam0 = min_eigenvalue(assemble_psi_u(base.base, u0, grid)).min()
    assert lam0 == pytest.approx(1e-3, rel=1e-6)
    target = 0.05 * np.cos(TWO_PI * grid.y(2))
    problem = base.with_data(manufacture_f(target, base))
    out = newton_solve_at_t(u0, 1.0, problem)
    for row in out.history:
        assert row["min_eig"] > 0
    np.testing.assert_allclose(out.u, mean_zero(target), atol=1e-8)


def test_newton_rejects_inadmissible_start(manufactured):
    problem, _ = manufactured
    with pytest.raises(PositivityError):
        newton_solve_at_t(np.cos(TWO_PI * problem.grid.x(1)), 1.0, problem)


def test_newton_iteration_cap():
    grid = GridSpec(2, 8)
    base = Problem.constant(grid, max_newton=1)
    problem = base.with_data(normalize_f(0.8 * np.cos(TWO_PI * grid.x(1)), base))
    with pytest.raises(NewtonFailure) as info:
        newton_solve_at_t(np.zeros(grid.shape), 1.0, problem)
    assert len(info.value.history) >= 1


def test_zero_data():
    grid = GridSpec(2, 8)
    result = continuity_solve(Problem.constant(grid))
    assert result.converged
    assert np.abs(result.u).max() <= 1e-12
    assert result.constant == pytest.approx(0.0, abs=1e-14)
    assert result.diagnostics["path_steps"] == 1


def test_cos_product_data():
    grid = GridSpec(2, 16)
    base = Problem.constant(grid)
    f = normalize_f(0.5 * catalog.expression("cos_x1_cos_y2", grid), base)
    result = continuity_solve(base.with_data(f))
    assert result.converged
    assert -f.max() - 1e-8 <= result.constant <= -f.min() + 1e-8
    assert np.abs(residual(result.u, 1.0, base.with_data(f))).max() <= 1e-10
    for row in result.history:
        assert row["min_eig"] > 0


def test_manufactured_recovery(manufactured):
    problem, u_star = manufactured
    start = time.perf_counter()
    result = continuity_solve(problem)
    assert time.perf_counter() - start < 60
    assert result.converged and result.t == 1.0
    assert np.abs(result.u - mean_zero(u_star)).max() <= 1e-6
    assert result.diagnostics["residual"] <= 1e-10
    assert {"t", "iter", "residual_sup", "min_eig", "constant"} <= set(result.history[-1])


def test_seeded_path_reaches_same_solution(manufactured, rng):
    problem, u_star = manufactured
    seed = trig_field(problem.grid, rng, kmax=1, amplitude=0.005)
    a = continuity_solve(problem)
    b = continuity_solve(problem, seed=seed)
    assert np.abs(a.u - b.u).max() <= 1e-8


def test_incompatible_data_rejected():
    grid = GridSpec(2, 8)
    with pytest.raises(ValueError):
        continuity_solve(Problem.constant(grid, f=np.full(grid.shape, 0.5)))


def test_step_underflow_reports_failure():
    # data far outside the reach of a single Newton iteration per step
    grid = GridSpec(2, 8)
    base = Problem.constant(grid, max_newton=1, path_steps=1)
    problem = base.with_data(normalize_f(6.0 * np.cos(TWO_PI * grid.x(1)), base))
    result = continuity_solve(problem)
    assert not result.converged
    assert result.t < 1.0 and "underflow" in result.message
    assert np.isnan(result.constant)
