"""
Continuity method over ``t`` in ``[0, 1]`` with damped Newton corrections.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import forms
from .assembly import (
    PositivityError,
    Problem,
    SolveResult,
    assemble_psi_u,
    m_functional,
    residual_for_data,
    volume_density,
)
from .linearized import LinearSolveError, LinearState, solve_linear
from .torus import integrate, mean_zero

log = logging.getLogger(__name__)

STEP_FLOOR = 1e-4
LINE_SEARCH = [2.0 ** -k for k in range(9)]
EIG_FLOOR_FRACTION = 0.1


class NewtonFailure(RuntimeError):
    """Newton stalled or hit its iteration cap; carries the best iterate."""

    def __init__(self, message, best, history):
        super().__init__(message)
        self.best = best
        self.history = history


@dataclass
class NewtonOutcome:
    u: np.ndarray
    iterations: int
    residual: float
    min_eig: float
    history: list = field(default_factory=list)


def _evaluate(u, data, problem):
    Psi_u = assemble_psi_u(problem.base, u, problem.grid)
    lam = float(forms.min_eigenvalue(Psi_u).min())
    if lam <= 0:
        return None, lam, None
    R = residual_for_data(u, data, problem)
    vol = volume_density(Psi_u)
    const = float(np.log(integrate(vol)) - np.log(integrate(np.exp(data), problem.vol0)))
    return R, lam, const


def newton_solve_at_t(u0, t: float, problem: Problem, data=None) -> NewtonOutcome:
    """Damped Newton for the continuity equation at parameter ``t``.

    Each step solves ``L v = -P R`` (``P`` removes the ``omega_u^n``-mean so the
    right-hand side lies in the range of ``L``) and backtracks over
    ``alpha = 1, 1/2, ..., 1/256``, accepting the first ``alpha`` for which the
    minimum eigenvalue of ``Psi_{u + alpha v}`` stays above a tenth of its
    current value and ``sup|R|`` shrinks by at least ``1 - alpha/4``.

    ``data`` overrides the target ``t * problem.f``.

    Raises
    ------
    NewtonFailure
        On line-search failure or when ``problem.max_newton`` is exhausted.
    PositivityError
        If ``u0`` itself is not admissible.
    """
    data = t * problem.f if data is None else data
    u = mean_zero(u0)
    R, lam, const = _evaluate(u, data, problem)
    if R is None:
        raise PositivityError(f"initial iterate not admissible (min eigenvalue {lam:.3e})", eigenvalue=lam)
    rn = float(np.abs(R).max())
    history = [dict(t=t, iter=0, residual_sup=rn, min_eig=lam, constant=const)]
    it = 0
    while rn > problem.newton_tol:
        if it >= problem.max_newton:
            raise NewtonFailure(f"no convergence in {it} iterations (residual {rn:.3e})", u, history)
        it += 1
        state = LinearState.at(u, problem)
        rhs = -(R - integrate(R, state.vol_u) / state.V_u)
        lin_tol = max(1e-2 * problem.newton_tol, 1e-2 * rn * min(1.0, rn))
        try:
            v = solve_linear(rhs, state, lin_tol)
        except LinearSolveError as exc:
            raise NewtonFailure(f"linear solve failed: {exc}", u, history) from exc
        for alpha in LINE_SEARCH:
            trial = u + alpha * v
            R_t, lam_t, const_t = _evaluate(trial, data, problem)
            if R_t is None or lam_t < EIG_FLOOR_FRACTION * lam:
                continue
            rn_t = float(np.abs(R_t).max())
            if rn_t <= (1.0 - alpha / 4.0) * rn:
                break
        else:
            raise NewtonFailure(f"line search failed at iteration {it} (residual {rn:.3e})", u, history)
        u, R, lam, const, rn = mean_zero(trial), R_t, lam_t, const_t, rn_t
        history.append(dict(t=t, iter=it, residual_sup=rn, min_eig=lam, constant=const))
        log.debug("t=%.4f iter=%d alpha=%.4f residual=%.3e", t, it, alpha, rn)
    return NewtonOutcome(u, it, rn, lam, history)


def continuity_solve(problem: Problem, seed=None) -> SolveResult:
    """Follow the continuity path from ``t = 0`` to ``t = 1``.

    Without ``seed`` the path is the family with data ``t f`` started from the
    exact solution ``u = 0``.  With an admissible ``seed`` the data are
    ``(1 - t) M(seed) + t f``, for which ``seed`` is the exact solution at
    ``t = 0``; both paths share the same endpoint equation.

    The step ``dt`` starts at ``1 / problem.path_steps``, doubles after a step
    needing at most 3 Newton iterations and halves on failure.  Falling below
    ``1e-4`` ends the solve with ``converged=False``.
    """
    defect = problem.compatibility_defect()
    if abs(defect) > 1e-10:
        raise ValueError(f"f violates the compatibility condition (relative defect {defect:.3e})")
    if seed is None:
        u = np.zeros(problem.grid.shape)
        start = np.zeros(problem.grid.shape)
    else:
        u = mean_zero(seed)
        start = m_functional(u, problem)

    def data(t):
        return (1.0 - t) * start + t * problem.f

    history = []
    t, dt = 0.0, 1.0 / problem.path_steps
    steps = rejected = newton_total = 0
    out = newton_solve_at_t(u, 0.0, problem, data(0.0))
    u, last = out.u, out
    history.extend(out.history)
    while t < 1.0:
        t_try = min(1.0, t + dt)
        try:
            out = newton_solve_at_t(u, t_try, problem, data(t_try))
        except (NewtonFailure, PositivityError, LinearSolveError) as exc:
            rejected += 1
            dt *= 0.5
            log.info("step to t=%.5f rejected (%s); dt -> %.2e", t_try, exc, dt)
            if dt < STEP_FLOOR:
                return SolveResult(
                    u=u,
                    constant=float("nan"),
                    history=history,
                    diagnostics=_diagnostics(u, last, steps, rejected, newton_total),
                    converged=False,
                    t=t,
                    message=f"step size underflow at t={t:.6f}: {exc}",
                )
            continue
        history.extend(out.history)
        steps += 1
        newton_total += out.iterations
        u, t, last = out.u, t_try, out
        if out.iterations <= 3:
            dt *= 2.0
    constant = float(np.log(integrate(volume_density(assemble_psi_u(problem.base, u, problem.grid))))
                     - np.log(integrate(np.exp(problem.f), problem.vol0)))
    return SolveResult(
        u=u,
        constant=constant,
        history=history,
        diagnostics=_diagnostics(u, last, steps, rejected, newton_total),
        converged=True,
        t=1.0,
    )


def _diagnostics(u, last: NewtonOutcome, steps, rejected, newton_total):
    return dict(
        oscillation=float(u.max() - u.min()),
        min_eig=last.min_eig,
        residual=last.residual,
        path_steps=steps,
        rejected_steps=rejected,
        newton_iterations=newton_total,
    )


__all__ = [
    "NewtonFailure",
    "NewtonOutcome",
    "continuity_solve",
    "newton_solve_at_t",
]
