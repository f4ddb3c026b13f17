"""
Linearization of the normalized volume functional and its solver.

At an iterate ``u`` with metric ``omega_u`` (coefficients ``g_u``) the derivative
of ``M`` in direction ``v`` is::

    L(v) = l(v) - int l(v) omega_u^n / int omega_u^n,
    l(v) = sum_{p,q} (g_u)_{pq} Theta_{pq} / ((n-1) det g_u),

with ``Theta = contract_hessian(complex_hessian(v))``.  ``L`` kills constants
and maps into functions of zero ``omega_u^n``-mean.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from . import forms
from .assembly import Problem, assemble_psi_u, volume_density
from .torus import GridSpec, complex_hessian, invert_laplacian

log = logging.getLogger(__name__)

DENSE_LIMIT = 4096


class LinearSolveError(RuntimeError):
    """Iterative solve missed its tolerance.

    Attributes
    ----------
    best : ndarray
        Best iterate found.
    history : list of float
        Residual norms seen during the solve.
    """

    def __init__(self, message, best, history):
        super().__init__(message)
        self.best = best
        self.history = list(history)


@dataclass
class LinearState:
    """Metric data frozen at one iterate."""

    grid: GridSpec
    Psi_u: np.ndarray
    g_u: np.ndarray
    vol_u: np.ndarray
    V_u: float

    @classmethod
    def at(cls, u, problem: Problem) -> "LinearState":
        Psi_u = assemble_psi_u(problem.base, u, problem.grid)
        vol = volume_density(Psi_u)
        g_u = forms.root_n1(Psi_u)
        return cls(problem.grid, Psi_u, g_u, vol, float(np.mean(vol)))

    def check(self, tol=1e-11):
        err = np.abs(forms.power_n1(self.g_u) - self.Psi_u).max()
        scale = max(1.0, np.abs(self.Psi_u).max())
        if err > tol * scale:
            raise RuntimeError(f"inconsistent linear state: |power_n1(g_u) - Psi_u| = {err:.2e}")


def _grid_mean(a, grid: GridSpec):
    return a.mean(axis=tuple(range(-grid.ndim, 0)))


def local_term(v, state: LinearState) -> np.ndarray:
    """``l(v)``; ``v`` may carry leading batch axes."""
    n = state.grid.n
    Theta = forms.contract_hessian(complex_hessian(v, state.grid))
    return forms.pairing(state.g_u, Theta) / ((n - 1) * state.vol_u)


def apply_Lt(v, state: LinearState) -> np.ndarray:
    """Apply the linearized operator to ``v`` (leading batch axes allowed)."""
    loc = local_term(v, state)
    avg = _grid_mean(loc * state.vol_u, state.grid) / state.V_u
    return loc - np.asarray(avg)[(...,) + (None,) * state.grid.ndim]


def assemble_dense(state: LinearState, chunk: int = 256) -> np.ndarray:
    """Matrix of ``apply_Lt`` in the flattened grid basis (small grids only)."""
    grid = state.grid
    if grid.size > DENSE_LIMIT:
        raise ValueError(f"dense assembly limited to {DENSE_LIMIT} points, grid has {grid.size}")
    A = np.empty((grid.size, grid.size))
    for start in range(0, grid.size, chunk):
        stop = min(start + chunk, grid.size)
        E = np.zeros((stop - start, grid.size))
        E[np.arange(stop - start), np.arange(start, stop)] = 1.0
        cols = apply_Lt(E.reshape((stop - start,) + grid.shape), state)
        A[:, start:stop] = cols.reshape(stop - start, grid.size).T
    return A


def _supnorm(a):
    return float(np.abs(a).max()) if a.size else 0.0


def solve_linear(rhs, state: LinearState, tol: float = 1e-10, maxiter: int = 40,
                 restart: int = 60, dense: bool | None = None) -> np.ndarray:
    """Mean-zero ``v`` with ``sup|apply_Lt(v) - rhs| <= tol * max(1, sup|rhs|)``.

    The singular operator is bordered as ``A v = L v + mean(v)``, which is
    invertible; for compatible ``rhs`` its solution has zero mean.  GMRES is
    preconditioned by the exact inverse of ``A`` at the flat metric,
    ``r -> (n-1) Delta^{-1}(r - mean r) + mean r``.  If GMRES misses the target on
    a grid of at most 4096 points the bordered matrix is assembled and solved
    directly (``dense=True`` forces that path, ``dense=False`` forbids it).

    Raises
    ------
    ValueError
        If ``rhs`` has nonzero ``omega_u^n``-mean.
    LinearSolveError
        If the target is missed.
    """
    grid = state.grid
    rhs = np.asarray(rhs, dtype=float)
    norm = _supnorm(rhs)
    if norm == 0.0:
        return np.zeros(grid.shape)
    defect = float(np.mean(rhs * state.vol_u)) / state.V_u
    if abs(defect) > 1e-10 * norm:
        raise ValueError(f"right-hand side not compatible: weighted mean {defect:.3e}")
    target = tol * max(1.0, norm)
    n = grid.n

    def check(v):
        return _supnorm(apply_Lt(v, state) - rhs)

    if dense is not True:
        size = grid.size

        def matvec(x):
            v = x.reshape(grid.shape)
            return (apply_Lt(v, state) + v.mean()).ravel()

        def precond(r):
            r = r.reshape(grid.shape)
            return ((n - 1) * invert_laplacian(r, grid) + r.mean()).ravel()

        A = LinearOperator((size, size), matvec=matvec, dtype=float)
        M = LinearOperator((size, size), matvec=precond, dtype=float)
        history = []
        x = np.zeros(size)
        best, best_err = x.reshape(grid.shape), norm
        atol = 0.5 * target
        for _ in range(4):
            x, info = gmres(A, rhs.ravel(), x0=x, rtol=0.0, atol=atol, restart=restart,
                            maxiter=maxiter, M=M, callback=history.append, callback_type="pr_norm")
            v = x.reshape(grid.shape)
            err = check(v)
            if err < best_err:
                best, best_err = v, err
            if err <= target:
                return v - v.mean()
            atol *= 0.1
        log.debug("gmres missed target %.2e (got %.2e)", target, best_err)
        if dense is False or grid.size > DENSE_LIMIT:
            raise LinearSolveError(
                f"GMRES reached {best_err:.3e} > {target:.3e}", best - best.mean(), history
            )
    L = assemble_dense(state)
    v = np.linalg.solve(L + 1.0 / grid.size, rhs.ravel()).reshape(grid.shape)
    err = check(v)
    if err > target:
        raise LinearSolveError(f"dense solve reached {err:.3e} > {target:.3e}", v - v.mean(), [err])
    return v - v.mean()
