"""
Field assembly for the function-type equation on a flat torus.

The unknown ``u`` perturbs the base (n-1,n-1)-form ``Psi0 = omega_0^(n-1)`` to
``Psi_u = Psi0 + (i/2) ddbar u ^ eta^(n-2)``; the metric ``omega_u`` is its
(n-1)st root and ``omega_u^n / eta^n = det(Psi_u)^(1/(n-1))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import forms
from .forms import PositivityError
from .torus import GridSpec, complex_hessian, integrate

VOLUME_FLOOR = 1e-300


@dataclass
class Problem:
    """One solve: base form, data and iteration parameters.

    Attributes
    ----------
    grid : GridSpec
    base : ndarray, shape ``grid.shape + (n, n)``
        ``Psi0`` at every grid point; positive definite.
    f : ndarray, shape ``grid.shape``
        Right-hand side data; should satisfy ``integrate(exp(f) * vol0) == V``.
    path_steps : int
        Initial number of continuation steps (``dt = 1 / path_steps``).
    newton_tol : float
        Target sup-norm of the residual.
    max_newton : int
        Newton iteration cap per continuation step.
    """

    grid: GridSpec
    base: np.ndarray
    f: np.ndarray
    path_steps: int = 1
    newton_tol: float = 1e-10
    max_newton: int = 30

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=complex)
        self.f = np.asarray(self.f, dtype=float)
        n = self.grid.n
        if self.base.shape != self.grid.shape + (n, n):
            raise ValueError(f"base has shape {self.base.shape}, expected {self.grid.shape + (n, n)}")
        if self.f.shape != self.grid.shape:
            raise ValueError(f"f has shape {self.f.shape}, expected {self.grid.shape}")
        if self.path_steps < 1 or self.max_newton < 1 or not self.newton_tol > 0:
            raise ValueError("path_steps, max_newton and newton_tol must be positive")
        forms.require_positive(self.base, "Psi0")

    @classmethod
    def constant(cls, grid: GridSpec, g0=None, f=None, **kwargs) -> "Problem":
        """Problem whose base metric is the constant matrix ``g0`` (identity by default)."""
        g0 = np.eye(grid.n) if g0 is None else np.asarray(g0, dtype=complex)
        base = np.broadcast_to(forms.power_n1(g0), grid.shape + (grid.n, grid.n)).copy()
        f = np.zeros(grid.shape) if f is None else f
        return cls(grid, base, f, **kwargs)

    @classmethod
    def potential(cls, grid: GridSpec, psi, scale: float, f=None, **kwargs) -> "Problem":
        """Problem whose base form comes from :func:`balanced_from_potential`."""
        base = balanced_from_potential(psi, scale, grid)
        f = np.zeros(grid.shape) if f is None else f
        return cls(grid, base, f, **kwargs)

    def with_data(self, f) -> "Problem":
        return Problem(self.grid, self.base, f, self.path_steps, self.newton_tol, self.max_newton)

    @cached_property
    def vol0(self) -> np.ndarray:
        return volume_density(self.base)

    @cached_property
    def V(self) -> float:
        return integrate(self.vol0)

    @cached_property
    def h(self) -> np.ndarray:
        return h_field(self.base)

    def compatibility_defect(self, f=None) -> float:
        """``integrate(exp(f) vol0) / V - 1``."""
        f = self.f if f is None else f
        return integrate(np.exp(f), self.vol0) / self.V - 1.0


@dataclass
class SolveResult:
    """Outcome of a continuity solve.

    ``constant`` is ``log(int omega_u^n) - log(int e^f omega_0^n)``.  ``history``
    holds one record per Newton iterate with keys ``t, iter, residual_sup,
    min_eig, constant``.  On failure ``converged`` is False, ``t`` is the last
    accepted path parameter and ``u`` the solution there.
    """

    u: np.ndarray
    constant: float
    history: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    converged: bool = True
    t: float = 1.0
    message: str = ""


def balanced_from_potential(psi, scale: float, grid: GridSpec | None = None) -> np.ndarray:
    """``Psi0 = I + scale * contract_hessian(complex_hessian(psi))`` at every point.

    Raises
    ------
    PositivityError
        If the result fails to be positive somewhere; carries the worst point.
    """
    psi = np.asarray(psi, dtype=float)
    grid = grid or GridSpec.of(psi)
    Psi0 = np.eye(grid.n) + scale * forms.contract_hessian(complex_hessian(psi, grid))
    forms.require_positive(Psi0, "balanced base form")
    return Psi0


def assemble_psi_u(Psi0, u, grid: GridSpec | None = None) -> np.ndarray:
    """``Psi0 + contract_hessian(complex_hessian(u))``; positivity is not checked."""
    u = np.asarray(u, dtype=float)
    return Psi0 + forms.contract_hessian(complex_hessian(u, grid))


def h_field(Psi0) -> np.ndarray:
    """``h = n eta ^ omega_0^(n-1) / eta^n``, the trace of ``Psi0`` for flat ``eta``."""
    return forms.trace_n1(Psi0)


def volume_density(Psi_u) -> np.ndarray:
    """``omega_u^n / eta^n = det(Psi_u)^(1/(n-1))`` with a positivity guard."""
    Psi_u = np.asarray(Psi_u)
    n = Psi_u.shape[-1]
    forms.require_positive(Psi_u, "Psi_u")
    vol = forms.det_n1(Psi_u) ** (1.0 / (n - 1))
    if not np.all(vol > VOLUME_FLOOR):
        idx = np.unravel_index(int(np.argmin(vol)), vol.shape)
        raise PositivityError(f"volume density underflow at {idx}", index=idx, eigenvalue=0.0)
    return vol


def _log_volume_ratio(u, problem: Problem):
    Psi_u = assemble_psi_u(problem.base, u, problem.grid)
    vol = volume_density(Psi_u)
    return np.log(vol / problem.vol0), vol


def m_functional(u, problem: Problem) -> np.ndarray:
    """``M(u) = log(omega_u^n / omega_0^n) - log(int omega_u^n / V)``."""
    logratio, vol = _log_volume_ratio(u, problem)
    return logratio - np.log(integrate(vol) / problem.V)


def data_offset(data, problem: Problem) -> float:
    """``log(int e^data omega_0^n / V)``."""
    return float(np.log(integrate(np.exp(data), problem.vol0) / problem.V))


def residual_for_data(u, data, problem: Problem) -> np.ndarray:
    """``M(u) - data + log(int e^data omega_0^n / V)``; zero iff ``u`` solves for ``data``."""
    return m_functional(u, problem) - data + data_offset(data, problem)


def residual(u, t: float, problem: Problem) -> np.ndarray:
    """Residual of the continuity family at parameter ``t`` (data ``t f``)."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t={t} outside [0, 1]")
    return residual_for_data(u, t * problem.f, problem)


def det_ratio_sides(u, t: float, problem: Problem):
    """Both sides of the determinant form of the continuity equation.

    Returns ``(det Psi_u / det Psi0, exp((n-1) t f) (int omega_u^n / int e^{tf} omega_0^n)^(n-1))``.
    """
    n = problem.grid.n
    Psi_u = assemble_psi_u(problem.base, u, problem.grid)
    vol = volume_density(Psi_u)
    lhs = forms.det_n1(Psi_u) / forms.det_n1(problem.base)
    ratio = integrate(vol) / integrate(np.exp(t * problem.f), problem.vol0)
    rhs = np.exp((n - 1) * t * problem.f) * ratio ** (n - 1)
    return lhs, rhs


def solution_constant(u, problem: Problem, f=None) -> float:
    """``log(int omega_u^n) - log(int e^f omega_0^n)``."""
    f = problem.f if f is None else f
    vol = volume_density(assemble_psi_u(problem.base, u, problem.grid))
    return float(np.log(integrate(vol)) - np.log(integrate(np.exp(f), problem.vol0)))


def manufacture_f(u_star, problem: Problem, hessian=None) -> np.ndarray:
    """Data ``f = M(u_star)`` for which ``u_star`` solves the equation at ``t = 1``.

    Parameters
    ----------
    u_star : ndarray
        Intended solution sampled on ``problem.grid``.
    problem : Problem
        Supplies the base form; its own ``f`` is ignored.
    hessian : ndarray, optional
        Exact complex Hessian of ``u_star`` (shape ``grid.shape + (n, n)``).  When
        given it replaces the spectral Hessian, so the data are the continuous
        ones sampled on the grid rather than the grid-consistent ones.
    """
    if hessian is None:
        return m_functional(u_star, problem)
    Psi_u = problem.base + forms.contract_hessian(hessian)
    vol = volume_density(Psi_u)
    return np.log(vol / problem.vol0) - np.log(integrate(vol) / problem.V)


def normalize_f(f_raw, problem: Problem) -> np.ndarray:
    """Shift ``f_raw`` by a constant so that ``int e^f omega_0^n = V``."""
    f_raw = np.asarray(f_raw, dtype=float)
    return f_raw - data_offset(f_raw, problem)
