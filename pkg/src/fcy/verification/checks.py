"""
Property checks and randomized audits.

Every check returns a :class:`CheckReport`; none of them raise on a failed
property, so negative controls can be run through the same code path.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import forms
from ..assembly import Problem, SolveResult, assemble_psi_u, residual, volume_density
from ..continuation import continuity_solve
from ..linearized import LinearState, apply_Lt, assemble_dense
from ..torus import integrate, mean_zero
from . import exterior


@dataclass
class CheckReport:
    name: str
    passed: bool
    value: float = float("nan")
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.value:.3e}"


def random_hermitian(rng, n, low=0.1, high=10.0):
    """Hermitian positive matrix with eigenvalues drawn uniformly from ``[low, high]``."""
    Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, _ = np.linalg.qr(Z)
    lam = rng.uniform(low, high, size=n)
    g = (Q * lam) @ Q.conj().T
    return 0.5 * (g + g.conj().T)


def random_psd(rng, dim, rank=None):
    rank = dim if rank is None else rank
    B = rng.normal(size=(dim, rank))
    return B @ B.T


def complex_from_real_hessian(W) -> np.ndarray:
    """``w_{ij} = (W[xi,xj] + W[yi,yj]) / 4 + i (W[xi,yj] - W[xj,yi]) / 4``.

    ``W`` is indexed in the order ``(x1, y1, ..., xn, yn)``.
    """
    W = np.asarray(W, dtype=float)
    X = W[0::2, 0::2]
    Y = W[1::2, 1::2]
    XY = W[0::2, 1::2]
    return 0.25 * (X + Y) + 0.25j * (XY - XY.T)


def check_det_inequality(W, project: bool = True, slack: float = 1e-10) -> CheckReport:
    """``det(W) <= 8^n |det w|^2`` for a positive semidefinite real Hessian ``W``.

    With ``project=True`` the input is symmetrized and its negative eigenvalues
    clipped first.  ``value`` is the ratio ``det(W) / (8^n |det w|^2)``.
    """
    W = np.asarray(W, dtype=float)
    n = W.shape[0] // 2
    if project:
        W = 0.5 * (W + W.T)
        lam, Q = np.linalg.eigh(W)
        W = (Q * np.clip(lam, 0.0, None)) @ Q.T
    lhs = float(np.linalg.det(W))
    rhs = float(8 ** n * abs(np.linalg.det(complex_from_real_hessian(W))) ** 2)
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs <= 0 else float("inf"))
    return CheckReport("det(D2w) <= 8^n |det w|^2", lhs <= rhs + slack, ratio, dict(lhs=lhs, rhs=rhs))


def check_amgm(a, H, slack: float = 1e-12) -> CheckReport:
    """``det(a) det(-H) <= (-sum_{ij} a_{ij} H_{ij} / n)^n``.

    Meant for ``a`` positive and ``H`` negative semidefinite; the hypotheses
    are not enforced, so violating inputs report a failure.
    """
    a = np.asarray(a)
    H = np.asarray(H)
    n = a.shape[0]
    lhs = float((np.linalg.det(a) * np.linalg.det(-H)).real)
    rhs = float((-np.einsum("ij,ij->", a, H).real / n) ** n)
    return CheckReport("AM-GM determinant inequality", lhs <= rhs + slack * max(1.0, abs(rhs)),
                       rhs - lhs, dict(lhs=lhs, rhs=rhs))


def check_uniqueness(r1: SolveResult, r2: SolveResult, tol: float = 1e-8) -> CheckReport:
    """Sup-norm distance of two solutions after removing their means."""
    if r1.u.shape != r2.u.shape:
        raise ValueError(f"grid mismatch: {r1.u.shape} vs {r2.u.shape}")
    d = float(np.abs(mean_zero(r1.u) - mean_zero(r2.u)).max())
    return CheckReport("uniqueness up to a constant", d <= tol, d)


def check_max_principle(result: SolveResult, problem: Problem, slack: float = 1e-8) -> CheckReport:
    """``-sup f <= constant <= -inf f`` within ``slack``."""
    lo, hi = -float(problem.f.max()), -float(problem.f.min())
    c = result.constant
    ok = bool(np.isfinite(c) and lo - slack <= c <= hi + slack)
    margin = min(c - lo, hi - c) if np.isfinite(c) else float("-inf")
    return CheckReport("normalization constant bound", ok, margin, dict(constant=c, lower=lo, upper=hi))


def shifted_data(f, problem: Problem, base_phi) -> np.ndarray:
    """``f_phi`` with ``e^{f_phi} = e^f (omega_0^n / omega_phi^n) (int omega_phi^n / int omega_0^n)``."""
    vol_phi = volume_density(base_phi)
    return f + np.log(problem.vol0 / vol_phi) + np.log(integrate(vol_phi) / problem.V)


def check_base_change_equivalence(problem: Problem, psi, scale: float, tol: float = 1e-7) -> CheckReport:
    """Solve on the base form and on the form shifted by ``psi``; compare ``Psi_u``.

    The shifted problem has base ``I + scale * contract_hessian(complex_hessian(psi))``
    and data ``f_phi``; both final ``Psi_u`` fields describe the same metric.
    """
    shifted = Problem.potential(problem.grid, psi, scale, f=np.zeros(problem.grid.shape),
                                path_steps=problem.path_steps, newton_tol=problem.newton_tol,
                                max_newton=problem.max_newton)
    f_phi = shifted_data(problem.f, problem, shifted.base)
    shifted = shifted.with_data(f_phi)
    compat = abs(shifted.compatibility_defect())
    r0 = continuity_solve(problem)
    r1 = continuity_solve(shifted)
    detail = dict(compatibility=compat, converged=(r0.converged, r1.converged))
    if not (r0.converged and r1.converged):
        return CheckReport("base-change equivalence", False, float("inf"), detail)
    P0 = assemble_psi_u(problem.base, r0.u, problem.grid)
    P1 = assemble_psi_u(shifted.base, r1.u, shifted.grid)
    d = float(np.abs(P0 - P1).max())
    detail.update(constants=(r0.constant, r1.constant))
    return CheckReport("base-change equivalence", d <= tol and compat <= 1e-12, d, detail)


# -- randomized audits -------------------------------------------------------


def _jsonable(M):
    M = np.asarray(M)
    return dict(real=M.real.tolist(), imag=M.imag.tolist())


def audit_det_inequality(n: int, count: int = 1000, seed: int = 0) -> CheckReport:
    rng = np.random.default_rng(seed)
    worst, counterexample = 0.0, None
    for k in range(count):
        rank = 2 * n if k % 4 else int(rng.integers(0, 2 * n + 1))
        W = random_psd(rng, 2 * n, rank)
        rep = check_det_inequality(W)
        worst = max(worst, rep.value)
        if not rep.passed:
            counterexample = W.tolist()
            break
    return CheckReport(f"det inequality audit n={n}", counterexample is None, worst,
                       dict(count=count, counterexample=counterexample))


def audit_amgm(n: int, count: int = 1000, seed: int = 0) -> CheckReport:
    rng = np.random.default_rng(seed)
    worst, counterexample = -np.inf, None
    for _ in range(count):
        a = random_hermitian(rng, n)
        H = -random_hermitian(rng, n, 0.0, 5.0)
        rep = check_amgm(a, H)
        worst = max(worst, rep.detail["lhs"] / rep.detail["rhs"])
        if not rep.passed:
            counterexample = dict(a=_jsonable(a), H=_jsonable(H))
            break
    return CheckReport(f"AM-GM audit n={n}", counterexample is None, worst,
                       dict(count=count, counterexample=counterexample))


def audit_oracle(n: int, count: int = 100, seed: int = 0, tol: float = 1e-13) -> CheckReport:
    """Entrywise agreement of ``power_n1``/``contract_hessian`` with literal expansion."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        g = random_hermitian(rng, n)
        H = random_hermitian(rng, n, -5.0, 5.0)
        worst = max(
            worst,
            float(np.abs(forms.power_n1(g) - exterior.oracle_power_n1(g)).max()),
            float(np.abs(forms.contract_hessian(H) - exterior.oracle_contract_hessian(H)).max()),
        )
    return CheckReport(f"oracle agreement n={n}", worst <= tol, worst, dict(count=count))


def audit_identities(n: int, count: int = 200, seed: int = 0, tol: float = 1e-12) -> CheckReport:
    """Round trip ``root_n1(power_n1(g)) = g`` and ``det(power_n1(g)) = det(g)^(n-1)``."""
    rng = np.random.default_rng(seed)
    g = np.stack([random_hermitian(rng, n) for _ in range(count)])
    Psi = forms.power_n1(g)
    back = forms.root_n1(Psi)
    rt = float((np.abs(back - g).max(axis=(-1, -2)) / np.abs(g).max(axis=(-1, -2))).max())
    dg = np.linalg.det(g).real
    dl = float((np.abs(forms.det_n1(Psi) - dg ** (n - 1)) / dg ** (n - 1)).max())
    worst = max(rt, dl)
    return CheckReport(f"algebraic identities n={n}", worst <= tol, worst,
                       dict(roundtrip=rt, determinant=dl, count=count))


# -- linearization -----------------------------------------------------------


def check_linearization(problem: Problem, u, v, t: float,
                        eps=(1e-3, 1e-4, 1e-5), window=(8.0, 12.0)) -> CheckReport:
    """Finite-difference check of the linearized operator.

    The one-sided difference quotient of the residual has error ``O(eps)``;
    consecutive error ratios must fall inside ``window``.  ``value`` is the
    ratio farthest from 10.
    """
    state = LinearState.at(u, problem)
    Lv = apply_Lt(v, state)
    R0 = residual(u, t, problem)
    errors = [float(np.abs((residual(u + e * v, t, problem) - R0) / e - Lv).max()) for e in eps]
    ratios = [errors[k] / errors[k + 1] for k in range(len(errors) - 1)]
    ok = all(window[0] <= r <= window[1] for r in ratios)
    worst = max(ratios, key=lambda r: abs(np.log(r / 10.0)))
    return CheckReport("linearization finite differences", ok, worst, dict(errors=errors, ratios=ratios))


def check_kernel_range(state: LinearState, vs, tol: float = 1e-11) -> CheckReport:
    """``L(1) = 0`` and ``int L(v) omega_u^n = 0`` relative to ``sup|v|``."""
    kernel = float(np.abs(apply_Lt(np.ones(state.grid.shape), state)).max())
    worst = 0.0
    for v in vs:
        Lv = apply_Lt(v, state)
        worst = max(worst, abs(integrate(Lv, state.vol_u)) / float(np.abs(v).max()))
    ok = kernel <= 1e-12 * max(1.0, float(np.abs(state.g_u).max())) and worst <= tol
    return CheckReport("kernel and range", ok, max(kernel, worst), dict(kernel=kernel, range=worst))


def check_dense_spectrum(state: LinearState, zero_tol: float = 1e-8, gap: float = 1e-3) -> CheckReport:
    """Exactly one singular value below ``zero_tol``; all others above ``gap``."""
    s = np.linalg.svd(assemble_dense(state), compute_uv=False)
    small = int(np.sum(s < zero_tol))
    ok = small == 1 and bool(np.all(s[:-1] > gap))
    return CheckReport("dense spectrum", ok, float(s[-2]),
                       dict(smallest=float(s[-1]), second_smallest=float(s[-2]), near_zero=small))
