"""
Literal exterior algebra over ``C^n`` in the generators ``dz^k`` and ``dzbar^k``.

A monomial is stored in canonical order ``dz^I ^ dzbar^J`` with ``I`` and ``J``
strictly increasing (0-based) index tuples.  Signs come only from permutation
parity, so nothing here depends on the coefficient shortcuts in
:mod:`fcy.forms`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..forms import sign_pq


def _sort_parity(idx):
    """Sorted tuple and permutation sign, or ``(None, 0)`` on a repeated index."""
    if len(set(idx)) != len(idx):
        return None, 0
    inversions = sum(1 for a in range(len(idx)) for b in range(a + 1, len(idx)) if idx[a] > idx[b])
    return tuple(sorted(idx)), (-1 if inversions % 2 else 1)


@dataclass
class MultiIndexForm:
    """Sparse (p,q)-form: ``{(I, J): coefficient}`` meaning ``sum c dz^I ^ dzbar^J``."""

    n: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (I, J), c in self.terms.items():
            I, sI = _sort_parity(tuple(I))
            J, sJ = _sort_parity(tuple(J))
            if sI == 0 or sJ == 0 or c == 0:
                continue
            if any(not 0 <= k < self.n for k in I + J):
                raise ValueError(f"index out of range for n={self.n}: {(I, J)}")
            key = (I, J)
            clean[key] = clean.get(key, 0) + sI * sJ * complex(c)
        self.terms = {k: v for k, v in clean.items() if v != 0}

    @property
    def degrees(self):
        return {(len(I), len(J)) for I, J in self.terms}

    def coefficient(self, I, J) -> complex:
        return self.terms.get((tuple(I), tuple(J)), 0j)

    def __add__(self, other):
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return MultiIndexForm(self.n, out)

    def __rmul__(self, scalar):
        return MultiIndexForm(self.n, {k: scalar * v for k, v in self.terms.items()})

    def __xor__(self, other):
        return wedge_oracle(self, other)


def unit(n) -> MultiIndexForm:
    return MultiIndexForm(n, {((), ()): 1.0})


def dz(n, k) -> MultiIndexForm:
    return MultiIndexForm(n, {((k,), ()): 1.0})


def dzbar(n, k) -> MultiIndexForm:
    return MultiIndexForm(n, {((), (k,)): 1.0})


def wedge_oracle(a: MultiIndexForm, b: MultiIndexForm) -> MultiIndexForm:
    """Exterior product ``a ^ b``.

    ``dz^I1 dzbar^J1 ^ dz^I2 dzbar^J2``: moving ``dz^I2`` past ``dzbar^J1`` costs
    ``(-1)^(|J1||I2|)``; the merged index lists are then sorted with parity.
    """
    if a.n != b.n:
        raise ValueError("forms live on different dimensions")
    out = {}
    for (I1, J1), c1 in a.terms.items():
        for (I2, J2), c2 in b.terms.items():
            I, sI = _sort_parity(I1 + I2)
            if sI == 0:
                continue
            J, sJ = _sort_parity(J1 + J2)
            if sJ == 0:
                continue
            sign = sI * sJ * (-1 if (len(J1) * len(I2)) % 2 else 1)
            out[(I, J)] = out.get((I, J), 0) + sign * c1 * c2
    return MultiIndexForm(a.n, out)


def wedge_power(a: MultiIndexForm, k: int) -> MultiIndexForm:
    out = unit(a.n)
    for _ in range(k):
        out = wedge_oracle(out, a)
    return out


def form_from_hermitian(g) -> MultiIndexForm:
    """``(i/2) sum g_{ij} dz^i ^ dzbar^j``."""
    g = np.asarray(g)
    n = g.shape[0]
    return MultiIndexForm(
        n, {((i,), (j,)): 0.5j * g[i, j] for i in range(n) for j in range(n) if g[i, j] != 0}
    )


def _ordered_product(n, factors) -> MultiIndexForm:
    out = unit(n)
    for kind, k in factors:
        out = wedge_oracle(out, dz(n, k) if kind == "z" else dzbar(n, k))
    return out


def volume_monomial(n) -> MultiIndexForm:
    """``dz^1 ^ dzbar^1 ^ ... ^ dz^n ^ dzbar^n`` as a canonical form."""
    return _ordered_product(n, [(kind, k) for k in range(n) for kind in ("z", "zb")])


def n1_basis(n, p, q) -> MultiIndexForm:
    """``s(p,q) dz^1 ^ dzbar^1 ... (dz^p, dzbar^q omitted) ... dz^n ^ dzbar^n`` (0-based p, q)."""
    factors = [
        (kind, k)
        for k in range(n)
        for kind in ("z", "zb")
        if not (kind == "z" and k == p) and not (kind == "zb" and k == q)
    ]
    return sign_pq(p + 1, q + 1, n) * _ordered_product(n, factors)


def top_coefficient(form: MultiIndexForm) -> complex:
    """Coefficient of ``form`` against :func:`volume_monomial`."""
    n = form.n
    vol = volume_monomial(n)
    (key, sign), = vol.terms.items()
    return form.coefficient(*key) / sign


def n1_coefficients(form: MultiIndexForm) -> np.ndarray:
    """Read off ``Theta_{pq}`` from an (n-1,n-1)-form under the index convention."""
    n = form.n
    scale = (0.5j) ** (n - 1) * math.factorial(n - 1)
    out = np.zeros((n, n), dtype=complex)
    for p in range(n):
        for q in range(n):
            (key, sign), = n1_basis(n, p, q).terms.items()
            out[p, q] = form.coefficient(*key) / (sign * scale)
    return out


def oracle_power_n1(g) -> np.ndarray:
    """``omega^(n-1)`` coefficients by literal expansion."""
    g = np.asarray(g)
    n = g.shape[0]
    return n1_coefficients(wedge_power(form_from_hermitian(g), n - 1))


def oracle_contract_hessian(H) -> np.ndarray:
    """Coefficients of ``(i/2) ddbar v ^ eta^(n-2)`` for flat ``eta`` by literal expansion."""
    H = np.asarray(H)
    n = H.shape[0]
    eta = form_from_hermitian(np.eye(n))
    return n1_coefficients(wedge_oracle(form_from_hermitian(H), wedge_power(eta, n - 2)))


def oracle_volume_ratio(g) -> complex:
    """``omega^n`` against ``(i/2)^n n! dV``: equals ``det(g)``."""
    g = np.asarray(g)
    n = g.shape[0]
    top = top_coefficient(wedge_power(form_from_hermitian(g), n))
    return top / ((0.5j) ** n * math.factorial(n))


def oracle_lt_local(H, g) -> complex:
    """Local part of the linearized operator by literal expansion.

    ``n ((i/2) ddbar v ^ eta^(n-2) ^ omega) / ((n-1) omega^n)`` with ``v_{ij} = H``
    and ``omega`` given by ``g``.
    """
    H = np.asarray(H)
    g = np.asarray(g)
    n = H.shape[0]
    eta = form_from_hermitian(np.eye(n))
    omega = form_from_hermitian(g)
    num = top_coefficient(
        wedge_oracle(wedge_oracle(form_from_hermitian(H), wedge_power(eta, n - 2)), omega)
    )
    den = top_coefficient(wedge_power(omega, n))
    return n * num / ((n - 1) * den)
