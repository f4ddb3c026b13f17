"""
Pointwise algebra of (1,1)-forms and (n-1,n-1)-forms.

A positive (1,1)-form ``omega = (i/2) sum g_{ij} dz^i ^ dzbar^j`` is stored as its
Hermitian coefficient matrix ``g``.  An (n-1,n-1)-form ``Theta`` is stored as the
matrix ``Theta_{pq}`` of the coefficient convention

    Theta = (i/2)^(n-1) (n-1)! sum_{p,q} s(p,q) Theta_{pq} dz^1 ^ dzbar^1 ... (dz^p and dzbar^q omitted) ... ^ dz^n ^ dzbar^n

so that ``dz^p ^ dzbar^q ^ s(p,q)(...)`` is the ordered volume monomial.  With
this convention ``(omega^(n-1))_{pq} = det(g) * inv(g).T``.

Every function accepts a single ``(n, n)`` matrix or a stacked array of shape
``(..., n, n)`` and acts on the last two axes.  The reference metric is the flat
identity, so :func:`contract_hessian` is valid at every point.
"""
from __future__ import annotations

import numpy as np

MAX_DIM = 4


class PositivityError(ValueError):
    """Raised when a matrix field that must be positive definite is not.

    Attributes
    ----------
    index : tuple
        Multi-index (into the leading axes) of the worst point, or ``()``.
    eigenvalue : float
        Smallest eigenvalue found at that point.
    """

    def __init__(self, message, index=(), eigenvalue=float("nan")):
        super().__init__(message)
        self.index = tuple(int(i) for i in index)
        self.eigenvalue = float(eigenvalue)


def _check_square(M):
    M = np.asarray(M)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise ValueError(f"expected (..., n, n) array, got shape {M.shape}")
    n = M.shape[-1]
    if not 2 <= n <= MAX_DIM:
        raise ValueError(f"dimension n={n} outside supported range 2..{MAX_DIM}")
    return M, n


def sign_pq(p: int, q: int, n: int | None = None) -> int:
    """Sign ``s(p, q)`` of the (n-1,n-1) index convention (1-based indices).

    Returns -1 if ``p > q`` and +1 otherwise.
    """
    if p < 1 or q < 1 or (n is not None and (p > n or q > n)):
        raise ValueError(f"indices ({p}, {q}) out of range 1..{n}")
    return -1 if p > q else 1


def min_eigenvalue(M) -> np.ndarray:
    """Smallest eigenvalue of a Hermitian matrix (or of each matrix in a stack)."""
    M, _ = _check_square(M)
    return np.linalg.eigvalsh(M)[..., 0]


def require_positive(M, what="matrix"):
    """Raise :class:`PositivityError` unless every matrix in ``M`` is positive definite."""
    lam = min_eigenvalue(M)
    if np.all(lam > 0):
        return lam
    flat = int(np.argmin(lam))
    idx = np.unravel_index(flat, lam.shape) if lam.ndim else ()
    worst = lam[idx] if lam.ndim else lam
    raise PositivityError(
        f"{what} not positive definite: min eigenvalue {float(worst):.3e} at {tuple(int(i) for i in idx)}",
        index=idx,
        eigenvalue=worst,
    )


def power_n1(g) -> np.ndarray:
    """Coefficients of ``omega^(n-1)`` for ``omega`` with coefficient matrix ``g``.

    Parameters
    ----------
    g : array_like, shape (..., n, n)
        Hermitian positive definite.

    Returns
    -------
    Psi : ndarray, shape (..., n, n)
        ``det(g) * inv(g).T``, Hermitian positive definite.
    """
    g, _ = _check_square(g)
    require_positive(g, "g")
    det = np.linalg.det(g).real
    return det[..., None, None] * np.swapaxes(np.linalg.inv(g), -1, -2)


def root_n1(Psi) -> np.ndarray:
    """Inverse of :func:`power_n1`: the positive ``g`` with ``power_n1(g) = Psi``.

    Uses ``det(Psi) = det(g)^(n-1)`` to recover ``det(g)``, then inverts
    ``inv(g).T = Psi / det(g)``.
    """
    Psi, n = _check_square(Psi)
    require_positive(Psi, "Psi")
    d = np.linalg.det(Psi).real ** (1.0 / (n - 1))
    return d[..., None, None] * np.swapaxes(np.linalg.inv(Psi), -1, -2)


def det_n1(Psi) -> np.ndarray:
    """Determinant of the coefficient matrix (real part)."""
    Psi, _ = _check_square(Psi)
    return np.linalg.det(Psi).real


def contract_hessian(H) -> np.ndarray:
    """Coefficients of ``(i/2) ddbar v ^ eta^(n-2)`` given the complex Hessian ``H = v_{ij}``.

    For flat ``eta = I``::

        Theta_{ii} = sum_{p != i} H_{pp} / (n-1)
        Theta_{ij} = -H_{ji} / (n-1)          (i != j)

    i.e. ``Theta = (tr(H) I - H.T) / (n-1)``.  The off-diagonal sign is the one
    forced by the coefficient convention (it matches the exterior-algebra
    expansion and the first-order expansion of :func:`power_n1` about ``I``).
    """
    H, n = _check_square(H)
    tr = np.trace(H, axis1=-2, axis2=-1)
    eye = np.eye(n)
    return (tr[..., None, None] * eye - np.swapaxes(H, -1, -2)) / (n - 1)


def trace_n1(Psi) -> np.ndarray:
    """``sum_i Psi_{ii}`` (real part)."""
    Psi, _ = _check_square(Psi)
    return np.trace(Psi, axis1=-2, axis2=-1).real


def pairing(g, Theta) -> np.ndarray:
    """Top-degree coefficient pairing ``sum_{p,q} g_{pq} Theta_{pq}``.

    If ``omega`` has matrix ``g`` and ``Theta`` is an (n-1,n-1)-form, then
    ``omega ^ Theta = (i/2)^n (n-1)! pairing(g, Theta) dV``.
    """
    return np.einsum("...pq,...pq->...", g, Theta).real
