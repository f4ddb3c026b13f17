"""
Periodic grids on the flat torus ``C^n / Z^{2n}`` with spectral derivatives.

Fields are plain numpy arrays of shape ``(N,) * 2n`` with axes ordered
``(x1, y1, x2, y2, ..., xn, yn)``; sample ``j`` along an axis sits at ``j / N``.
Functions that differentiate act on the trailing ``2n`` axes so that a batch of
fields can be stacked in front.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

LAYOUT = "row-major-x1y1..."


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid with ``N`` samples per real axis on the unit lattice.

    Parameters
    ----------
    n : int
        Complex dimension, 2..4.
    N : int
        Samples per real axis; even, 4..64.
    """

    n: int
    N: int

    def __post_init__(self):
        if not 2 <= self.n <= 4:
            raise ValueError(f"complex dimension n={self.n} outside 2..4")
        if self.N % 2 or not 4 <= self.N <= 64:
            raise ValueError(f"N={self.N} must be even and within 4..64")
        if self.N ** (2 * self.n) > np.iinfo(np.int64).max:
            raise ValueError("grid too large")

    @property
    def ndim(self) -> int:
        return 2 * self.n

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.ndim

    @property
    def size(self) -> int:
        return self.N ** self.ndim

    @classmethod
    def of(cls, field) -> "GridSpec":
        """Infer the grid from a field's trailing axes (``n`` from the number of axes)."""
        field = np.asarray(field)
        return cls(field.ndim // 2, field.shape[-1])

    def coords(self):
        """Coordinate arrays ``[x1, y1, ..., xn, yn]`` broadcast to the grid shape."""
        axis = np.arange(self.N) / self.N
        return np.meshgrid(*([axis] * self.ndim), indexing="ij")

    def x(self, k: int) -> np.ndarray:
        """The real coordinate ``x^k`` (1-based) sampled on the grid."""
        return self.coords()[2 * (k - 1)]

    def y(self, k: int) -> np.ndarray:
        return self.coords()[2 * (k - 1) + 1]

    @cached_property
    def _wavenumbers(self):
        full = np.fft.fftfreq(self.N, 1.0 / self.N)
        half = np.fft.rfftfreq(self.N, 1.0 / self.N)
        return full, half

    def symbols(self, odd: bool):
        """Per-axis multipliers ``2 pi i k`` broadcastable over the rfft layout.

        With ``odd=True`` the Nyquist entry is zeroed (first derivatives); second
        derivatives along a single axis use ``-(2 pi k)^2`` including Nyquist.
        """
        full, half = self._wavenumbers
        out = []
        for a in range(self.ndim):
            k = (half if a == self.ndim - 1 else full).copy()
            if odd:
                k[np.abs(k) == self.N // 2] = 0.0
            shape = [1] * self.ndim
            shape[a] = k.size
            out.append((2j * np.pi * k).reshape(shape))
        return out

    @cached_property
    def laplacian_symbol(self) -> np.ndarray:
        """Fourier symbol of ``sum_i u_{i ibar} = (1/4) * (real Laplacian)``."""
        second = [s * s for s in self.symbols(odd=False)]
        return 0.25 * sum(second).real

    def _axes(self):
        return tuple(range(-self.ndim, 0))

    def rfft(self, u):
        return np.fft.rfftn(u, axes=self._axes())

    def irfft(self, uh):
        return np.fft.irfftn(uh, s=self.shape, axes=self._axes())


def _check_field(grid: GridSpec, u):
    u = np.asarray(u)
    if u.shape[-grid.ndim:] != grid.shape:
        raise ValueError(f"field shape {u.shape} does not match grid {grid.shape}")
    return u


def real_hessian(u, grid: GridSpec | None = None) -> dict:
    """All second partials of ``u`` keyed by axis pairs ``(a, b)``, ``a <= b``."""
    u = np.asarray(u, dtype=float)
    grid = grid or GridSpec.of(u)
    _check_field(grid, u)
    uh = grid.rfft(u)
    odd = grid.symbols(odd=True)
    even = grid.symbols(odd=False)
    out = {}
    for a in range(grid.ndim):
        out[(a, a)] = grid.irfft(uh * (even[a] * even[a]))
        for b in range(a + 1, grid.ndim):
            out[(a, b)] = grid.irfft(uh * (odd[a] * odd[b]))
    return out


def complex_hessian(u, grid: GridSpec | None = None) -> np.ndarray:
    """Complex Hessian ``u_{i jbar}`` of a real field at every grid point.

    ``u_{i jbar} = (u_{xi xj} + u_{yi yj}) / 4 + i (u_{xi yj} - u_{xj yi}) / 4``
    with exact derivatives of the trigonometric interpolant.

    Returns
    -------
    H : ndarray, shape ``u.shape + (n, n)``, complex, Hermitian at every point.
    """
    u = np.asarray(u, dtype=float)
    grid = grid or GridSpec.of(u)
    D = real_hessian(u, grid)

    def d(a, b):
        return D[(a, b)] if a <= b else D[(b, a)]

    n = grid.n
    H = np.empty(u.shape + (n, n), dtype=complex)
    for i in range(n):
        xi, yi = 2 * i, 2 * i + 1
        for j in range(i, n):
            xj, yj = 2 * j, 2 * j + 1
            re = 0.25 * (d(xi, xj) + d(yi, yj))
            im = 0.25 * (d(xi, yj) - d(xj, yi))
            H[..., i, j] = re + 1j * im
            H[..., j, i] = re - 1j * im
    return H


def laplacian_eta(u, grid: GridSpec | None = None) -> np.ndarray:
    """``Delta_eta u = sum_i u_{i ibar}`` for the flat metric."""
    u = np.asarray(u, dtype=float)
    grid = grid or GridSpec.of(u)
    _check_field(grid, u)
    return grid.irfft(grid.rfft(u) * grid.laplacian_symbol)


def integrate(phi, density=None) -> float:
    """Integral over the torus (cell volume 1) by the trapezoidal rule."""
    phi = np.asarray(phi)
    if density is None:
        return float(np.mean(phi))
    density = np.asarray(density)
    if phi.shape != density.shape:
        raise ValueError(f"grid mismatch: {phi.shape} vs {density.shape}")
    return float(np.mean(phi * density))


def mean_zero(u, weight=None) -> np.ndarray:
    """Subtract the ``weight``-average so that ``integrate(result, weight) == 0``."""
    u = np.asarray(u, dtype=float)
    if weight is None:
        return u - np.mean(u)
    return u - integrate(u, weight) / integrate(np.ones_like(u), weight)


def invert_laplacian(r, grid: GridSpec | None = None) -> np.ndarray:
    """Mean-zero ``v`` with ``laplacian_eta(v) = r - mean(r)``."""
    r = np.asarray(r, dtype=float)
    grid = grid or GridSpec.of(r)
    sym = grid.laplacian_symbol.copy()
    sym.flat[0] = 1.0
    vh = grid.rfft(r) / sym
    vh[(..., ) + (0,) * grid.ndim] = 0.0
    return grid.irfft(vh)


def trig_field(grid: GridSpec, rng: np.random.Generator, kmax: int = 2, amplitude: float = 1.0) -> np.ndarray:
    """Random real band-limited field with modes ``|k_a| <= kmax``, zero mean, sup-norm ``amplitude``."""
    kmax = min(kmax, grid.N // 2 - 1)
    coeffs = np.zeros(grid.shape, dtype=complex)
    ks = [k % grid.N for k in range(-kmax, kmax + 1)]
    idx = np.ix_(*([ks] * grid.ndim))
    shape = (2 * kmax + 1,) * grid.ndim
    coeffs[idx] = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    u = np.fft.ifftn(coeffs).real
    u -= u.mean()
    peak = np.abs(u).max()
    return u * (amplitude / peak) if peak > 0 else u


# -- field files -------------------------------------------------------------


def write_field(path, values, kind: str | None = None) -> Path:
    """Write ``values`` as ``<path>.bin`` (little-endian float64) plus ``<path>.json`` header.

    Complex fields are stored as interleaved (real, imag) pairs.
    """
    values = np.asarray(values)
    grid = GridSpec.of(values)
    if kind is None:
        kind = "complex" if np.iscomplexobj(values) else "real"
    if kind not in ("real", "complex"):
        raise ValueError(f"unknown field kind {kind!r}")
    base = Path(path)
    base = base.with_suffix("") if base.suffix in (".bin", ".json") else base
    header = {"n": grid.n, "N": grid.N, "kind": kind, "layout": LAYOUT}
    base.with_suffix(".json").write_text(json.dumps(header, sort_keys=True) + "\n")
    if kind == "real":
        data = np.ascontiguousarray(values.real, dtype="<f8")
    else:
        data = np.ascontiguousarray(values, dtype="<c16")
    base.with_suffix(".bin").write_bytes(data.tobytes(order="C"))
    return base


def read_field(path) -> np.ndarray:
    """Read a field written by :func:`write_field`."""
    base = Path(path)
    base = base.with_suffix("") if base.suffix in (".bin", ".json") else base
    header = json.loads(base.with_suffix(".json").read_text())
    missing = {"n", "N", "kind", "layout"} - set(header)
    if missing:
        raise ValueError(f"field header missing keys {sorted(missing)}")
    if header["layout"] != LAYOUT:
        raise ValueError(f"unsupported layout {header['layout']!r}")
    grid = GridSpec(int(header["n"]), int(header["N"]))
    dtype = {"real": "<f8", "complex": "<c16"}[header["kind"]]
    raw = np.frombuffer(base.with_suffix(".bin").read_bytes(), dtype=dtype)
    if raw.size != grid.size:
        raise ValueError(f"expected {grid.size} values, found {raw.size}")
    return raw.reshape(grid.shape).copy()
