"""
Built-in scalar expressions for data, potentials and manufactured solutions.

Each closed-form entry also knows its real second partials, so the complex
Hessian can be formed exactly instead of spectrally.
"""
from __future__ import annotations

import numpy as np

from .torus import GridSpec, trig_field

TWO_PI = 2.0 * np.pi


def _cos_x1(grid):
    x1 = grid.x(1)
    u = np.cos(TWO_PI * x1)
    return u, {(0, 0): -TWO_PI ** 2 * u}


def _cos_y1(grid):
    y1 = grid.y(1)
    u = np.cos(TWO_PI * y1)
    return u, {(1, 1): -TWO_PI ** 2 * u}


def _cos_x1_cos_y2(grid):
    x1, y2 = grid.x(1), grid.y(2)
    u = np.cos(TWO_PI * x1) * np.cos(TWO_PI * y2)
    return u, {
        (0, 0): -TWO_PI ** 2 * u,
        (3, 3): -TWO_PI ** 2 * u,
        (0, 3): TWO_PI ** 2 * np.sin(TWO_PI * x1) * np.sin(TWO_PI * y2),
    }


def _exp_cos_x1(grid):
    x1 = grid.x(1)
    u = np.exp(np.cos(TWO_PI * x1))
    return u, {(0, 0): TWO_PI ** 2 * u * (np.sin(TWO_PI * x1) ** 2 - np.cos(TWO_PI * x1))}


def _exp_cos_x1_sin_y2(grid):
    x1, y2 = grid.x(1), grid.y(2)
    u = np.exp(np.cos(TWO_PI * x1) + np.sin(TWO_PI * y2))
    return u, {
        (0, 0): TWO_PI ** 2 * u * (np.sin(TWO_PI * x1) ** 2 - np.cos(TWO_PI * x1)),
        (3, 3): TWO_PI ** 2 * u * (np.cos(TWO_PI * y2) ** 2 - np.sin(TWO_PI * y2)),
        (0, 3): -TWO_PI ** 2 * u * np.sin(TWO_PI * x1) * np.cos(TWO_PI * y2),
    }


CLOSED_FORM = {
    "cos_x1": _cos_x1,
    "cos_y1": _cos_y1,
    "cos_x1_cos_y2": _cos_x1_cos_y2,
    "exp_cos_x1": _exp_cos_x1,
    "exp_cos_x1_sin_y2": _exp_cos_x1_sin_y2,
}
NAMES = ("zero", "random", *CLOSED_FORM)


def hessian_from_partials(grid: GridSpec, partials: dict) -> np.ndarray:
    """Complex Hessian from real second partials keyed by axis pairs ``(a, b)``, ``a <= b``."""
    zero = np.zeros(grid.shape)

    def d(a, b):
        return partials.get((min(a, b), max(a, b)), zero)

    n = grid.n
    H = np.zeros(grid.shape + (n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            H[..., i, j] = 0.25 * (d(2 * i, 2 * j) + d(2 * i + 1, 2 * j + 1)) + 0.25j * (
                d(2 * i, 2 * j + 1) - d(2 * j, 2 * i + 1)
            )
    return H


def expression(name: str, grid: GridSpec, amplitude: float = 1.0, seed: int = 0, kmax: int = 2) -> np.ndarray:
    """Sample ``amplitude * name`` on ``grid``; ``random`` is band-limited with sup-norm ``amplitude``."""
    if name == "zero":
        return np.zeros(grid.shape)
    if name == "random":
        return trig_field(grid, np.random.default_rng(seed), kmax=kmax, amplitude=amplitude)
    if name not in CLOSED_FORM:
        raise KeyError(f"unknown expression {name!r}; choose from {', '.join(NAMES)}")
    return amplitude * CLOSED_FORM[name](grid)[0]


def exact_hessian(name: str, grid: GridSpec, amplitude: float = 1.0):
    """Closed-form complex Hessian of ``amplitude * name``, or ``None`` if unavailable."""
    if name == "zero":
        return np.zeros(grid.shape + (grid.n, grid.n), dtype=complex)
    if name not in CLOSED_FORM:
        return None
    _, partials = CLOSED_FORM[name](grid)
    return amplitude * hessian_from_partials(grid, partials)
