"""Spectral solver for the form-type Calabi-Yau equation on flat complex tori."""

__version__ = "0.1.0"

from .assembly import Problem, SolveResult, manufacture_f, normalize_f
from .continuation import continuity_solve
from .forms import PositivityError
from .torus import GridSpec

__all__ = [
    "GridSpec",
    "PositivityError",
    "Problem",
    "SolveResult",
    "__version__",
    "continuity_solve",
    "manufacture_f",
    "normalize_f",
]
