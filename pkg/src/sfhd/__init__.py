"""Fractional spherically restricted hyperbolic diffusion random fields.

Kernel evaluation, angular power spectra, covariances and seeded Gaussian
simulation on the unit sphere.
"""

from ._kernels import BACKEND
from .errors import (
    ContourFailure,
    NonConvergenceError,
    NonConvergent,
    QuadratureFailure,
    SFHDError,
    SymmetryViolation,
    TruncationOverflow,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ContourFailure",
    "NonConvergenceError",
    "NonConvergent",
    "QuadratureFailure",
    "SFHDError",
    "SymmetryViolation",
    "TruncationOverflow",
]
