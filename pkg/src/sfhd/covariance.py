"""Space-time covariance ``R(cos gamma, t, t')`` of the field on the unit sphere.

Two routes: the direct spectral sum (or integral) with the chordal sinc kernel
``sin(2 mu sin(gamma/2)) / (2 mu sin(gamma/2))``, and Legendre reconstruction
``(1/4pi) sum_l (2l+1) C_l P_l(cos gamma)`` from the angular spectrum.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kernel import KernelConfig, ModelParams, h_values
from .spectra import (
    AngularSpectrum,
    MaternSpectrum,
    _octave_integrate,
    _panel_width,
    matern_density,
)
from .specfun import legendre_p_all

__all__ = [
    "CovarianceRequest",
    "covariance_direct",
    "covariance_from_spectrum",
    "covariance_grid",
    "write_covariance_csv",
]


@dataclass(frozen=True)
class CovarianceRequest:
    gamma: float
    t: float
    t_prime: float

    def __post_init__(self):
        if not 0.0 <= self.gamma <= math.pi:
            raise ValueError(f"gamma must lie in [0, pi], got {self.gamma!r}")
        if not (self.t >= 0 and self.t_prime >= 0):
            raise ValueError("t and t_prime must be >= 0")


def _sinc_kernel(mus, gamma):
    half = math.sin(gamma / 2.0)
    if half == 0.0:
        return np.ones_like(mus)
    arg = 2.0 * mus * half
    return np.sin(arg) / arg


def _direct_discrete(measure, gamma, h_t, h_tp):
    return math.fsum(_sinc_kernel(measure.mus, gamma) * h_t * h_tp * measure.sigma2s)


def _direct_matern(spec, params, cfg, req):
    def integrand(mu):
        h_t = h_values(params, cfg, mu, req.t)
        h_tp = h_t if req.t_prime == req.t else h_values(params, cfg, mu, req.t_prime)
        with np.errstate(invalid="ignore", divide="ignore"):
            k = np.where(mu > 0, _sinc_kernel(np.where(mu > 0, mu, 1.0), req.gamma), 1.0)
        return 4.0 * math.pi * mu**2 * matern_density(spec, mu) * k * h_t * h_tp

    total, _, _, _ = _octave_integrate(
        integrand, max(8.0, 4.0 * spec.a), _panel_width(params, req.t, req.t_prime), "covariance", spec.a
    )
    return float(total)


def covariance_direct(measure, params: ModelParams, cfg: KernelConfig, req: CovarianceRequest) -> float:
    """``sum_i sinc(2 mu_i sin(gamma/2)) H(mu_i, t) H(mu_i, t') sigma2_i`` (sinc = 1 at gamma = 0).

    A Matern measure uses the same kernel against ``4 pi mu^2 g(mu) d mu``.
    """
    if isinstance(measure, MaternSpectrum):
        return _direct_matern(measure, params, cfg, req)
    h_t = h_values(params, cfg, measure.mus, req.t)
    h_tp = h_t if req.t_prime == req.t else h_values(params, cfg, measure.mus, req.t_prime)
    return _direct_discrete(measure, req.gamma, h_t, h_tp)


def covariance_from_spectrum(spectrum: AngularSpectrum, gamma) -> float | np.ndarray:
    """``(1/4pi) sum_{l <= l_max} (2l+1) C_l P_l(cos gamma)``; vectorised over ``gamma``."""
    p = legendre_p_all(spectrum.l_max, np.cos(np.asarray(gamma, dtype=np.float64)))
    ls = np.arange(spectrum.l_max + 1)
    out = p @ ((2 * ls + 1) * spectrum.values) / (4.0 * math.pi)
    return float(out) if np.ndim(gamma) == 0 else out


def covariance_grid(
    measure, params: ModelParams, cfg: KernelConfig, gammas: Sequence[float], times: Sequence[float]
) -> np.ndarray:
    """Matrix ``R[i, j] = R(cos gammas[i], times[j], times[j])``.

    Kernel values are computed once per time and shared across all gammas.
    """
    gammas = [float(g) for g in gammas]
    times = [float(t) for t in times]
    if not gammas or not times:
        raise ValueError("gammas and times must be nonempty")
    out = np.empty((len(gammas), len(times)))
    if isinstance(measure, MaternSpectrum):
        for j, t in enumerate(times):
            for i, g in enumerate(gammas):
                out[i, j] = covariance_direct(measure, params, cfg, CovarianceRequest(g, t, t))
        return out
    cache: dict[float, np.ndarray] = {}
    for j, t in enumerate(times):
        if t not in cache:
            cache[t] = h_values(params, cfg, measure.mus, t)
        h = cache[t]
        for i, g in enumerate(gammas):
            CovarianceRequest(g, t, t)
            out[i, j] = _direct_discrete(measure, g, h, h)
    return out


def write_covariance_csv(path, gammas, times, matrix, fmt=None) -> None:
    """Rows ``gamma_rad,t,t_prime,R`` with ``t_prime = t``, gamma-major."""
    from .config import format_float

    fmt = fmt or format_float
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["gamma_rad", "t", "t_prime", "R"])
        for i, g in enumerate(gammas):
            for j, t in enumerate(times):
                w.writerow([fmt(float(g)), fmt(float(t)), fmt(float(t)), fmt(float(matrix[i, j]))])

