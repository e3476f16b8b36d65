"""Seeded Gaussian realisations of the field on the unit sphere.

For a discrete measure with atoms ``(mu_i, sigma2_i)`` the Laplace-series
coefficients are

    a_lm(t) = sum_i 2 sqrt(pi) j_l(mu_i) H(mu_i, t) Z_lm(mu_i),

(``2 sqrt(pi) j_l(mu) = pi sqrt(2) J_{l+1/2}(mu) / sqrt(mu)``).  ``Z_l0`` is real
``N(0, sigma2_i)``; for ``m > 0`` ``Z_lm`` is complex with independent real and
imaginary parts of variance ``sigma2_i / 2``; ``m < 0`` follows from
``a_{l,-m} = (-1)^m conj(a_lm)`` so the synthesised field is real.

Each ``(seed, l, m)`` owns a Philox stream, and atom ``i`` reads words ``2i``
and ``2i+1`` of it, so variates do not depend on evaluation order, thread
count or time.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import SymmetryViolation
from .kernel import KernelConfig, ModelParams, h_values
from .spectra import DiscreteMeasure
from .specfun import spherical_bessel_table, ylm_theta_table

__all__ = [
    "SimulationConfig",
    "HarmonicCoefficients",
    "SphereGrid",
    "fejer_weights",
    "draw_variates",
    "sample_variates",
    "sample_coefficients",
    "coefficients_from_variates",
    "synthesize",
    "analyze",
    "simulate_evolution",
    "write_grid_csv",
    "write_coefficients_csv",
]

L_MAX_LIMIT = 200
_U64 = 2**64
_SYM_TOL = 1e-12
_IMAG_TOL = 1e-10


@dataclass(frozen=True)
class SimulationConfig:
    l_max: int = 100
    seed: int = 0
    times: tuple[float, ...] = (0.0,)
    grid_n_theta: int = 128
    grid_n_phi: int = 256

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        if not isinstance(self.l_max, int) or isinstance(self.l_max, bool) or not 0 <= self.l_max <= L_MAX_LIMIT:
            raise ValueError(f"simulation.l_max: must be an integer in [0, {L_MAX_LIMIT}] (got {self.l_max!r})")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < _U64:
            raise ValueError(f"simulation.seed: must be an unsigned 64-bit integer (got {self.seed!r})")
        if not self.times:
            raise ValueError("simulation.times: at least one time is required")
        for t in self.times:
            if not (math.isfinite(t) and t >= 0):
                raise ValueError(f"simulation.times: entries must be finite and >= 0 (got {t!r})")
        if not isinstance(self.grid_n_theta, int) or self.grid_n_theta < 2:
            raise ValueError(f"simulation.grid_n_theta: must be an integer >= 2 (got {self.grid_n_theta!r})")
        if not isinstance(self.grid_n_phi, int) or self.grid_n_phi < 4:
            raise ValueError(f"simulation.grid_n_phi: must be an integer >= 4 (got {self.grid_n_phi!r})")


@dataclass
class HarmonicCoefficients:
    """``coeffs[l, m + l_max] = a_lm`` for ``|m| <= l``; entries with ``|m| > l`` are zero."""

    t: float
    l_max: int
    coeffs: np.ndarray = field(repr=False)

    @classmethod
    def from_nonnegative(cls, t: float, a_pos: np.ndarray) -> "HarmonicCoefficients":
        """Build from ``a_pos[l, m]`` (``m >= 0``), filling ``m < 0`` by conjugate symmetry."""
        l_max = a_pos.shape[0] - 1
        full = np.zeros((l_max + 1, 2 * l_max + 1), dtype=np.complex128)
        a_pos = np.tril(a_pos)
        full[:, l_max:] = a_pos
        full[:, l_max] = a_pos[:, 0].real
        ms = np.arange(1, l_max + 1)
        full[:, l_max - ms] = ((-1.0) ** ms) * np.conj(a_pos[:, ms])
        return cls(float(t), l_max, full)

    def get(self, l: int, m: int) -> complex:
        if not 0 <= abs(m) <= l <= self.l_max:
            raise IndexError(f"need |m| <= l <= {self.l_max}, got l={l}, m={m}")
        return complex(self.coeffs[l, m + self.l_max])

    @property
    def positive(self) -> np.ndarray:
        """``a[l, m]`` for ``m >= 0`` as an ``(l_max+1, l_max+1)`` array."""
        return self.coeffs[:, self.l_max :].copy()

    @property
    def negative(self) -> np.ndarray:
        """``a[l, -m]`` for ``m >= 0`` as an ``(l_max+1, l_max+1)`` array."""
        return self.coeffs[:, self.l_max :: -1].copy()

    def symmetry_defect(self) -> float:
        """Largest ``|a_{l,-m} - (-1)^m conj(a_lm)|`` (and ``|Im a_l0|``) relative to ``max |a|``."""
        pos, neg = self.positive, self.negative
        sign = (-1.0) ** np.arange(self.l_max + 1)
        defect = np.abs(neg - sign * np.conj(pos))
        scale = float(np.max(np.abs(self.coeffs))) or 1.0
        return float(np.max(defect)) / scale


@dataclass
class SphereGrid:
    thetas: np.ndarray
    phis: np.ndarray
    values: np.ndarray

    def sample_variance(self) -> float:
        return float(np.var(self.values))


def grid_axes(n_theta: int, n_phi: int):
    """Cell-centre colatitudes ``(j+1/2) pi / n_theta`` and longitudes ``2 pi k / n_phi``."""
    return (np.arange(n_theta) + 0.5) * math.pi / n_theta, 2.0 * math.pi * np.arange(n_phi) / n_phi


def fejer_weights(n: int) -> np.ndarray:
    """Fejer's first rule on the colatitudes ``(j+1/2) pi / n``: ``sum_j w_j f(cos theta_j)``
    integrates ``f`` over ``[-1, 1]`` exactly for polynomials of degree < n."""
    theta = (np.arange(n) + 0.5) * math.pi / n
    k = np.arange(1, n // 2 + 1)
    s = np.cos(2.0 * np.outer(theta, k)) / (4.0 * k * k - 1.0)
    return (2.0 / n) * (1.0 - 2.0 * s.sum(axis=1))


# --------------------------------------------------------------------------
# random variates


def draw_variates(seed: int, l: int, m: int, n_atoms: int) -> np.ndarray:
    """Unit-variance variates for ``(seed, l, m)``: real for ``m = 0``, complex with
    variance 1/2 per component for ``m > 0``."""
    bg = np.random.Philox(key=int(seed), counter=[0, 0, int(m), int(l)])
    raw = bg.random_raw(2 * n_atoms)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    u1, u2 = u[0::2], u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    z0 = r * np.cos(2.0 * math.pi * u2)
    if m == 0:
        return z0.astype(np.complex128)
    z1 = r * np.sin(2.0 * math.pi * u2)
    return (z0 + 1j * z1) / math.sqrt(2.0)


def sample_variates(seed: int, l_max: int, n_atoms: int, n_threads: int = 1) -> np.ndarray:
    """``Z[l, m, i]`` (unit variance) for ``0 <= m <= l <= l_max``; zero above the diagonal."""
    out = np.zeros((l_max + 1, l_max + 1, n_atoms), dtype=np.complex128)

    def fill(l):
        for m in range(l + 1):
            out[l, m] = draw_variates(seed, l, m, n_atoms)

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            list(pool.map(fill, range(l_max + 1)))
    else:
        for l in range(l_max + 1):
            fill(l)
    return out


# --------------------------------------------------------------------------
# coefficients and synthesis


def coefficients_from_variates(
    measure: DiscreteMeasure, params: ModelParams, cfg: KernelConfig, variates: np.ndarray, t: float
) -> HarmonicCoefficients:
    """``a_lm(t) = sum_i 2 sqrt(pi) j_l(mu_i) H(mu_i, t) sqrt(sigma2_i) Z[l, m, i]``."""
    l_max = variates.shape[0] - 1
    mus = measure.mus
    h = h_values(params, cfg, mus, t)
    jl = spherical_bessel_table(l_max, mus)
    w = 2.0 * math.sqrt(math.pi) * jl.T * (h * np.sqrt(measure.sigma2s))
    a_pos = np.einsum("li,lmi->lm", w, variates)
    return HarmonicCoefficients.from_nonnegative(t, a_pos)


def sample_coefficients(
    measure: DiscreteMeasure,
    params: ModelParams,
    cfg: KernelConfig,
    sim: SimulationConfig,
    t: float,
    n_threads: int = 1,
) -> HarmonicCoefficients:
    variates = sample_variates(sim.seed, sim.l_max, len(measure.atoms), n_threads)
    return coefficients_from_variates(measure, params, cfg, variates, t)


def synthesize(coeffs: HarmonicCoefficients, sim: SimulationConfig, n_threads: int = 1) -> SphereGrid:
    """``T(theta_j, phi_k) = sum_{l, m} a_lm Y_lm(theta_j, phi_k)`` on the equal-angle grid.

    Raises
    ------
    SymmetryViolation
        If the coefficients are not conjugate-symmetric to 1e-12, or the
        synthesised field keeps an imaginary part above 1e-10 of its real part.
    """
    defect = coeffs.symmetry_defect()
    if defect > _SYM_TOL:
        raise SymmetryViolation(f"coefficients break conjugate symmetry (relative defect {defect:.3g})")
    thetas, phis = grid_axes(sim.grid_n_theta, sim.grid_n_phi)
    a_pos = np.ascontiguousarray(coeffs.positive)
    a_neg = np.ascontiguousarray(coeffs.negative)
    gp, gn = _kernels.ylm_synth(a_pos, a_neg, thetas, n_threads)

    n_phi = sim.grid_n_phi
    l_max = coeffs.l_max
    spec = np.zeros((sim.grid_n_theta, n_phi), dtype=np.complex128)
    # gather e^{i m phi} and e^{-i m phi} terms by frequency modulo n_phi
    for m in range(l_max + 1):
        spec[:, m % n_phi] += gp[:, m]
        if m:
            spec[:, (-m) % n_phi] += ((-1.0) ** m) * gn[:, m]
    values = np.fft.ifft(spec, axis=1) * n_phi
    re = values.real
    scale = float(np.max(np.abs(re))) if re.size else 0.0
    resid = float(np.max(np.abs(values.imag))) if re.size else 0.0
    if resid > _IMAG_TOL * max(scale, np.finfo(float).tiny):
        raise SymmetryViolation(f"synthesised field has imaginary residue {resid:.3g} (max |Re| {scale:.3g})")
    return SphereGrid(thetas, phis, np.ascontiguousarray(re))


def analyze(grid: SphereGrid, l_max: int) -> HarmonicCoefficients:
    """Quadrature analysis ``a_lm = sum_jk w_j (2 pi / n_phi) T_jk conj(Y_lm(theta_j, phi_k))``
    with Fejer colatitude weights."""
    n_theta, n_phi = grid.values.shape
    w = fejer_weights(n_theta)
    f = np.fft.fft(grid.values, axis=1) * (2.0 * math.pi / n_phi)  # sum_k T e^{-i m phi_k}
    table = ylm_theta_table(l_max, grid.thetas)
    full = np.zeros((l_max + 1, 2 * l_max + 1), dtype=np.complex128)
    for m in range(l_max + 1):
        pos = (w[:, None] * table[:, :, m] * f[:, m % n_phi][:, None]).sum(axis=0)
        full[:, l_max + m] = pos
        if m:
            neg = (w[:, None] * table[:, :, m] * f[:, (-m) % n_phi][:, None]).sum(axis=0)
            full[:, l_max - m] = ((-1.0) ** m) * neg
    for l in range(l_max + 1):
        full[l, : l_max - l] = 0.0
        full[l, l_max + l + 1 :] = 0.0
    return HarmonicCoefficients(float("nan"), l_max, full)


def simulate_evolution(
    measure: DiscreteMeasure,
    params: ModelParams,
    cfg: KernelConfig,
    sim: SimulationConfig,
    n_threads: int = 1,
    return_coefficients: bool = False,
):
    """One grid per ``sim.times`` entry, all built from the same variates.

    Returns ``[(t, SphereGrid), ...]``, or ``[(t, SphereGrid, HarmonicCoefficients), ...]``
    when ``return_coefficients`` is set.
    """
    variates = sample_variates(sim.seed, sim.l_max, len(measure.atoms), n_threads)
    out = []
    for t in sim.times:
        coeffs = coefficients_from_variates(measure, params, cfg, variates, t)
        grid = synthesize(coeffs, sim, n_threads)
        out.append((t, grid, coeffs) if return_coefficients else (t, grid))
    return out


def write_grid_csv(path, grid: SphereGrid, fmt=None) -> None:
    from .config import format_float

    fmt = fmt or format_float
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta_rad", "phi_rad", "value"])
        for j, th in enumerate(grid.thetas):
            ths = fmt(float(th))
            row = grid.values[j]
            for k, ph in enumerate(grid.phis):
                w.writerow([ths, fmt(float(ph)), fmt(float(row[k]))])


def write_coefficients_csv(path, coeffs: HarmonicCoefficients, fmt=None) -> None:
    from .config import format_float

    fmt = fmt or format_float
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["l", "m", "re", "im"])
        for l in range(coeffs.l_max + 1):
            for m in range(l + 1):
                a = coeffs.coeffs[l, coeffs.l_max + m]
                w.writerow([l, m, fmt(float(a.real)), fmt(float(a.imag))])
