"""Special functions: log-gamma, Prabhakar / Mittag-Leffler series, spherical
Bessel functions, Legendre polynomials and complex spherical harmonics.

Series are summed term by term with each term formed as
``phase * exp(log_magnitude)``.  The double-precision sum carries a running
rounding-error estimate; when cancellation makes that estimate exceed the
target accuracy the sum is repeated in MPFR arithmetic (via :mod:`gmpy2`) at a
precision sized to the observed cancellation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import gmpy2
import numpy as np

from . import _kernels
from .errors import NonConvergenceError

__all__ = [
    "PrabhakarArgs",
    "log_gamma",
    "prabhakar_ml",
    "mittag_leffler",
    "mittag_leffler_derivative",
    "spherical_bessel",
    "spherical_bessel_all",
    "spherical_bessel_table",
    "bessel_half_integer",
    "legendre_p",
    "legendre_p_all",
    "assoc_legendre_p",
    "spherical_harmonic",
    "ylm_theta_table",
]

ML_TERM_CAP = 10_000
_EPS = 2.0**-52
# relative accuracy demanded from the double-precision series before the
# extended-precision path takes over
_SERIES_RTOL = 1e-14


@dataclass(frozen=True)
class PrabhakarArgs:
    """Arguments of the three-parameter Mittag-Leffler function ``E^zeta_{a,b}(z)``."""

    a: float
    b: float
    zeta: float
    z: float | complex

    def __post_init__(self):
        for name in ("a", "b", "zeta"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a finite positive number, got {value!r}")


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"log_gamma is defined here for x > 0 only, got {x!r}")
    return math.lgamma(x)


def prabhakar_ml(args: PrabhakarArgs, max_terms: int = ML_TERM_CAP) -> float | complex:
    """Three-parameter (Prabhakar) Mittag-Leffler function.

    ``sum_k (zeta)_k z^k / (k! Gamma(a k + b))``.  Returns a float for real
    ``z`` and a complex for complex ``z``.

    Raises
    ------
    NonConvergenceError
        If ``max_terms`` is reached while the terms are still growing.
    """
    a, b, zeta, z = float(args.a), float(args.b), float(args.zeta), args.z
    is_complex = isinstance(z, complex) or np.iscomplexobj(z)
    z = complex(z) if is_complex else float(z)
    if z == 0:
        value = math.exp(-math.lgamma(b))
        return complex(value) if is_complex else value

    value, err, n_terms, cancel = _prabhakar_double(a, b, zeta, z, max_terms)
    if err <= _SERIES_RTOL * abs(value):
        return value
    bits = 64 + int(math.ceil(math.log2(max(cancel, 1.0)))) + 24
    return _prabhakar_mpfr(a, b, zeta, z, bits, max_terms)


def _prabhakar_double(a, b, zeta, z, max_terms):
    log_abs_z = math.log(abs(z))
    if isinstance(z, complex):
        phase = z / abs(z)
    else:
        phase = -1.0 if z < 0 else 1.0

    lg_zeta = math.lgamma(zeta)
    re_terms: list[float] = []
    im_terms: list[float] = []
    abs_total = 0.0
    err = 0.0
    running = 0.0
    prev_log = -math.inf
    ph = 1.0 + 0.0j if isinstance(z, complex) else 1.0
    k = 0
    while True:
        lg1 = math.lgamma(zeta + k)
        lg2 = math.lgamma(k + 1.0)
        lg3 = math.lgamma(a * k + b)
        log_mag = lg1 - lg_zeta - lg2 - lg3 + k * log_abs_z
        mag = math.exp(log_mag)
        term = ph * mag
        if isinstance(term, complex):
            re_terms.append(term.real)
            im_terms.append(term.imag)
        else:
            re_terms.append(term)
        abs_total += mag
        # error of exp(log_mag) scales with the size of the cancelled logs
        err += mag * (abs(lg1) + abs(lg_zeta) + abs(lg2) + abs(lg3) + abs(k * log_abs_z) + 2.0)
        running += term
        decreasing = log_mag < prev_log
        if decreasing and (mag <= 1e-17 * abs(running) or log_mag < -740.0):
            break
        k += 1
        if k >= max_terms:
            if not decreasing:
                raise NonConvergenceError(
                    f"Prabhakar series still growing after {max_terms} terms "
                    f"(a={a}, b={b}, zeta={zeta}, z={z})"
                )
            break
        prev_log = log_mag
        ph = ph * phase

    if im_terms:
        value = complex(math.fsum(re_terms), math.fsum(im_terms))
    else:
        value = math.fsum(re_terms)
    err *= 4.0 * _EPS
    cancel = abs_total / max(abs(value), 1e-300)
    return value, err, k + 1, cancel


def _prabhakar_mpfr(a, b, zeta, z, bits, max_terms):
    bits = min(bits, 8192)
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        a_ = gmpy2.mpfr(a)
        b_ = gmpy2.mpfr(b)
        zeta_ = gmpy2.mpfr(zeta)
        is_complex = isinstance(z, complex)
        z_ = gmpy2.mpc(z) if is_complex else gmpy2.mpfr(z)
        coef = gmpy2.mpfr(1)  # (zeta)_k / k!
        zk = gmpy2.mpc(1) if is_complex else gmpy2.mpfr(1)
        total = gmpy2.mpc(0) if is_complex else gmpy2.mpfr(0)
        tiny = gmpy2.mpfr(2) ** (-bits - 8)
        prev = None
        for k in range(max_terms):
            if k > 0:
                coef = coef * (zeta_ + (k - 1)) / k
                zk = zk * z_
            term = coef * zk / gmpy2.gamma(a_ * k + b_)
            total += term
            mag = abs(term)
            if prev is not None and mag < prev and mag <= tiny * abs(total):
                break
            prev = mag
        if is_complex:
            return complex(total)
        return float(total)


def mittag_leffler(alpha: float, z: float | complex) -> complex:
    """One-parameter Mittag-Leffler function ``E_alpha(z)`` for alpha in (0, 1]."""
    if not (0 < alpha <= 1):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha!r}")
    return complex(prabhakar_ml(PrabhakarArgs(alpha, 1.0, 1.0, complex(z))))


def mittag_leffler_derivative(alpha: float, order: int, z: float) -> float:
    """``d^p/dz^p E_alpha(z) = p! E^{p+1}_{alpha, alpha p + 1}(z)`` for real z."""
    p = int(order)
    if p < 0:
        raise ValueError("derivative order must be non-negative")
    value = prabhakar_ml(PrabhakarArgs(alpha, alpha * p + 1.0, p + 1.0, float(z)))
    return math.factorial(p) * value


# --------------------------------------------------------------------------
# spherical Bessel functions


def _j01(x: float) -> tuple[float, float]:
    if x < 1e-3:
        x2 = x * x
        j0 = 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
        j1 = x / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0 * (1.0 - x2 / 54.0)))
        return j0, j1
    s, c = math.sin(x), math.cos(x)
    return s / x, s / (x * x) - c / x


def spherical_bessel_all(l_max: int, x: float) -> np.ndarray:
    """``[j_0(x), ..., j_{l_max}(x)]`` from one downward (Miller) recurrence."""
    if l_max < 0:
        raise ValueError("l_max must be >= 0")
    x = float(x)
    if x < 0:
        raise ValueError("x must be >= 0")
    return spherical_bessel_table(l_max, np.array([x]))[0]


def spherical_bessel_table(l_max: int, xs) -> np.ndarray:
    """Table ``out[i, l] = j_l(xs[i])`` for ``0 <= l <= l_max``."""
    xs = np.ascontiguousarray(xs, dtype=np.float64).ravel()
    if np.any(xs < 0):
        raise ValueError("x must be >= 0")
    out = _kernels.sph_jn_table(int(l_max), xs)
    for i, x in enumerate(xs):
        if x == 0.0:
            out[i, :] = 0.0
            out[i, 0] = 1.0
        else:
            j0, j1 = _j01(float(x))
            out[i, 0] = j0
            if l_max >= 1:
                out[i, 1] = j1
    return out


def spherical_bessel(l: int, x: float) -> float:
    """Spherical Bessel function of the first kind ``j_l(x)``."""
    if l < 0:
        raise ValueError("l must be >= 0")
    x = float(x)
    if x < 0:
        raise ValueError("x must be >= 0")
    if x == 0.0:
        return 1.0 if l == 0 else 0.0
    if l <= 1:
        return _j01(x)[l]
    return float(spherical_bessel_all(l, x)[l])


def bessel_half_integer(l: int, x):
    """``J_{l+1/2}(x) = sqrt(2x/pi) j_l(x)``."""
    return math.sqrt(2.0 * x / math.pi) * spherical_bessel(l, x)


# --------------------------------------------------------------------------
# Legendre functions and spherical harmonics


def legendre_p_all(l_max: int, x) -> np.ndarray:
    """``P_0(x) .. P_{l_max}(x)`` along the last axis, by three-term recurrence."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty(x.shape + (l_max + 1,))
    out[..., 0] = 1.0
    if l_max >= 1:
        out[..., 1] = x
    for l in range(1, l_max):
        out[..., l + 1] = ((2 * l + 1) * x * out[..., l] - l * out[..., l - 1]) / (l + 1)
    return out


def legendre_p(l: int, x: float) -> float:
    """Legendre polynomial ``P_l(x)`` for ``|x| <= 1``."""
    if l < 0:
        raise ValueError("l must be >= 0")
    if abs(x) > 1.0:
        raise ValueError(f"x must lie in [-1, 1], got {x!r}")
    p_prev, p = 1.0, float(x)
    if l == 0:
        return 1.0
    for k in range(1, l):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    return p


def assoc_legendre_p(l: int, m: int, x: float) -> float:
    """Associated Legendre function ``P_l^m(x)``, 0 <= m <= l, without the
    Condon-Shortley phase (the harmonic below carries ``(-1)^m`` explicitly)."""
    if not 0 <= m <= l:
        raise ValueError(f"need 0 <= m <= l, got l={l}, m={m}")
    s = math.sqrt(max(0.0, (1.0 - x) * (1.0 + x)))
    pmm = 1.0
    for k in range(1, m + 1):
        pmm *= (2 * k - 1) * s
    if l == m:
        return pmm
    pm1 = (2 * m + 1) * x * pmm
    for k in range(m + 2, l + 1):
        pmm, pm1 = pm1, ((2 * k - 1) * x * pm1 - (k + m - 1) * pmm) / (k - m)
    return pm1


def ylm_theta_table(l_max: int, thetas) -> np.ndarray:
    """``out[j, l, m] = Y_lm(theta_j, 0)`` for ``0 <= m <= l <= l_max`` (zero above
    the diagonal), computed by the normalised (l, m) recurrence."""
    thetas = np.ascontiguousarray(thetas, dtype=np.float64).ravel()
    return _kernels.ylm_table(int(l_max), thetas)


def spherical_harmonic(l: int, m: int, theta: float, phi: float) -> complex:
    """Complex spherical harmonic ``Y_lm(theta, phi)``.

    ``Y_{l,-m} = (-1)^m conj(Y_{l,m})``.
    """
    if l < 0 or abs(m) > l:
        raise IndexError(f"need |m| <= l, got l={l}, m={m}")
    mm = abs(m)
    val = float(ylm_theta_table(l, [theta])[0, l, mm])
    y = val * cmath.exp(1j * mm * phi)
    if m < 0:
        y = (-1) ** mm * y.conjugate()
    return y
