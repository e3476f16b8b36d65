"""Backend selection for the hot loops.

The compiled ``_core`` extension is used when it imports; otherwise, or when
the environment variable ``SFHD_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the NumPy implementations in ``_pycore`` are used.
"""

from __future__ import annotations

import os

from . import _pycore

BACKEND = "python"
_impl = _pycore

if os.environ.get("SFHD_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pycore


def series_sum(alpha, beta, log_abs_x, log_y, n_terms, m_terms):
    return _impl.series_sum(float(alpha), float(beta), float(log_abs_x), float(log_y), int(n_terms), int(m_terms))


def sph_jn_table(l_max, xs):
    return _impl.sph_jn_table(int(l_max), xs)


def ylm_table(l_max, thetas):
    return _impl.ylm_table(int(l_max), thetas)


def ylm_synth(a_pos, a_neg, thetas, n_threads=1):
    return _impl.ylm_synth(a_pos, a_neg, thetas, int(n_threads))


def get_backend(name: str):
    """Return the module implementing backend ``name`` ("cython" or "python")."""
    if name == "python":
        return _pycore
    if name == "cython":
        from . import _core

        return _core
    raise ValueError(f"unknown backend {name!r}")
