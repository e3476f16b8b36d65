"""Pure-Python / NumPy implementations of the hot loops in ``_core.pyx``.

Used when the compiled extension is unavailable or ``SFHD_PURE_PYTHON`` is set.
Results agree with the compiled versions to rounding, not bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.special import gammaln


def _triangle(n_terms: int, m_terms: int):
    m_idx, n_idx = [], []
    for m in range(m_terms):
        k = min(m, n_terms - 1) + 1
        m_idx.append(np.full(k, m))
        n_idx.append(np.arange(k))
    return np.concatenate(m_idx), np.concatenate(n_idx)


def series_sum(alpha, beta, log_abs_x, log_y, n_terms, m_terms):
    m, n = _triangle(n_terms, m_terms)
    mf, nf = m.astype(float), n.astype(float)
    lbin = gammaln(mf + 1.0) - gammaln(nf + 1.0) - gammaln(mf - nf + 1.0)
    lg = gammaln(beta * mf + alpha * nf + alpha + beta + 1.0)
    logt = lbin + mf * log_abs_x + nf * log_y - lg
    mag = np.exp(logt)
    terms = np.where(m % 2 == 1, -mag, mag)
    s = math.fsum(terms)
    err = float(np.sum(mag * (np.abs(lbin) + np.abs(mf * log_abs_x) + np.abs(nf * log_y) + np.abs(lg) + 2.0)))
    tail = (m == m_terms - 1) | ((n == n_terms - 1) & (m > n))
    max_log = float(np.max(logt))
    tail_log = float(np.max(logt[tail])) if np.any(tail) else -math.inf
    return s, err, max_log, tail_log


def sph_jn_table(l_max, xs):
    xs = np.asarray(xs, dtype=np.float64)
    n = xs.shape[0]
    out = np.zeros((n, l_max + 1))
    if n == 0:
        return out
    nz = xs > 0
    x = np.where(nz, xs, 1.0)
    small = x < 1e-3
    with np.errstate(all="ignore"):
        j0 = np.where(small, 1.0 - x * x / 6.0, np.sin(x) / x)
        j1 = np.where(small, x / 3.0, np.sin(x) / (x * x) - np.cos(x) / x)
    # per-element start max(l_max, x) + 30 + 6 x^(1/3), well above the turning
    # point; a shared loop runs from the largest start and each element joins
    # the recurrence at its own start
    starts = np.maximum(l_max, np.ceil(x).astype(int)) + 30 + np.ceil(6.0 * np.cbrt(x)).astype(int)
    top = int(starts.max())
    f_next = np.zeros(n)
    f_cur = np.zeros(n)
    total = np.zeros(n)
    for k in range(top, -1, -1):
        f_cur = np.where(starts == k, 1e-30, f_cur)
        total += (2 * k + 1) * f_cur * f_cur
        if k <= l_max:
            out[:, k] = f_cur
        if k == 0:
            break
        f_prev = (2 * k + 1) / x * f_cur - f_next
        f_next = f_cur
        f_cur = f_prev
        big = np.abs(f_cur) > 1e100
        if np.any(big):
            f_cur = np.where(big, f_cur * 1e-100, f_cur)
            f_next = np.where(big, f_next * 1e-100, f_next)
            total = np.where(big, total * 1e-200, total)
            if k <= l_max:
                out[big, k:] *= 1e-100
    scale = 1.0 / np.sqrt(total)
    sgn = out[:, 0] * j0 + (out[:, 1] * j1 if l_max >= 1 else 0.0)
    scale = np.where(sgn < 0, -scale, scale)
    out *= scale[:, None]
    out[~nz] = 0.0
    out[~nz, 0] = 1.0
    return out


def ylm_table(l_max, thetas):
    thetas = np.asarray(thetas, dtype=np.float64)
    n = thetas.shape[0]
    out = np.zeros((n, l_max + 1, l_max + 1))
    x = np.cos(thetas)
    s = np.sin(thetas)
    pmm = np.full(n, 1.0 / math.sqrt(4.0 * math.pi))
    for m in range(l_max + 1):
        if m > 0:
            pmm = -math.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * pmm
        out[:, m, m] = pmm
        if m == l_max:
            break
        p2 = pmm
        p1 = math.sqrt(2.0 * m + 3.0) * x * pmm
        out[:, m + 1, m] = p1
        for l in range(m + 2, l_max + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            pl = a * (x * p1 - b * p2)
            out[:, l, m] = pl
            p2, p1 = p1, pl
    return out


def ylm_synth(a_pos, a_neg, thetas, n_threads=1):
    thetas = np.asarray(thetas, dtype=np.float64)
    chunks = np.array_split(np.arange(thetas.shape[0]), max(1, n_threads))
    chunks = [c for c in chunks if c.size]
    l_max = a_pos.shape[0] - 1

    def work(idx):
        table = ylm_table(l_max, thetas[idx])
        return np.einsum("jlm,lm->jm", table, a_pos), np.einsum("jlm,lm->jm", table, a_neg)

    if n_threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    gp = np.concatenate([p[0] for p in parts]) if parts else np.zeros((0, l_max + 1), complex)
    gn = np.concatenate([p[1] for p in parts]) if parts else np.zeros((0, l_max + 1), complex)
    return gp, gn
