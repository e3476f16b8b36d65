# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Semantics mirror ``sfhd._pycore`` exactly."""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport lgamma, exp, sqrt, fabs, ceil, cbrt, sin, cos, M_PI, INFINITY

cnp.import_array()


def series_sum(double alpha, double beta, double log_abs_x, double log_y,
               int n_terms, int m_terms):
    """Signed double sum over the binomial triangle, term by term in log space.

    Returns ``(sum, err_weight, max_log, tail_log)``.
    """
    cdef double[::1] lfact = np.empty(m_terms + 1)
    cdef int m, n, nmax
    cdef double c0 = alpha + beta + 1.0
    cdef double s = 0.0, comp = 0.0, tmp, term, lg, lbin, logt, mag
    cdef double err = 0.0, max_log = -INFINITY, tail_log = -INFINITY
    for m in range(m_terms + 1):
        lfact[m] = lgamma(m + 1.0)
    for m in range(m_terms):
        nmax = m if m < n_terms - 1 else n_terms - 1
        for n in range(nmax + 1):
            lbin = lfact[m] - lfact[n] - lfact[m - n]
            lg = lgamma(beta * m + alpha * n + c0)
            logt = lbin + m * log_abs_x + n * log_y - lg
            mag = exp(logt)
            term = -mag if (m & 1) else mag
            tmp = s + term
            if fabs(s) >= fabs(term):
                comp += (s - tmp) + term
            else:
                comp += (term - tmp) + s
            s = tmp
            err += mag * (fabs(lbin) + fabs(m * log_abs_x) + fabs(n * log_y) + fabs(lg) + 2.0)
            if logt > max_log:
                max_log = logt
            if (m == m_terms - 1 or (n == n_terms - 1 and m > n)) and logt > tail_log:
                tail_log = logt
    return s + comp, err, max_log, tail_log


cdef void _miller(int l_max, double x, double j0, double j1, double* out) noexcept nogil:
    # start well above the turning point k ~ x so the discarded tail is below
    # round-off in the normalisation sum
    cdef int start = <int>ceil(x)
    if start < l_max:
        start = l_max
    start += 30 + <int>ceil(6.0 * cbrt(x))
    cdef double f_next = 0.0, f_cur = 1e-30, f_prev, total = 0.0, scale, sgn
    cdef int k, i
    for k in range(start, -1, -1):
        total += (2 * k + 1) * f_cur * f_cur
        if k <= l_max:
            out[k] = f_cur
        if k == 0:
            break
        f_prev = (2 * k + 1) / x * f_cur - f_next
        f_next = f_cur
        f_cur = f_prev
        if fabs(f_cur) > 1e100:
            f_cur *= 1e-100
            f_next *= 1e-100
            total *= 1e-200
            for i in range(k, l_max + 1):
                out[i] *= 1e-100
    scale = 1.0 / sqrt(total)
    sgn = out[0] * j0 + (out[1] * j1 if l_max >= 1 else 0.0)
    if sgn < 0:
        scale = -scale
    for i in range(l_max + 1):
        out[i] *= scale


def sph_jn_table(int l_max, double[::1] xs):
    cdef Py_ssize_t n = xs.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.zeros((n, l_max + 1))
    cdef double[:, ::1] out = out_arr
    cdef double x, j0, j1, s, c
    for i in range(n):
        x = xs[i]
        if x == 0.0:
            out[i, 0] = 1.0
            continue
        if x < 1e-3:
            j0 = 1.0 - x * x / 6.0
            j1 = x / 3.0
        else:
            s = sin(x)
            c = cos(x)
            j0 = s / x
            j1 = s / (x * x) - c / x
        _miller(l_max, x, j0, j1, &out[i, 0])
    return out_arr


cdef void _ylm_row(int l_max, double theta, double[:, ::1] row) noexcept nogil:
    cdef double x = cos(theta)
    cdef double s = sin(theta)
    cdef double pmm, p1, p2, pl, a, b
    cdef int l, m
    pmm = 1.0 / sqrt(4.0 * M_PI)
    for m in range(l_max + 1):
        if m > 0:
            pmm = -sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * pmm
        row[m, m] = pmm
        if m == l_max:
            break
        p2 = pmm
        p1 = sqrt(2.0 * m + 3.0) * x * pmm
        row[m + 1, m] = p1
        for l in range(m + 2, l_max + 1):
            a = sqrt((4.0 * l * l - 1.0) / (1.0 * l * l - 1.0 * m * m))
            b = sqrt(((l - 1.0) * (l - 1.0) - 1.0 * m * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0))
            pl = a * (x * p1 - b * p2)
            row[l, m] = pl
            p2 = p1
            p1 = pl


def ylm_table(int l_max, double[::1] thetas):
    cdef Py_ssize_t n = thetas.shape[0], j
    cdef cnp.ndarray[cnp.float64_t, ndim=3] out_arr = np.zeros((n, l_max + 1, l_max + 1))
    cdef double[:, :, ::1] out = out_arr
    for j in range(n):
        _ylm_row(l_max, thetas[j], out[j])
    return out_arr


def ylm_synth(double complex[:, ::1] a_pos, double complex[:, ::1] a_neg,
              double[::1] thetas, int n_threads=1):
    """``G_pos[j, m] = sum_l a_pos[l, m] Y_lm(theta_j, 0)`` and likewise for
    ``a_neg``; rows are independent so they are split across threads."""
    cdef int l_max = a_pos.shape[0] - 1
    cdef Py_ssize_t n = thetas.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] gp_arr = np.zeros((n, l_max + 1), dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] gn_arr = np.zeros((n, l_max + 1), dtype=np.complex128)
    cdef double complex[:, ::1] gp = gp_arr
    cdef double complex[:, ::1] gn = gn_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=3] work_arr = np.zeros((n, l_max + 1, l_max + 1))
    cdef double[:, :, ::1] work = work_arr
    cdef Py_ssize_t j
    cdef int l, m
    cdef double complex accp, accn
    if n_threads < 1:
        n_threads = 1
    for j in prange(n, nogil=True, num_threads=n_threads, schedule="static"):
        _ylm_row(l_max, thetas[j], work[j])
        for m in range(l_max + 1):
            accp = 0.0
            accn = 0.0
            for l in range(m, l_max + 1):
                accp = accp + a_pos[l, m] * work[j, l, m]
                accn = accn + a_neg[l, m] * work[j, l, m]
            gp[j, m] = accp
            gn[j, m] = accn
    return gp_arr, gn_arr
