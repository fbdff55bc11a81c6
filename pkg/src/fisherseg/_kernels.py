"""Compiled inner loops for the hypergeometric p-value and the quadrant scan.

Everything here works on plain arrays and integers so numba can compile it.
Callers go through :mod:`fisherseg.exact_test` and :mod:`fisherseg.scan`.
"""

import math

import numpy as np
from numba import njit, prange

# Relative slack when deciding whether a table is "as extreme" as the observed one.
TIE_RTOL = 1e-7
LOG_TIE = math.log1p(TIE_RTOL)

STANDARD = 0
LITERAL = 1


@njit(cache=True)
def log_factorials(n_max):
    # Kahan-compensated running sum of ln(k).
    out = np.empty(n_max + 1, dtype=np.float64)
    out[0] = 0.0
    s = 0.0
    comp = 0.0
    for k in range(1, n_max + 1):
        y = math.log(k) - comp
        t = s + y
        comp = (t - s) - y
        s = t
        out[k] = s
    return out


@njit(cache=True, inline="always")
def _log_pmf(i, r1, c1, n, lf, log_norm):
    return log_norm - lf[i] - lf[r1 - i] - lf[c1 - i] - lf[n - r1 - c1 + i]


@njit(cache=True)
def _tail_sum(start, stop, step, r1, c1, n, lf, log_norm, ref):
    # Terms shrink monotonically away from the mode; stop once they no longer register.
    total = 0.0
    i = start
    while i != stop:
        term = math.exp(_log_pmf(i, r1, c1, n, lf, log_norm) - ref)
        total += term
        if term < 1e-18 * total:
            break
        i += step
    return total


@njit(cache=True)
def log_p_standard(a, r1, c1, n, lf):
    """ln of the two-sided p-value: mass of tables no more probable than ``a``."""
    lo = max(0, r1 + c1 - n)
    hi = min(r1, c1)
    if lo == hi:
        return 0.0
    log_norm = lf[r1] + lf[n - r1] + lf[c1] + lf[n - c1] - lf[n]
    cut = _log_pmf(a, r1, c1, n, lf, log_norm) + LOG_TIE
    mode = ((r1 + 1) * (c1 + 1)) // (n + 2)
    if mode < lo:
        mode = lo
    if mode > hi:
        mode = hi
    if _log_pmf(mode, r1, c1, n, lf, log_norm) <= cut:
        return 0.0

    # largest L in [lo, mode) with pmf <= cut (pmf non-decreasing there), else lo - 1
    left = lo - 1
    x, y = lo, mode - 1
    while x <= y:
        mid = (x + y) // 2
        if _log_pmf(mid, r1, c1, n, lf, log_norm) <= cut:
            left = mid
            x = mid + 1
        else:
            y = mid - 1
    # smallest R in (mode, hi] with pmf <= cut (pmf non-increasing there), else hi + 1
    right = hi + 1
    x, y = mode + 1, hi
    while x <= y:
        mid = (x + y) // 2
        if _log_pmf(mid, r1, c1, n, lf, log_norm) <= cut:
            right = mid
            y = mid - 1
        else:
            x = mid + 1

    ref = -np.inf
    if left >= lo:
        ref = _log_pmf(left, r1, c1, n, lf, log_norm)
    if right <= hi:
        lr = _log_pmf(right, r1, c1, n, lf, log_norm)
        if lr > ref:
            ref = lr
    total = 0.0
    if left >= lo:
        total += _tail_sum(left, lo - 1, -1, r1, c1, n, lf, log_norm, ref)
    if right <= hi:
        total += _tail_sum(right, hi + 1, 1, r1, c1, n, lf, log_norm, ref)
    out = ref + math.log(total)
    return min(out, 0.0)


@njit(cache=True)
def _range_sum(x, y, mode, r1, c1, n, lf, log_norm, ref):
    # Sum over [x, y], walking outwards from the point closest to the mode.
    peak = min(max(mode, x), y)
    return (_tail_sum(peak, x - 1, -1, r1, c1, n, lf, log_norm, ref)
            + _tail_sum(peak + 1, y + 1, 1, r1, c1, n, lf, log_norm, ref))


@njit(cache=True)
def log_p_literal(a, r1, c1, n, lf):
    """ln of the inclusive lower tail plus the inclusive upper tail, unclamped."""
    lo = max(0, r1 + c1 - n)
    hi = min(r1, c1)
    log_norm = lf[r1] + lf[n - r1] + lf[c1] + lf[n - c1] - lf[n]
    mode = min(max(((r1 + 1) * (c1 + 1)) // (n + 2), lo), hi)
    ref = _log_pmf(mode, r1, c1, n, lf, log_norm)
    lower = _range_sum(lo, a, mode, r1, c1, n, lf, log_norm, ref)
    upper = _range_sum(a, hi, mode, r1, c1, n, lf, log_norm, ref)
    return ref + math.log(lower + upper)


@njit(cache=True)
def canonical(a, r1, c1, n):
    """Representative of the table under row swap, column swap and transpose.

    Tables related by those symmetries share a p-value; mapping them to one
    representative makes the floating point result bitwise identical too.
    """
    if 2 * r1 > n:
        a = c1 - a
        r1 = n - r1
    if 2 * c1 > n:
        a = r1 - a
        c1 = n - c1
    if r1 > c1:
        r1, c1 = c1, r1
    if 2 * c1 == n:
        a = min(a, r1 - a)
    if 2 * r1 == n:
        a = min(a, c1 - a)
    return a, r1, c1


@njit(cache=True)
def log_p(a, r1, c1, n, lf, variant):
    a, r1, c1 = canonical(a, r1, c1, n)
    if variant == STANDARD:
        return log_p_standard(a, r1, c1, n, lf)
    return min(log_p_literal(a, r1, c1, n, lf), 0.0)


@njit(cache=True)
def _scan_row(values, thr, min_side, lf, variant, out_row):
    m = values.shape[0]
    c1 = 0
    for t in range(m):
        if values[t] > thr:
            c1 += 1
    a = 0
    for t in range(min_side):
        if values[t] > thr:
            a += 1
    n_tau = out_row.shape[0]
    for k in range(n_tau):
        tau = min_side + k
        out_row[k] = log_p(a, tau, c1, m, lf, variant)
        if values[tau] > thr:
            a += 1


@njit(cache=True)
def scan_matrix_serial(values, thresholds, min_side, lf, variant):
    """ln p for every (threshold, tau); tau runs over min_side..m - min_side."""
    m = values.shape[0]
    n_tau = m - 2 * min_side + 1
    out = np.empty((thresholds.shape[0], n_tau), dtype=np.float64)
    for j in range(thresholds.shape[0]):
        _scan_row(values, thresholds[j], min_side, lf, variant, out[j])
    return out


@njit(cache=True, parallel=True)
def scan_matrix_parallel(values, thresholds, min_side, lf, variant):
    m = values.shape[0]
    n_tau = m - 2 * min_side + 1
    out = np.empty((thresholds.shape[0], n_tau), dtype=np.float64)
    for j in prange(thresholds.shape[0]):
        _scan_row(values, thresholds[j], min_side, lf, variant, out[j])
    return out
