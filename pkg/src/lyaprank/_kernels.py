"""Compiled inner loops (numba). Pure kernels over plain arrays."""

import numpy as np
from numba import njit

NORM_FROBENIUS = 0
NORM_ONE = 1  # operator 1-norm: max column abs sum
NORM_SUM = 2  # entrywise sum of |a_ij|
NORM_INF = 3  # operator inf-norm: max row abs sum


@njit(cache=True)
def _norm(P, code):
    d = P.shape[0]
    if code == NORM_FROBENIUS:
        s = 0.0
        for i in range(d):
            for j in range(d):
                a = abs(P[i, j])
                s += a * a
        return np.sqrt(s)
    if code == NORM_ONE:
        best = 0.0
        for j in range(d):
            s = 0.0
            for i in range(d):
                s += abs(P[i, j])
            if s > best:
                best = s
        return best
    if code == NORM_INF:
        best = 0.0
        for i in range(d):
            s = 0.0
            for j in range(d):
                s += abs(P[i, j])
            if s > best:
                best = s
        return best
    s = 0.0
    for i in range(d):
        for j in range(d):
            s += abs(P[i, j])
    return s


@njit(cache=True)
def renormalized_product(mats, omega, norm_code, sample_at):
    """Accumulate log ||A_{w0} ... A_{w(n-1)}|| with per-step renormalisation.

    Returns (status, log_norm, samples) where status is 0 on success,
    1 if the running product hit the zero matrix and 2 on NaN/inf.
    ``samples[i]`` holds the running log-norm after ``sample_at[i]`` factors.
    """
    n = omega.shape[0]
    d = mats.shape[1]
    P = mats[omega[0]].copy()
    Q = np.empty_like(P)
    samples = np.full(sample_at.shape[0], -np.inf)
    acc = 0.0
    si = 0
    for k in range(n):
        if k > 0:
            A = mats[omega[k]]
            for i in range(d):
                for j in range(d):
                    s = P[i, 0] * A[0, j]
                    for l in range(1, d):
                        s += P[i, l] * A[l, j]
                    Q[i, j] = s
            P, Q = Q, P
        nrm = _norm(P, norm_code)
        if nrm == 0.0:
            return 1, -np.inf, samples
        if not np.isfinite(nrm):
            return 2, np.nan, samples
        acc += np.log(nrm)
        for i in range(d):
            for j in range(d):
                P[i, j] = P[i, j] / nrm
        while si < sample_at.shape[0] and sample_at[si] == k + 1:
            samples[si] = acc
            si += 1
    return 0, acc, samples


@njit(cache=True)
def markov_walk(cum_rows, start, uniforms):
    n = uniforms.shape[0]
    out = np.empty(n + 1, dtype=np.int64)
    out[0] = start
    s = start
    m = cum_rows.shape[1]
    for k in range(n):
        u = uniforms[k]
        nxt = m - 1
        for j in range(m):
            if u < cum_rows[s, j]:
                nxt = j
                break
        out[k + 1] = nxt
        s = nxt
    return out
