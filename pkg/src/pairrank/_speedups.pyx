# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: the hot loops behind rating sweeps, pair-gain scans
and exact 1-D k-means.

Mirrors `pairrank._purepy` function-for-function with the same operation
order; `pairrank.kernels` picks whichever backend imports.
"""

from libc.math cimport erfc, exp, log, sqrt, INFINITY, M_PI

import numpy as np

BACKEND_NAME = "compiled"

cdef double _INV_SQRT_2PI = 1.0 / sqrt(2.0 * M_PI)
cdef double _SQRT2 = sqrt(2.0)


cdef inline double _tail(double tt) nogil:
    return (1.0 / tt) * (1.0 - (3.0 / tt) * (1.0 - (5.0 / tt) * (
        1.0 - (7.0 / tt) * (1.0 - (9.0 / tt) * (1.0 - 11.0 / tt)))))


cdef inline double _v(double t) nogil:
    cdef double tt, phi, big_phi
    if t < -6.0:
        tt = t * t
        return -t / (1.0 - _tail(tt))
    phi = exp(-0.5 * t * t) * _INV_SQRT_2PI
    big_phi = 0.5 * erfc(-t / _SQRT2)
    return phi / big_phi


cdef inline double _w(double t) nogil:
    cdef double tt, tail, series, vt
    if t < -6.0:
        tt = t * t
        tail = _tail(tt)
        series = 1.0 - tail
        return tt * tail / (series * series)
    vt = _v(t)
    return vt * (vt + t)


def v(double t):
    """Mean correction phi(t)/Phi(t) for a win observation at offset t."""
    return _v(t)


def w(double t):
    """Variance correction v(t)*(v(t)+t); lies in the open interval (0,1)."""
    return _w(t)


cdef inline void _update(double* mu_w, double* sig_w, double* mu_l, double* sig_l,
                         double beta, double tau) nogil:
    cdef double var_w, var_l, c2, c, t, vt, wt
    var_w = sig_w[0] * sig_w[0] + tau * tau
    var_l = sig_l[0] * sig_l[0] + tau * tau
    c2 = 2.0 * beta * beta + var_w + var_l
    c = sqrt(c2)
    t = (mu_w[0] - mu_l[0]) / c
    vt = _v(t)
    wt = _w(t)
    mu_w[0] = mu_w[0] + (var_w / c) * vt
    mu_l[0] = mu_l[0] - (var_l / c) * vt
    sig_w[0] = sqrt(var_w * (1.0 - (var_w / c2) * wt))
    sig_l[0] = sqrt(var_l * (1.0 - (var_l / c2) * wt))


def update_one(double mu_w, double sig_w, double mu_l, double sig_l,
               double beta, double tau):
    """One winner/loser rating update; returns (mu_w, sig_w, mu_l, sig_l)."""
    _update(&mu_w, &sig_w, &mu_l, &sig_l, beta, tau)
    return mu_w, sig_w, mu_l, sig_l


def trueskill_sweep(double[::1] mu, double[::1] sigma,
                    long long[::1] winners, long long[::1] losers,
                    double beta, double tau, int passes):
    """Apply an outcome sequence to the rating arrays in place, `passes` times."""
    cdef Py_ssize_t n = winners.shape[0]
    cdef Py_ssize_t k
    cdef int p
    cdef long long a, b
    with nogil:
        for p in range(passes):
            for k in range(n):
                a = winners[k]
                b = losers[k]
                _update(&mu[a], &sigma[a], &mu[b], &sigma[b], beta, tau)


cdef inline double _kl(double mu1, double sig1, double mu0, double sig0) nogil:
    cdef double d = mu1 - mu0
    cdef double r = sig1 / sig0
    return log(sig0 / sig1) + 0.5 * (r * r + d * d / (sig0 * sig0)) - 0.5


def gain_scan(double[::1] mu, double[::1] sigma,
              long long[::1] pair_a, long long[::1] pair_b,
              double beta, double tau):
    """Expected KL information gain and P(a wins) for each candidate pair."""
    cdef Py_ssize_t m = pair_a.shape[0]
    gains_arr = np.empty(m, dtype=np.float64)
    probs_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] gains = gains_arr
    cdef double[::1] probs = probs_arr
    cdef Py_ssize_t k
    cdef long long a, b
    cdef double mu_a, sig_a, mu_b, sig_b, c, p
    cdef double a_mu1, a_sig1, b_mu1, b_sig1
    cdef double a_mu2, a_sig2, b_mu2, b_sig2
    with nogil:
        for k in range(m):
            a = pair_a[k]
            b = pair_b[k]
            mu_a = mu[a]; sig_a = sigma[a]
            mu_b = mu[b]; sig_b = sigma[b]
            c = sqrt(2.0 * beta * beta + sig_a * sig_a + sig_b * sig_b)
            p = 0.5 * erfc(-((mu_a - mu_b) / c) / _SQRT2)
            a_mu1 = mu_a; a_sig1 = sig_a; b_mu1 = mu_b; b_sig1 = sig_b
            _update(&a_mu1, &a_sig1, &b_mu1, &b_sig1, beta, tau)
            b_mu2 = mu_b; b_sig2 = sig_b; a_mu2 = mu_a; a_sig2 = sig_a
            _update(&b_mu2, &b_sig2, &a_mu2, &a_sig2, beta, tau)
            gains[k] = p * (_kl(a_mu1, a_sig1, mu_a, sig_a)
                            + _kl(b_mu1, b_sig1, mu_b, sig_b)) \
                + (1.0 - p) * (_kl(a_mu2, a_sig2, mu_a, sig_a)
                               + _kl(b_mu2, b_sig2, mu_b, sig_b))
            probs[k] = p
    return gains_arr, probs_arr


def kmeans_1d(double[::1] values_sorted, int k):
    """Globally optimal 1-D k-means over pre-sorted values (DP over segments)."""
    cdef Py_ssize_t n = values_sorted.shape[0]
    prefix_arr = np.zeros(n + 1, dtype=np.float64)
    prefix_sq_arr = np.zeros(n + 1, dtype=np.float64)
    cdef double[::1] prefix = prefix_arr
    cdef double[::1] prefix_sq = prefix_sq_arr
    cdef Py_ssize_t i, m
    for i in range(n):
        prefix[i + 1] = prefix[i] + values_sorted[i]
        prefix_sq[i + 1] = prefix_sq[i] + values_sorted[i] * values_sorted[i]

    best_prev_arr = np.empty(n + 1, dtype=np.float64)
    best_cur_arr = np.empty(n + 1, dtype=np.float64)
    split_arr = np.zeros((k + 1, n + 1), dtype=np.int64)
    cdef double[::1] best_prev = best_prev_arr
    cdef double[::1] best_cur = best_cur_arr
    cdef long long[:, ::1] split = split_arr

    cdef double s, sq, cost, best, cand
    cdef Py_ssize_t j, arg
    best_prev[0] = 0.0
    for i in range(1, n + 1):
        s = prefix[i]
        sq = prefix_sq[i]
        cost = sq - s * s / i
        best_prev[i] = cost if cost > 0.0 else 0.0

    for j in range(2, k + 1):
        for i in range(n + 1):
            best_cur[i] = INFINITY
        for i in range(j, n + 1):
            best = INFINITY
            arg = j - 1
            for m in range(j - 1, i):
                s = prefix[i] - prefix[m]
                sq = prefix_sq[i] - prefix_sq[m]
                cost = sq - s * s / (i - m)
                if cost < 0.0:
                    cost = 0.0
                cand = best_prev[m] + cost
                if cand < best:
                    best = cand
                    arg = m
            best_cur[i] = best
            split[j, i] = arg
        best_prev, best_cur = best_cur, best_prev

    cdef double sse = best_prev[n]
    bounds = [n]
    i = n
    for j in range(k, 1, -1):
        i = split[j, i]
        bounds.append(i)
    bounds.append(0)
    bounds.reverse()

    labels_arr = np.empty(n, dtype=np.int64)
    centers_arr = np.empty(k, dtype=np.float64)
    cdef long long[::1] labels = labels_arr
    cdef double[::1] centers = centers_arr
    cdef Py_ssize_t c, lo, hi
    for c in range(k):
        lo = bounds[c]
        hi = bounds[c + 1]
        for i in range(lo, hi):
            labels[i] = c
        centers[c] = (prefix[hi] - prefix[lo]) / (hi - lo)
    return labels_arr, centers_arr, float(sse)
