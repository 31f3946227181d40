"""Pure-Python kernels: the reference implementation of the hot loops.

`pairrank.kernels` selects these at import time whenever the compiled
`pairrank._speedups` extension is unavailable (or when the
``PAIRRANK_PURE_PYTHON`` environment variable is set).  Both backends
implement the same functions with the same operation order, so results
agree to the last bit on a common libm.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "pure-python"

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)


def v(t: float) -> float:
    """Mean correction phi(t)/Phi(t) for a win observation at offset t."""
    if t < -6.0:
        # Asymptotic expansion of the Mills ratio; the direct quotient
        # degrades to 0/0 in the deep negative tail.
        tt = t * t
        tail = (1.0 / tt) * (1.0 - (3.0 / tt) * (1.0 - (5.0 / tt) * (
            1.0 - (7.0 / tt) * (1.0 - (9.0 / tt) * (1.0 - 11.0 / tt)))))
        return -t / (1.0 - tail)
    phi = math.exp(-0.5 * t * t) * _INV_SQRT_2PI
    big_phi = 0.5 * math.erfc(-t / _SQRT2)
    return phi / big_phi


def w(t: float) -> float:
    """Variance correction v(t)*(v(t)+t); lies in the open interval (0,1)."""
    if t < -6.0:
        # w = v*(v+t) with v+t expanded analytically to dodge cancellation.
        tt = t * t
        tail = (1.0 / tt) * (1.0 - (3.0 / tt) * (1.0 - (5.0 / tt) * (
            1.0 - (7.0 / tt) * (1.0 - (9.0 / tt) * (1.0 - 11.0 / tt)))))
        series = 1.0 - tail
        return tt * tail / (series * series)
    vt = v(t)
    return vt * (vt + t)


def update_one(mu_w: float, sig_w: float, mu_l: float, sig_l: float,
               beta: float, tau: float) -> tuple[float, float, float, float]:
    """One winner/loser rating update; returns (mu_w, sig_w, mu_l, sig_l)."""
    var_w = sig_w * sig_w + tau * tau
    var_l = sig_l * sig_l + tau * tau
    c2 = 2.0 * beta * beta + var_w + var_l
    c = math.sqrt(c2)
    t = (mu_w - mu_l) / c
    vt = v(t)
    wt = w(t)
    new_mu_w = mu_w + (var_w / c) * vt
    new_mu_l = mu_l - (var_l / c) * vt
    new_sig_w = math.sqrt(var_w * (1.0 - (var_w / c2) * wt))
    new_sig_l = math.sqrt(var_l * (1.0 - (var_l / c2) * wt))
    return new_mu_w, new_sig_w, new_mu_l, new_sig_l


def trueskill_sweep(mu: np.ndarray, sigma: np.ndarray,
                    winners: np.ndarray, losers: np.ndarray,
                    beta: float, tau: float, passes: int) -> None:
    """Apply an outcome sequence to the rating arrays in place, `passes` times."""
    mus = mu.tolist()
    sigmas = sigma.tolist()
    win = winners.tolist()
    lose = losers.tolist()
    for _ in range(passes):
        for k in range(len(win)):
            a = win[k]
            b = lose[k]
            mus[a], sigmas[a], mus[b], sigmas[b] = update_one(
                mus[a], sigmas[a], mus[b], sigmas[b], beta, tau)
    mu[:] = mus
    sigma[:] = sigmas


def _kl_normal(mu1: float, sig1: float, mu0: float, sig0: float) -> float:
    d = mu1 - mu0
    r = sig1 / sig0
    return math.log(sig0 / sig1) + 0.5 * (r * r + d * d / (sig0 * sig0)) - 0.5


def gain_scan(mu: np.ndarray, sigma: np.ndarray,
              pair_a: np.ndarray, pair_b: np.ndarray,
              beta: float, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Expected KL information gain and P(a wins) for each candidate pair."""
    m = len(pair_a)
    gains = np.empty(m, dtype=np.float64)
    probs = np.empty(m, dtype=np.float64)
    mus = mu.tolist()
    sigmas = sigma.tolist()
    ia = pair_a.tolist()
    ib = pair_b.tolist()
    for k in range(m):
        a = ia[k]
        b = ib[k]
        mu_a, sig_a = mus[a], sigmas[a]
        mu_b, sig_b = mus[b], sigmas[b]
        c = math.sqrt(2.0 * beta * beta + sig_a * sig_a + sig_b * sig_b)
        p = 0.5 * math.erfc(-((mu_a - mu_b) / c) / _SQRT2)
        a_mu1, a_sig1, b_mu1, b_sig1 = update_one(mu_a, sig_a, mu_b, sig_b, beta, tau)
        b_mu2, b_sig2, a_mu2, a_sig2 = update_one(mu_b, sig_b, mu_a, sig_a, beta, tau)
        gain_a_wins = (_kl_normal(a_mu1, a_sig1, mu_a, sig_a)
                       + _kl_normal(b_mu1, b_sig1, mu_b, sig_b))
        gain_b_wins = (_kl_normal(a_mu2, a_sig2, mu_a, sig_a)
                       + _kl_normal(b_mu2, b_sig2, mu_b, sig_b))
        gains[k] = p * gain_a_wins + (1.0 - p) * gain_b_wins
        probs[k] = p
    return gains, probs


def kmeans_1d(values_sorted: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Globally optimal 1-D k-means over pre-sorted values.

    Dynamic program over contiguous segments (optimal 1-D clusters are
    contiguous in sorted order).  Returns (labels, centers ascending, sse);
    labels index into `values_sorted`.
    """
    n = len(values_sorted)
    xs = values_sorted.tolist()
    prefix = [0.0] * (n + 1)
    prefix_sq = [0.0] * (n + 1)
    for i in range(n):
        prefix[i + 1] = prefix[i] + xs[i]
        prefix_sq[i + 1] = prefix_sq[i] + xs[i] * xs[i]

    def seg_cost(lo: int, hi: int) -> float:
        # Within-segment SSE for xs[lo:hi] (hi exclusive).
        s = prefix[hi] - prefix[lo]
        sq = prefix_sq[hi] - prefix_sq[lo]
        cost = sq - s * s / (hi - lo)
        return cost if cost > 0.0 else 0.0

    big = math.inf
    # best[j][i]: min SSE of splitting xs[:i] into j clusters; split[j][i]: arg.
    best_prev = [0.0] + [seg_cost(0, i) for i in range(1, n + 1)]
    split = [[0] * (n + 1) for _ in range(k + 1)]
    for j in range(2, k + 1):
        best_cur = [big] * (n + 1)
        for i in range(j, n + 1):
            best = big
            arg = j - 1
            for m in range(j - 1, i):
                cand = best_prev[m] + seg_cost(m, i)
                if cand < best:
                    best = cand
                    arg = m
            best_cur[i] = best
            split[j][i] = arg
        best_prev = best_cur

    sse = best_prev[n]
    bounds = [n]
    i = n
    for j in range(k, 1, -1):
        i = split[j][i]
        bounds.append(i)
    bounds.append(0)
    bounds.reverse()

    labels = np.empty(n, dtype=np.int64)
    centers = np.empty(k, dtype=np.float64)
    for c in range(k):
        lo, hi = bounds[c], bounds[c + 1]
        labels[lo:hi] = c
        centers[c] = (prefix[hi] - prefix[lo]) / (hi - lo)
    return labels, centers, float(sse)
