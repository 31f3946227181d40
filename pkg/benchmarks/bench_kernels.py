"""Benchmark the compiled kernels against the pure-Python fallback.

Run:  python3 benchmarks/bench_kernels.py

Workloads are sized like a full-scale ranking study (~300 topics): an
outcome-sequence rating sweep, a gain scan over every candidate pair, and
the exact 1-D k-means dynamic program with the default elbow range.
"""

from __future__ import annotations

import time

import numpy as np

from pairrank import _purepy

try:
    from pairrank import _speedups
except ImportError:
    _speedups = None

N_TOPICS = 300
N_OUTCOMES = 20_000
PASSES = 4
BETA = 25.0 / 6.0
K_MAX = 12


def _workloads(rng):
    winners = rng.integers(0, N_TOPICS, N_OUTCOMES)
    losers = (winners + rng.integers(1, N_TOPICS, N_OUTCOMES)) % N_TOPICS
    pair_a, pair_b = [], []
    for i in range(N_TOPICS):
        for j in range(i + 1, N_TOPICS):
            pair_a.append(i)
            pair_b.append(j)
    return {
        "winners": winners.astype(np.int64),
        "losers": losers.astype(np.int64),
        "pair_a": np.array(pair_a, dtype=np.int64),
        "pair_b": np.array(pair_b, dtype=np.int64),
        "mu": rng.normal(25.0, 8.0, N_TOPICS),
        "sigma": rng.uniform(1.0, 8.0, N_TOPICS),
        "values": np.sort(rng.normal(25.0, 8.0, N_TOPICS + 1)),
    }


def bench_sweep(backend, w):
    mu = np.full(N_TOPICS, 25.0)
    sigma = np.full(N_TOPICS, 25.0 / 3.0)
    start = time.perf_counter()
    backend.trueskill_sweep(mu, sigma, w["winners"], w["losers"], BETA, 0.0, PASSES)
    return time.perf_counter() - start, (mu, sigma)


def bench_gain(backend, w):
    start = time.perf_counter()
    gains, probs = backend.gain_scan(w["mu"].copy(), w["sigma"].copy(),
                                     w["pair_a"], w["pair_b"], BETA, 0.0)
    return time.perf_counter() - start, (gains, probs)


def bench_kmeans(backend, w):
    start = time.perf_counter()
    sses = []
    for k in range(1, K_MAX + 1):
        _, _, sse = backend.kmeans_1d(w["values"], k)
        sses.append(sse)
    return time.perf_counter() - start, (np.array(sses),)


BENCHES = [
    (f"trueskill_sweep  ({N_OUTCOMES} outcomes x {PASSES} passes, n={N_TOPICS})",
     bench_sweep),
    (f"gain_scan        ({N_TOPICS * (N_TOPICS - 1) // 2} candidate pairs)",
     bench_gain),
    (f"kmeans_1d        (n={N_TOPICS + 1}, k=1..{K_MAX})", bench_kmeans),
]


def main():
    rng = np.random.default_rng(0)
    w = _workloads(rng)
    print(f"{'kernel':54s} {'pure-python':>12s} {'compiled':>12s} "
          f"{'speedup':>8s} {'max |diff|':>11s}")
    for label, bench in BENCHES:
        t_pure, out_pure = bench(_purepy, w)
        if _speedups is None:
            print(f"{label:54s} {t_pure * 1e3:10.1f}ms {'n/a':>12s}")
            continue
        t_fast, out_fast = bench(_speedups, w)
        diff = max(float(np.max(np.abs(np.asarray(a, dtype=np.float64)
                                       - np.asarray(b, dtype=np.float64))))
                   for a, b in zip(out_pure, out_fast))
        print(f"{label:54s} {t_pure * 1e3:10.1f}ms {t_fast * 1e3:10.1f}ms "
              f"{t_pure / t_fast:7.1f}x {diff:11.2e}")
    if _speedups is None:
        print("\ncompiled kernels not built; showing fallback timings only")


if __name__ == "__main__":
    main()
