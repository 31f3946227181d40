"""Synthetic annotation campaigns for the convergence experiments.

A Thurstone annotator judges pairs of topics with hidden ground-truth
scores: the truly more general topic wins with probability
Phi(score_gap / noise).  Campaigns run either the active policy (pool of
highest-gain pairs, uniform draws) or uniform random pair selection, and
track the Spearman correlation between the estimated and true orders
after every annotation.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .errors import PoolExhaustedError
from .rating import Annotation, RatingConfig, rank_annotations
from .sampler import SamplerState, draw_pair_for_annotator, refill_pool

POLICIES = ("active", "random")
DEFAULT_BUDGET_FRACTION = 1.0 / 3.0     # of C(n, 2)
DEFAULT_RHO_TARGET = 0.9
DEFAULT_ANNOTATORS = 8
TRUTH_SPREAD = 3.0                      # truth range in prior deviations


@dataclass(frozen=True)
class CampaignResult:
    policy: str
    seed: int
    truth: dict[str, float]
    annotations: tuple[Annotation, ...]
    rho_curve: tuple[tuple[int, float], ...]
    annotations_to_target: int | None
    final_rho: float


def _average_ranks(values) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2.0 + 1.0
        for pos in range(i, j + 1):
            ranks[order[pos]] = shared
        i = j + 1
    return ranks


def spearman(xs, ys) -> float:
    """Tie-aware Spearman rank correlation."""
    if len(xs) != len(ys) or len(xs) < 2:
        raise ValueError("need two equal-length sequences of length >= 2")
    rx = _average_ranks(list(xs))
    ry = _average_ranks(list(ys))
    n = len(rx)
    mean = (n + 1) / 2.0
    cov = sum((a - mean) * (b - mean) for a, b in zip(rx, ry))
    var_x = sum((a - mean) ** 2 for a in rx)
    var_y = sum((b - mean) ** 2 for b in ry)
    if var_x == 0.0 or var_y == 0.0:
        return 0.0
    return cov / math.sqrt(var_x * var_y)


def thurstone_outcome(rng: random.Random, score_x: float, score_y: float,
                      noise: float) -> bool:
    """True when x wins: P = Phi((score_x - score_y) / noise)."""
    p_x = 0.5 * math.erfc(-((score_x - score_y) / noise) / math.sqrt(2.0))
    return rng.random() < p_x


def run_campaign(n_topics: int = 50,
                 budget: int | None = None,
                 policy: str = "active",
                 seed: int = 0,
                 noise: float | None = None,
                 cfg: RatingConfig = RatingConfig(),
                 rho_target: float = DEFAULT_RHO_TARGET,
                 pool_size: int | None = None,
                 n_annotators: int = DEFAULT_ANNOTATORS) -> CampaignResult:
    """Run one synthetic campaign and record the convergence curve.

    Ground-truth scores are drawn uniformly over the prior's +-3 sigma
    range; noise defaults to the performance noise beta.  Deterministic
    for a fixed seed.
    """
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}, got {policy!r}")
    if n_topics < 2:
        raise ValueError("need at least two topics")
    if budget is None:
        budget = int(DEFAULT_BUDGET_FRACTION * n_topics * (n_topics - 1) / 2)
    if noise is None:
        noise = cfg.performance_noise_beta

    rng = random.Random(seed)
    topics = [f"topic{i:03d}" for i in range(n_topics)]
    half_range = TRUTH_SPREAD * cfg.initial_deviation
    truth = {t: rng.uniform(cfg.initial_mean - half_range,
                            cfg.initial_mean + half_range) for t in topics}
    truth_vector = [truth[t] for t in topics]

    state = SamplerState.for_topics(topics, cfg=cfg,
                                    pool_size=pool_size or 50, seed=seed)
    log: list[Annotation] = []
    curve: list[tuple[int, float]] = []
    to_target: int | None = None

    if policy == "active":
        refill_pool(state, log)

    for step in range(1, budget + 1):
        annotator = f"a{(step - 1) % n_annotators}"
        if policy == "active":
            try:
                candidate = draw_pair_for_annotator(state, annotator)
            except PoolExhaustedError:
                refill_pool(state, log)
                try:
                    candidate = draw_pair_for_annotator(state, annotator)
                except PoolExhaustedError:
                    break   # every pair capped: nothing left to learn
            x, y = candidate.pair
        else:
            i, j = rng.sample(range(n_topics), 2)
            x, y = topics[i], topics[j]

        if thurstone_outcome(rng, truth[x], truth[y], noise):
            winner, loser = x, y
        else:
            winner, loser = y, x
        ann = Annotation.judged(annotator, winner, loser)
        log.append(ann)
        if policy == "active":
            state.record_annotation(ann)
            if state.pool_low():
                refill_pool(state, log)

        ranking = rank_annotations(log, topic_ids=topics, cfg=cfg)
        means = ranking.ratings
        rho = spearman([means[t].mean for t in topics], truth_vector)
        curve.append((step, rho))
        if to_target is None and rho >= rho_target:
            to_target = step

    return CampaignResult(policy=policy, seed=seed, truth=truth,
                          annotations=tuple(log), rho_curve=tuple(curve),
                          annotations_to_target=to_target,
                          final_rho=curve[-1][1] if curve else 0.0)
