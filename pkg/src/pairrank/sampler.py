"""Active pair selection: propose the most informative next comparisons.

The sampler keeps the per-topic score posteriors, scores every candidate
pair by expected information gain (posterior KL averaged over the two
possible outcomes), and maintains a pool of top pairs that annotators draw
from at random.  While any topic is still uncompared, batches fall back to
a random maximal matching so the comparison graph gets connected first.

A single coordinating writer owns a SamplerState; draws, returns and
annotation records must be serialized through it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import IntegrityError, PoolExhaustedError
from .rating import (
    Annotation,
    OUTCOME_SKIP,
    RatingConfig,
    SkillRating,
    canonical_pair,
    rank_annotations,
)

DEFAULT_POOL_SIZE = 50
REPEAT_CAP = 3      # max annotations per pair
SKIP_CAP = 3        # skips before a pair is parked


@dataclass(frozen=True)
class PairCandidate:
    """An unordered candidate pair, stored canonically with topic_a < topic_b."""

    topic_a: str
    topic_b: str
    expected_gain: float
    win_prob_a: float

    def __post_init__(self):
        if self.topic_a >= self.topic_b:
            raise ValueError(
                f"candidate not canonical: {self.topic_a!r} >= {self.topic_b!r}")
        if self.expected_gain < 0.0:
            raise ValueError("expected_gain must be >= 0")

    @property
    def pair(self) -> tuple[str, str]:
        return (self.topic_a, self.topic_b)


@dataclass
class SamplerState:
    """Posteriors, pair bookkeeping and the current annotation pool."""

    cfg: RatingConfig = field(default_factory=RatingConfig)
    pool_size: int = DEFAULT_POOL_SIZE
    repeat_cap: int = REPEAT_CAP
    skip_cap: int = SKIP_CAP
    seed: int = 0

    posteriors: dict[str, SkillRating] = field(default_factory=dict)
    seen_counts: dict[tuple[str, str], int] = field(default_factory=dict)
    skip_counts: dict[tuple[str, str], int] = field(default_factory=dict)
    pool: list[PairCandidate] = field(default_factory=list)
    checked_out: dict[tuple[str, str], str] = field(default_factory=dict)
    seen_by: dict[str, set[tuple[str, str]]] = field(default_factory=dict)

    def __post_init__(self):
        if self.pool_size < 1:
            raise ValueError("pool_size must be >= 1")
        self.rng = random.Random(self.seed)

    @classmethod
    def for_topics(cls, topic_ids: Iterable[str], **kwargs) -> "SamplerState":
        state = cls(**kwargs)
        for tid in topic_ids:
            state.add_topic(tid)
        return state

    def add_topic(self, topic_id: str) -> None:
        """Register a new topic at the prior; existing posteriors untouched."""
        if topic_id in self.posteriors:
            raise IntegrityError(f"topic {topic_id!r} already registered")
        self.posteriors[topic_id] = self.cfg.prior()

    def comparison_count(self, topic_id: str) -> int:
        return sum(count for pair, count in self.seen_counts.items()
                   if topic_id in pair)

    def eligible(self, pair: tuple[str, str]) -> bool:
        """A pair may enter the pool: below the repeat cap and not parked."""
        return (self.seen_counts.get(pair, 0) < self.repeat_cap
                and self.skip_counts.get(pair, 0) < self.skip_cap)

    def record_annotation(self, ann: Annotation) -> None:
        """Update pair bookkeeping after a judgment; skip returns the pair."""
        pair = (ann.topic_a, ann.topic_b)
        if ann.topic_a not in self.posteriors or ann.topic_b not in self.posteriors:
            raise IntegrityError(f"annotation references unknown topic in {pair}")
        self.checked_out.pop(pair, None)
        if ann.outcome == OUTCOME_SKIP:
            self.skip_counts[pair] = self.skip_counts.get(pair, 0) + 1
            if self.skip_counts[pair] >= self.skip_cap:
                self.pool = [c for c in self.pool if c.pair != pair]
            return
        self.seen_counts[pair] = self.seen_counts.get(pair, 0) + 1
        self.pool = [c for c in self.pool if c.pair != pair]

    def release_pair(self, pair: tuple[str, str]) -> None:
        """Return a checked-out pair to circulation (checkout expiry)."""
        self.checked_out.pop(pair, None)

    def pool_low(self) -> bool:
        return len(self.pool) <= self.pool_size // 2


def refresh_posterior(state: SamplerState, annotations: Iterable[Annotation],
                      cfg: RatingConfig | None = None) -> SamplerState:
    """Recompute every topic's posterior from the full annotation log.

    Equivalent to a from-scratch matrix ranking over the non-tie
    annotations; topics without comparisons sit at the prior.
    """
    cfg = cfg or state.cfg
    annotations = list(annotations)
    known = sorted(state.posteriors)
    for ann in annotations:
        if ann.topic_a not in state.posteriors or ann.topic_b not in state.posteriors:
            raise IntegrityError(
                f"annotation references unknown topic: {ann.topic_a!r}/{ann.topic_b!r}")
    ranking = rank_annotations(annotations, topic_ids=known, cfg=cfg)
    state.posteriors = ranking.ratings
    return state


def _score_pairs(state: SamplerState, pairs: Sequence[tuple[str, str]],
                 cfg: RatingConfig) -> list[PairCandidate]:
    if not pairs:
        return []
    index = {tid: i for i, tid in enumerate(state.posteriors)}
    mu = np.array([r.mean for r in state.posteriors.values()], dtype=np.float64)
    sigma = np.array([r.deviation for r in state.posteriors.values()], dtype=np.float64)
    ia = np.array([index[a] for a, _ in pairs], dtype=np.int64)
    ib = np.array([index[b] for _, b in pairs], dtype=np.int64)
    gains, probs = kernels.gain_scan(mu, sigma, ia, ib,
                                     cfg.performance_noise_beta, cfg.dynamics_tau)
    return [PairCandidate(a, b, float(g), float(p))
            for (a, b), g, p in zip(pairs, gains, probs)]


def expected_information_gain(pair: tuple[str, str], state: SamplerState,
                              cfg: RatingConfig | None = None) -> PairCandidate:
    """Score one pair: P(a wins) and the outcome-averaged posterior KL."""
    cfg = cfg or state.cfg
    x, y = pair
    if x not in state.posteriors or y not in state.posteriors:
        raise IntegrityError(f"unknown topic in pair {pair!r}")
    return _score_pairs(state, [canonical_pair(x, y)], cfg)[0]


def _cold_start_matching(state: SamplerState) -> list[tuple[str, str]]:
    """Random maximal matching that covers uncompared topics first."""
    cold = sorted(t for t in state.posteriors if state.comparison_count(t) == 0)
    warm = sorted(t for t in state.posteriors if state.comparison_count(t) > 0)
    state.rng.shuffle(cold)
    pairs = [canonical_pair(cold[i], cold[i + 1])
             for i in range(0, len(cold) - 1, 2)]
    if len(cold) % 2 and warm:
        pairs.append(canonical_pair(cold[-1], state.rng.choice(warm)))
    return [p for p in pairs if state.eligible(p)]


def select_batch(state: SamplerState, k: int,
                 cfg: RatingConfig | None = None) -> list[PairCandidate]:
    """Pick the k most informative annotatable pairs.

    While any topic has zero comparisons the batch starts as a random
    maximal matching over the cold topics; remaining slots (and the steady
    state) take the highest expected-gain pairs below the repeat cap.
    Deterministic given the state's seed.
    """
    cfg = cfg or state.cfg
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    topics = sorted(state.posteriors)
    if len(topics) < 2:
        return []
    chosen: list[tuple[str, str]] = []
    taken: set[tuple[str, str]] = set()
    for pair in _cold_start_matching(state):
        if len(chosen) == k:
            break
        chosen.append(pair)
        taken.add(pair)
    if len(chosen) < k:
        eligible = [(a, b)
                    for i, a in enumerate(topics) for b in topics[i + 1:]
                    if (a, b) not in taken and state.eligible((a, b))]
        scored = _score_pairs(state, eligible, cfg)
        scored.sort(key=lambda c: (-c.expected_gain, c.topic_a, c.topic_b))
        chosen.extend(c.pair for c in scored[:k - len(chosen)])
    return _score_pairs(state, chosen, cfg)


def refill_pool(state: SamplerState, annotations: Iterable[Annotation],
                cfg: RatingConfig | None = None) -> SamplerState:
    """Refresh posteriors from the log and rebuild the pool."""
    refresh_posterior(state, annotations, cfg)
    if len(state.posteriors) >= 2:
        state.pool = select_batch(state, state.pool_size, cfg)
    else:
        state.pool = []
    return state


def draw_pair_for_annotator(state: SamplerState, annotator: str,
                            seed: int | None = None) -> PairCandidate:
    """Uniform draw from pool entries this annotator can still take.

    Excludes pairs checked out by anyone and pairs already shown to this
    annotator; the drawn pair stays checked out until answered, skipped or
    expired.  Raises PoolExhaustedError when nothing is drawable.
    """
    seen = state.seen_by.setdefault(annotator, set())
    available = [c for c in state.pool
                 if c.pair not in state.checked_out and c.pair not in seen]
    if not available:
        raise PoolExhaustedError(f"no drawable pair for annotator {annotator!r}")
    rng = state.rng if seed is None else random.Random(seed)
    candidate = rng.choice(available)
    state.checked_out[candidate.pair] = annotator
    seen.add(candidate.pair)
    return candidate


def pool_to_jsonl(state: SamplerState) -> str:
    """Audit export: one line-delimited record per pool entry."""
    import json

    return "".join(
        json.dumps({"topic_a": c.topic_a, "topic_b": c.topic_b,
                    "expected_gain": c.expected_gain,
                    "win_prob_a": c.win_prob_a}) + "\n"
        for c in state.pool)
