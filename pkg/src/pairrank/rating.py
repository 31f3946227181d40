"""Gaussian skill-rating engine for pairwise generality judgments.

Each topic's latent generality score is tracked as a normal posterior
(mean, deviation).  Win/loss observations move the two posteriors with the
classic two-player, no-draw truncated-Gaussian update; a comparison count
matrix is replayed into an outcome sequence to produce the full ranking.

Ties and skips never reach this module's math: callers exclude them when
building the comparison matrix.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, IntegrityError

# Annotation outcomes as stored in the append-only log.
OUTCOME_A_WINS = "a_wins"
OUTCOME_B_WINS = "b_wins"
OUTCOME_TIE = "tie"
OUTCOME_SKIP = "skip"
OUTCOMES = (OUTCOME_A_WINS, OUTCOME_B_WINS, OUTCOME_TIE, OUTCOME_SKIP)

#: Outcomes that feed the comparison matrix (ties validate clustering only,
#: skips are pure workflow events).
RANKED_OUTCOMES = frozenset({OUTCOME_A_WINS, OUTCOME_B_WINS})

DEFAULT_PASSES = 4


def canonical_pair(x: str, y: str) -> tuple[str, str]:
    """Return the unordered pair (x, y) in canonical a < b form."""
    if x == y:
        raise ValueError(f"pair members must differ, got {x!r} twice")
    return (x, y) if x < y else (y, x)


@dataclass(frozen=True)
class Annotation:
    """One judged pair, in canonical topic_a < topic_b form."""

    annotator_id: str
    topic_a: str
    topic_b: str
    outcome: str
    timestamp: str = ""
    annotation_id: str = ""

    def __post_init__(self):
        if self.topic_a >= self.topic_b:
            raise ValueError(
                f"annotation pair not canonical: {self.topic_a!r} >= {self.topic_b!r}")
        if self.outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {self.outcome!r}")

    @classmethod
    def judged(cls, annotator_id: str, winner: str, loser: str, *,
               timestamp: str = "", annotation_id: str = "") -> "Annotation":
        """Build a win/loss annotation from winner/loser order."""
        a, b = canonical_pair(winner, loser)
        outcome = OUTCOME_A_WINS if winner == a else OUTCOME_B_WINS
        return cls(annotator_id, a, b, outcome, timestamp, annotation_id)

    @property
    def winner(self) -> str | None:
        if self.outcome == OUTCOME_A_WINS:
            return self.topic_a
        if self.outcome == OUTCOME_B_WINS:
            return self.topic_b
        return None

    @property
    def loser(self) -> str | None:
        if self.outcome == OUTCOME_A_WINS:
            return self.topic_b
        if self.outcome == OUTCOME_B_WINS:
            return self.topic_a
        return None


@dataclass(frozen=True)
class SkillRating:
    """Gaussian posterior over a topic's generality score."""

    mean: float
    deviation: float

    def __post_init__(self):
        if not math.isfinite(self.mean):
            raise ValueError(f"rating mean must be finite, got {self.mean!r}")
        if not (self.deviation > 0.0 and math.isfinite(self.deviation)):
            raise ValueError(f"rating deviation must be > 0, got {self.deviation!r}")


@dataclass(frozen=True)
class RatingConfig:
    """Scale of the rating model.

    Defaults are the canonical TrueSkill scale: prior N(25, (25/3)^2),
    performance noise beta = 25/6.  Batch re-ranking keeps tau = 0 so
    deviations only shrink; the online service mode adds a small dynamics
    noise (tau = 25/300) so live ratings stay adaptive.
    """

    initial_mean: float = 25.0
    initial_deviation: float = 25.0 / 3.0
    performance_noise_beta: float = 25.0 / 6.0
    dynamics_tau: float = 0.0

    def __post_init__(self):
        if not (self.performance_noise_beta > 0.0
                and math.isfinite(self.performance_noise_beta)):
            raise ConfigError("performance_noise_beta must be > 0")
        if not (self.initial_deviation > 0.0 and math.isfinite(self.initial_deviation)):
            raise ConfigError("initial_deviation must be > 0")
        if not (self.dynamics_tau >= 0.0 and math.isfinite(self.dynamics_tau)):
            raise ConfigError("dynamics_tau must be >= 0")
        if not math.isfinite(self.initial_mean):
            raise ConfigError("initial_mean must be finite")

    @classmethod
    def online(cls) -> "RatingConfig":
        """Service-mode config with a small dynamics noise."""
        return cls(dynamics_tau=25.0 / 300.0)

    def prior(self) -> SkillRating:
        return SkillRating(self.initial_mean, self.initial_deviation)


def truncated_gaussian_v(t: float) -> float:
    """phi(t)/Phi(t): additive mean correction after a win observed at offset t.

    Strictly positive and strictly decreasing; for t << 0 the quotient is
    evaluated through the asymptotic expansion of the Mills ratio.
    """
    if not math.isfinite(t):
        raise ValueError(f"offset must be finite, got {t!r}")
    return kernels.v(t)


def truncated_gaussian_w(t: float) -> float:
    """v(t)*(v(t)+t): multiplicative variance correction, in (0, 1)."""
    if not math.isfinite(t):
        raise ValueError(f"offset must be finite, got {t!r}")
    return kernels.w(t)


def update_pair(winner: SkillRating, loser: SkillRating,
                cfg: RatingConfig = RatingConfig()) -> tuple[SkillRating, SkillRating]:
    """Apply one win/loss observation; returns (winner', loser').

    Dynamics noise is folded into both variances first, then the standard
    truncated-Gaussian corrections move the means toward the observed order
    and shrink both deviations.
    """
    mu_w, sig_w, mu_l, sig_l = kernels.update_one(
        winner.mean, winner.deviation, loser.mean, loser.deviation,
        cfg.performance_noise_beta, cfg.dynamics_tau)
    return SkillRating(mu_w, sig_w), SkillRating(mu_l, sig_l)


class ComparisonMatrix:
    """Square count matrix: counts[i][j] = times topic i beat topic j."""

    def __init__(self, topic_ids: Sequence[str], counts):
        self.topic_ids = list(topic_ids)
        n = len(self.topic_ids)
        if len(set(self.topic_ids)) != n:
            raise ValueError("topic_ids must be unique")
        arr = np.asarray(counts, dtype=np.int64)
        if arr.shape != (n, n):
            raise ValueError(f"counts must be {n}x{n}, got {arr.shape}")
        if n and np.any(np.diagonal(arr) != 0):
            raise ValueError("diagonal must be zero")
        if np.any(arr < 0):
            raise ValueError("counts must be non-negative")
        self.counts = arr

    @classmethod
    def empty(cls, topic_ids: Sequence[str]) -> "ComparisonMatrix":
        n = len(topic_ids)
        return cls(topic_ids, np.zeros((n, n), dtype=np.int64))

    @classmethod
    def from_annotations(cls, annotations: Iterable[Annotation],
                         topic_ids: Sequence[str] | None = None) -> "ComparisonMatrix":
        """Aggregate win/loss annotations; ties and skips are dropped.

        With an explicit `topic_ids` universe, annotations referencing
        unknown topics raise IntegrityError; otherwise the universe is the
        union of topics seen in the log.
        """
        annotations = list(annotations)
        if topic_ids is None:
            seen: set[str] = set()
            for ann in annotations:
                seen.add(ann.topic_a)
                seen.add(ann.topic_b)
            topic_ids = sorted(seen)
        index = {tid: i for i, tid in enumerate(topic_ids)}
        n = len(index)
        counts = np.zeros((n, n), dtype=np.int64)
        for ann in annotations:
            if ann.topic_a not in index or ann.topic_b not in index:
                raise IntegrityError(
                    f"annotation references unknown topic: {ann.topic_a!r}/{ann.topic_b!r}")
            if ann.outcome not in RANKED_OUTCOMES:
                continue
            counts[index[ann.winner], index[ann.loser]] += 1
        return cls(topic_ids, counts)

    def to_csv(self) -> str:
        """Serialize with a header row/column of topic IDs."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([""] + self.topic_ids)
        for i, tid in enumerate(self.topic_ids):
            writer.writerow([tid] + [int(x) for x in self.counts[i]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ComparisonMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            return cls.empty([])
        header = rows[0][1:]
        counts = []
        for row in rows[1:]:
            if not row:
                continue
            if row[0] != header[len(counts)]:
                raise ValueError(
                    f"row label {row[0]!r} does not match header {header[len(counts)]!r}")
            counts.append([int(x) for x in row[1:]])
        return cls(header, counts)

    def expand(self) -> tuple[np.ndarray, np.ndarray]:
        """Round-robin outcome sequence: one outcome per pair per cycle.

        Pairs advance in lexicographic order of (winner topic, loser topic)
        so the sequence, hence the resulting ratings, is invariant under
        permutations of the matrix's row order.
        """
        order = sorted(range(len(self.topic_ids)), key=lambda i: self.topic_ids[i])
        live = [(i, j) for i in order for j in order
                if i != j and self.counts[i, j] > 0]
        remaining = {pair: int(self.counts[pair]) for pair in live}
        winners: list[int] = []
        losers: list[int] = []
        while live:
            nxt = []
            for pair in live:
                winners.append(pair[0])
                losers.append(pair[1])
                remaining[pair] -= 1
                if remaining[pair]:
                    nxt.append(pair)
            live = nxt
        return (np.asarray(winners, dtype=np.int64),
                np.asarray(losers, dtype=np.int64))


@dataclass(frozen=True)
class Ranking:
    """Topics ordered by rating mean descending (ties: topic_id ascending)."""

    entries: tuple[tuple[str, SkillRating], ...] = ()

    @classmethod
    def from_ratings(cls, ratings: Mapping[str, SkillRating]) -> "Ranking":
        ordered = sorted(ratings.items(), key=lambda kv: (-kv[1].mean, kv[0]))
        return cls(tuple(ordered))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ratings(self) -> dict[str, SkillRating]:
        return {tid: rating for tid, rating in self.entries}

    def positions(self) -> dict[str, int]:
        """1-based position per topic."""
        return {tid: pos for pos, (tid, _) in enumerate(self.entries, start=1)}

    def position(self, topic_id: str) -> int:
        for pos, (tid, _) in enumerate(self.entries, start=1):
            if tid == topic_id:
                return pos
        raise IntegrityError(f"topic {topic_id!r} not in ranking")

    def to_tsv(self) -> str:
        lines = []
        for pos, (tid, rating) in enumerate(self.entries, start=1):
            lines.append(f"{pos}\t{tid}\t{rating.mean:.6f}\t{rating.deviation:.6f}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_tsv(cls, text: str) -> "Ranking":
        entries = []
        for line in text.splitlines():
            if not line.strip():
                continue
            _pos, tid, mean, dev = line.split("\t")
            entries.append((tid, SkillRating(float(mean), float(dev))))
        return cls(tuple(entries))


def rank_from_matrix(matrix: ComparisonMatrix,
                     cfg: RatingConfig = RatingConfig(),
                     passes: int = DEFAULT_PASSES) -> Ranking:
    """Replay the comparison matrix into ratings and sort into a Ranking.

    The outcome sequence from `ComparisonMatrix.expand` is applied
    `passes` times from the prior; fully deterministic for fixed inputs.
    """
    if passes < 1:
        raise ValueError(f"passes must be >= 1, got {passes}")
    n = len(matrix.topic_ids)
    if n == 0:
        return Ranking()
    mu = np.full(n, cfg.initial_mean, dtype=np.float64)
    sigma = np.full(n, cfg.initial_deviation, dtype=np.float64)
    winners, losers = matrix.expand()
    if len(winners):
        kernels.trueskill_sweep(mu, sigma, winners, losers,
                                cfg.performance_noise_beta, cfg.dynamics_tau,
                                passes)
    ratings = {tid: SkillRating(float(mu[i]), float(sigma[i]))
               for i, tid in enumerate(matrix.topic_ids)}
    return Ranking.from_ratings(ratings)


def rank_annotations(annotations: Iterable[Annotation],
                     topic_ids: Sequence[str] | None = None,
                     cfg: RatingConfig = RatingConfig(),
                     passes: int = DEFAULT_PASSES) -> Ranking:
    """Convenience: comparison matrix from a log, then rank_from_matrix."""
    matrix = ComparisonMatrix.from_annotations(annotations, topic_ids)
    return rank_from_matrix(matrix, cfg, passes)


def rank_stability_curve(annotations: Sequence[Annotation], window: int,
                         cfg: RatingConfig = RatingConfig(),
                         passes: int = DEFAULT_PASSES,
                         topic_ids: Sequence[str] | None = None,
                         ) -> list[tuple[int, float]]:
    """Mean absolute position change per successive annotation window.

    Rankings are recomputed on the cumulative log at each window boundary
    and compared against the previous boundary's positions; the first
    window is compared against the prior-only ranking.  A trailing partial
    window counts as a window; an empty log yields an empty curve.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    annotations = list(annotations)
    if not annotations:
        return []
    if topic_ids is None:
        universe: set[str] = set()
        for ann in annotations:
            universe.add(ann.topic_a)
            universe.add(ann.topic_b)
        topic_ids = sorted(universe)
    prior = {tid: cfg.prior() for tid in topic_ids}
    prev_positions = Ranking.from_ratings(prior).positions()
    curve: list[tuple[int, float]] = []
    boundary = window
    while boundary - window < len(annotations):
        upto = min(boundary, len(annotations))
        ranking = rank_annotations(annotations[:upto], topic_ids, cfg, passes)
        positions = ranking.positions()
        change = (sum(abs(positions[t] - prev_positions[t]) for t in positions)
                  / len(positions))
        curve.append((upto, change))
        prev_positions = positions
        boundary += window
    return curve
