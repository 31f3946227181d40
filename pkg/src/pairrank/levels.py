"""Discretize the continuous ranking into taxonomy levels.

1-D k-means over the rating means, solved exactly by dynamic programming
(optimal 1-D clusters are contiguous in sorted order), so there is no seed
sensitivity anywhere: the elbow report, the level assignments and the
distribution statistics are all deterministic functions of their inputs.

Level 1 is the most general stratum (highest cluster center).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import IntegrityError
from .rating import Ranking, canonical_pair


@dataclass(frozen=True)
class LevelAssignment:
    """Discrete level for one topic; level 1 = most general."""

    topic_id: str
    level: int
    cluster_center: float


@dataclass(frozen=True)
class ElbowReport:
    k_candidates: tuple[int, ...]
    sse: tuple[float, ...]
    chosen_k: int


@dataclass(frozen=True)
class LevelDistribution:
    """Per-level topic counts, plain and frequency-weighted."""

    levels: tuple[int, ...]
    topic_counts: tuple[int, ...]
    weighted_counts: tuple[int, ...]
    mean_level: float | None
    weighted_mean_level: float | None


def kmeans_1d_exact(values: Sequence[float], k: int):
    """Globally optimal 1-D k-means.

    Returns (assignments, centers, sse) where `centers` is sorted
    descending and assignments[i] indexes into it for values[i].
    """
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if not (1 <= k <= n):
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if not np.all(np.isfinite(values)):
        raise ValueError("values must be finite")
    order = np.argsort(values, kind="stable")
    labels_sorted, centers_asc, sse = kernels.kmeans_1d(values[order], k)
    # Flip to descending-center numbering: cluster 0 = highest center.
    assignments = np.empty(n, dtype=np.int64)
    assignments[order] = (k - 1) - labels_sorted
    centers = centers_asc[::-1].copy()
    return assignments, centers, sse


def sse_curve(values: Sequence[float], k_min: int, k_max: int) -> list[float]:
    return [kmeans_1d_exact(values, k)[2] for k in range(k_min, k_max + 1)]


def choose_k_elbow(values: Sequence[float], k_min: int = 2, k_max: int = 12) -> ElbowReport:
    """Pick k at the knee of the SSE curve.

    The knee is the candidate with maximum perpendicular distance from the
    straight line joining the curve's endpoints; ties resolve to the
    smaller k.  All-equal values short-circuit to k = 1.
    """
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if not (1 <= k_min < k_max <= n):
        raise ValueError(f"need 1 <= k_min < k_max <= {n}, got [{k_min}, {k_max}]")
    if np.all(values == values[0]):
        return ElbowReport((1,), (0.0,), 1)
    ks = list(range(k_min, k_max + 1))
    sses = sse_curve(values, k_min, k_max)
    x0, y0 = float(ks[0]), sses[0]
    x1, y1 = float(ks[-1]), sses[-1]
    dx, dy = x1 - x0, y1 - y0
    norm = (dx * dx + dy * dy) ** 0.5
    best_k, best_dist = ks[0], -1.0
    for k, sse in zip(ks, sses):
        dist = abs(dy * (k - x0) - dx * (sse - y0)) / norm
        if dist > best_dist:
            best_k, best_dist = k, dist
    return ElbowReport(tuple(ks), tuple(sses), best_k)


def choose_k_auto(values: Sequence[float], k_max: int = 12) -> ElbowReport:
    """Elbow selection with the search range clamped to the data."""
    values = np.asarray(values, dtype=np.float64)
    distinct = len(np.unique(values))
    if distinct <= 2:
        k = distinct if distinct else 1
        sse = kmeans_1d_exact(values, k)[2] if len(values) else 0.0
        return ElbowReport((k,), (sse,), k)
    hi = min(k_max, distinct)
    if hi < 3:
        return choose_k_elbow(values, 1, hi)
    return choose_k_elbow(values, 2, hi)


def assign_levels(ranking: Ranking, k: int) -> list[LevelAssignment]:
    """Cluster the ranking's means and map clusters to levels 1..k.

    Clustering runs over the distinct mean values, so topics with identical
    means always share a level; k must not exceed the number of distinct
    means.
    """
    if not len(ranking):
        raise ValueError("ranking is empty")
    means = [rating.mean for _, rating in ranking.entries]
    distinct = sorted(set(means))
    if not (1 <= k <= len(distinct)):
        raise ValueError(f"k must be in [1, {len(distinct)}] "
                         f"(distinct means), got {k}")
    assignments, centers, _sse = kmeans_1d_exact(distinct, k)
    cluster_of = {value: int(c) for value, c in zip(distinct, assignments)}
    return [LevelAssignment(tid, cluster_of[rating.mean] + 1,
                            float(centers[cluster_of[rating.mean]]))
            for tid, rating in ranking.entries]


def tie_consistency(assignments: Iterable[LevelAssignment],
                    tie_pairs: Iterable[tuple[str, str]]) -> tuple[float, float]:
    """Fraction of tied pairs in the same level / within one level.

    Duplicate pairs are collapsed first; returns (0.0, 0.0) when no tie
    pairs remain.
    """
    level_of = {a.topic_id: a.level for a in assignments}
    unique = {canonical_pair(x, y) for x, y in tie_pairs}
    if not unique:
        return 0.0, 0.0
    exact = 0
    within = 0
    for x, y in unique:
        if x not in level_of or y not in level_of:
            raise IntegrityError(f"tie pair references unassigned topic: ({x!r}, {y!r})")
        gap = abs(level_of[x] - level_of[y])
        exact += gap == 0
        within += gap <= 1
    return exact / len(unique), within / len(unique)


def level_distribution(assignments: Iterable[LevelAssignment],
                       topic_frequencies: Mapping[str, int]) -> LevelDistribution:
    """Histogram of topics per level, plain and weighted by topic frequency."""
    assignments = list(assignments)
    if not assignments:
        return LevelDistribution((), (), (), None, None)
    max_level = max(a.level for a in assignments)
    counts = [0] * max_level
    weighted = [0] * max_level
    for a in assignments:
        if a.topic_id not in topic_frequencies:
            raise IntegrityError(f"no frequency for topic {a.topic_id!r}")
        counts[a.level - 1] += 1
        weighted[a.level - 1] += int(topic_frequencies[a.topic_id])
    levels = tuple(range(1, max_level + 1))
    total = sum(counts)
    wtotal = sum(weighted)
    mean_level = sum(l * c for l, c in zip(levels, counts)) / total
    weighted_mean = (sum(l * c for l, c in zip(levels, weighted)) / wtotal
                     if wtotal else None)
    return LevelDistribution(levels, tuple(counts), tuple(weighted),
                             mean_level, weighted_mean)


def levels_to_csv(assignments: Iterable[LevelAssignment], ranking: Ranking) -> str:
    ratings = ranking.ratings
    lines = ["topic_id,level,rating_mean,cluster_center"]
    for a in assignments:
        lines.append(f"{a.topic_id},{a.level},{ratings[a.topic_id].mean:.6f},"
                     f"{a.cluster_center:.6f}")
    return "\n".join(lines) + "\n"


def histogram_to_csv(dist: LevelDistribution) -> str:
    lines = ["level,topic_count,weighted_count"]
    for level, count, wcount in zip(dist.levels, dist.topic_counts,
                                    dist.weighted_counts):
        lines.append(f"{level},{count},{wcount}")
    return "\n".join(lines) + "\n"
