"""Incremental ranking: add topics without recomputing settled ones, and
measure how many annotations a new topic needs to settle into place.

The insertion experiment removes one topic's annotations from a complete
log, replays them one at a time under a strategy (random order, original
order, or only the last-suggested window), and declares convergence when
the topic's position stays within tolerance of its full-log reference
position for the required number of consecutive annotations.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DuplicateTopicError
from .rating import (
    Annotation,
    ComparisonMatrix,
    RANKED_OUTCOMES,
    RatingConfig,
    SkillRating,
    rank_from_matrix,
)

STRATEGY_RANDOM = "random"
STRATEGY_ORDER = "order"
STRATEGY_INFORMED = "informed"
STRATEGIES = (STRATEGY_RANDOM, STRATEGY_ORDER, STRATEGY_INFORMED)

INFORMED_WINDOW = 20    # the informed strategy replays at most this many pairs


@dataclass(frozen=True)
class ConvergenceRule:
    position_tolerance: int = 3
    consecutive_required: int = 2

    def __post_init__(self):
        if self.position_tolerance < 1 or self.consecutive_required < 1:
            raise ValueError("tolerance and consecutive_required must be >= 1")


@dataclass(frozen=True)
class InsertionTrace:
    topic_id: str
    strategy: str
    reference_position: int
    annotations_used: int
    position_history: tuple[int, ...]
    converged: bool

    def to_json(self) -> dict:
        return {
            "topic_id": self.topic_id,
            "strategy": self.strategy,
            "reference_position": self.reference_position,
            "annotations_used": self.annotations_used,
            "position_history": list(self.position_history),
            "converged": self.converged,
        }


@dataclass(frozen=True)
class InsertionSummary:
    strategy: str
    mean_annotations: float
    converged_count: int
    exhausted_count: int
    converged_mean: float | None
    traces: tuple[InsertionTrace, ...]


def insert_topic(posteriors: Mapping[str, SkillRating], new_topic: str,
                 cfg: RatingConfig = RatingConfig()) -> dict[str, SkillRating]:
    """Add a topic at the prior rating; existing posteriors are untouched."""
    if new_topic in posteriors:
        raise DuplicateTopicError(f"topic {new_topic!r} already ranked")
    updated = dict(posteriors)
    updated[new_topic] = cfg.prior()
    return updated


def check_convergence(position_history: Sequence[int] | InsertionTrace,
                      reference_position: int,
                      rule: ConvergenceRule = ConvergenceRule()) -> bool:
    """True when the last required positions all sit within tolerance."""
    if isinstance(position_history, InsertionTrace):
        position_history = position_history.position_history
    if not len(position_history):
        raise ValueError("position history is empty")
    if len(position_history) < rule.consecutive_required:
        return False
    tail = position_history[-rule.consecutive_required:]
    return all(abs(p - reference_position) <= rule.position_tolerance for p in tail)


def _replay_plan(topic_annotations: Sequence[Annotation], strategy: str,
                 seed: int) -> list[Annotation]:
    if strategy == STRATEGY_ORDER:
        return list(topic_annotations)
    if strategy == STRATEGY_INFORMED:
        return list(topic_annotations[-INFORMED_WINDOW:])
    if strategy == STRATEGY_RANDOM:
        plan = list(topic_annotations)
        random.Random(seed).shuffle(plan)
        return plan
    raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")


def simulate_insertion(full_log: Sequence[Annotation], topic: str,
                       strategy: str = STRATEGY_INFORMED,
                       rule: ConvergenceRule = ConvergenceRule(),
                       seed: int = 0,
                       cfg: RatingConfig = RatingConfig()) -> InsertionTrace:
    """Replay one topic's annotations into the rest of the log.

    The reference position comes from the ranking over the complete log;
    only win/loss annotations are replayed (ties and skips never move the
    ranking).  Deterministic for a fixed seed.
    """
    universe = sorted({t for ann in full_log for t in (ann.topic_a, ann.topic_b)})
    if topic not in universe:
        raise ValueError(f"topic {topic!r} does not appear in the log")
    index = {tid: i for i, tid in enumerate(universe)}

    ranked = [ann for ann in full_log if ann.outcome in RANKED_OUTCOMES]
    topic_anns = [ann for ann in ranked if topic in (ann.topic_a, ann.topic_b)]
    if not topic_anns:
        raise ValueError(f"topic {topic!r} has no win/loss annotations to replay")

    full_matrix = ComparisonMatrix.from_annotations(ranked, universe)
    reference_position = rank_from_matrix(full_matrix, cfg).position(topic)

    counts = np.array(full_matrix.counts, copy=True)
    for ann in topic_anns:      # strip the topic's annotations from the matrix
        counts[index[ann.winner], index[ann.loser]] -= 1

    plan = _replay_plan(topic_anns, strategy, seed)
    history: list[int] = []
    converged = False
    used = 0
    for ann in plan:
        counts[index[ann.winner], index[ann.loser]] += 1
        ranking = rank_from_matrix(ComparisonMatrix(universe, counts), cfg)
        history.append(ranking.position(topic))
        used += 1
        if check_convergence(history, reference_position, rule):
            converged = True
            break
    return InsertionTrace(topic_id=topic, strategy=strategy,
                          reference_position=reference_position,
                          annotations_used=used,
                          position_history=tuple(history), converged=converged)


def insertion_summary(full_log: Sequence[Annotation],
                      strategy: str = STRATEGY_INFORMED,
                      rule: ConvergenceRule = ConvergenceRule(),
                      seed: int = 0,
                      cfg: RatingConfig = RatingConfig()) -> InsertionSummary:
    """Run simulate_insertion for every topic in the log and aggregate.

    The headline mean counts every topic (exhausted topics at their full
    replay length); the converged-only mean is reported alongside.
    """
    ranked = [ann for ann in full_log if ann.outcome in RANKED_OUTCOMES]
    topics = sorted({t for ann in ranked for t in (ann.topic_a, ann.topic_b)})
    traces = []
    for i, topic in enumerate(topics):
        traces.append(simulate_insertion(full_log, topic, strategy, rule,
                                         seed=seed + i, cfg=cfg))
    if not traces:
        raise ValueError("log contains no win/loss annotations")
    converged = [t for t in traces if t.converged]
    exhausted = [t for t in traces if not t.converged]
    mean = sum(t.annotations_used for t in traces) / len(traces)
    converged_mean = (sum(t.annotations_used for t in converged) / len(converged)
                      if converged else None)
    return InsertionSummary(strategy=strategy, mean_annotations=mean,
                            converged_count=len(converged),
                            exhausted_count=len(exhausted),
                            converged_mean=converged_mean,
                            traces=tuple(traces))


def average_insertion_cost(full_log: Sequence[Annotation], strategy: str,
                           rule: ConvergenceRule = ConvergenceRule(),
                           seed: int = 0,
                           cfg: RatingConfig = RatingConfig()) -> float:
    """Mean annotations to convergence over all topics in the log."""
    return insertion_summary(full_log, strategy, rule, seed, cfg).mean_annotations


def traces_to_jsonl(traces: Iterable[InsertionTrace]) -> str:
    import json

    return "".join(json.dumps(t.to_json(), sort_keys=True) + "\n" for t in traces)


def summary_to_csv(summaries: Iterable[InsertionSummary]) -> str:
    lines = ["strategy,mean,converged_count,exhausted_count"]
    for s in summaries:
        lines.append(f"{s.strategy},{s.mean_annotations:.3f},"
                     f"{s.converged_count},{s.exhausted_count}")
    return "\n".join(lines) + "\n"
