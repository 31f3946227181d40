"""Tests for incremental topic insertion and convergence measurement."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pairrank.errors import DuplicateTopicError
from pairrank.insertion import (
    ConvergenceRule,
    InsertionTrace,
    average_insertion_cost,
    check_convergence,
    insert_topic,
    insertion_summary,
    simulate_insertion,
    summary_to_csv,
    traces_to_jsonl,
)
from pairrank.rating import Annotation, RatingConfig, SkillRating

CFG = RatingConfig()


class TestInsertTopic:
    def test_insert_into_empty(self):
        posteriors = insert_topic({}, "first", CFG)
        assert posteriors == {"first": CFG.prior()}

    def test_existing_ratings_bit_identical(self):
        import random

        rng = random.Random(4)
        existing = {f"t{i:03d}": SkillRating(rng.uniform(0, 50), rng.uniform(0.5, 8))
                    for i in range(300)}
        snapshot = dict(existing)
        updated = insert_topic(existing, "newcomer", CFG)
        assert existing == snapshot                       # input untouched
        for tid, rating in snapshot.items():
            assert updated[tid] is rating                 # not even copied
        assert updated["newcomer"] == CFG.prior()

    def test_duplicate_conflict(self):
        with pytest.raises(DuplicateTopicError):
            insert_topic({"a": CFG.prior()}, "a", CFG)

    def test_new_topic_cold_pairs_enter_next_batch(self):
        from pairrank.sampler import SamplerState, select_batch

        state = SamplerState.for_topics(["a", "b"], cfg=CFG, seed=1)
        state.seen_counts[("a", "b")] = 1                 # warm pair
        state.add_topic("fresh")
        batch = select_batch(state, 2)
        assert any("fresh" in c.pair for c in batch)


class TestCheckConvergence:
    RULE = ConvergenceRule(3, 2)

    def test_two_close_positions(self):
        assert check_convergence([50, 41, 42], 40, self.RULE) is True

    def test_one_far_position(self):
        assert check_convergence([50, 36, 42], 40, self.RULE) is False

    def test_needs_two_consecutive(self):
        assert check_convergence([40], 40, self.RULE) is False

    def test_empty_history(self):
        with pytest.raises(ValueError):
            check_convergence([], 40, self.RULE)

    def test_accepts_trace(self):
        trace = InsertionTrace("t", "order", 40, 2, (41, 42), True)
        assert check_convergence(trace, 40, self.RULE) is True

    @given(st.lists(st.integers(1, 100), min_size=2, max_size=10),
           st.integers(1, 100), st.integers(1, 10))
    @settings(max_examples=100)
    def test_monotone_in_tolerance(self, history, reference, tolerance):
        rule = ConvergenceRule(tolerance, 2)
        looser = ConvergenceRule(tolerance + 3, 2)
        if check_convergence(history, reference, rule):
            assert check_convergence(history, reference, looser)

    def test_rule_validation(self):
        with pytest.raises(ValueError):
            ConvergenceRule(0, 2)
        with pytest.raises(ValueError):
            ConvergenceRule(3, 0)


def _noiseless_log(n_topics=10, rounds=1):
    topics = [f"t{i}" for i in range(n_topics)]
    log = []
    for _ in range(rounds):
        for i, a in enumerate(topics):
            for b in topics[i + 1:]:
                log.append(Annotation.judged("sim", a, b))   # lower index wins
    return topics, log


class TestSimulateInsertion:
    def test_noiseless_log_converges_quickly(self):
        topics, log = _noiseless_log()
        for strategy in ("random", "order", "informed"):
            trace = simulate_insertion(log, "t5", strategy, seed=3)
            assert trace.converged
            assert trace.annotations_used <= 9

    def test_informed_window_is_a_cap(self):
        topics, log = _noiseless_log(6)
        # t0 touches 5 pairs; the 20-pair window must simply use all 5.
        trace = simulate_insertion(log, "t0", "informed")
        assert trace.annotations_used <= 5
        assert len(trace.position_history) <= 5

    def test_seeded_random_reproducible(self):
        _, log = _noiseless_log(8, rounds=2)
        first = simulate_insertion(log, "t3", "random", seed=11)
        second = simulate_insertion(log, "t3", "random", seed=11)
        assert first == second

    def test_unknown_topic(self):
        _, log = _noiseless_log(5)
        with pytest.raises(ValueError):
            simulate_insertion(log, "zz", "order")

    def test_unknown_strategy(self):
        _, log = _noiseless_log(5)
        with pytest.raises(ValueError):
            simulate_insertion(log, "t1", "telepathic")

    def test_used_never_exceeds_touches(self):
        _, log = _noiseless_log(8, rounds=3)
        touches = sum(1 for ann in log if "t2" in (ann.topic_a, ann.topic_b))
        for strategy in ("random", "order"):
            trace = simulate_insertion(log, "t2", strategy, seed=0)
            assert trace.annotations_used <= touches

    def test_converged_invariant(self):
        _, log = _noiseless_log(10, rounds=2)
        rule = ConvergenceRule(3, 2)
        trace = simulate_insertion(log, "t4", "order", rule)
        if trace.converged:
            tail = trace.position_history[-rule.consecutive_required:]
            assert all(abs(p - trace.reference_position) <= rule.position_tolerance
                       for p in tail)


class TestSummaries:
    def test_single_topic_pair_log(self):
        log = [Annotation.judged("u", "a", "b")] * 3
        cost = average_insertion_cost(log, "order")
        summary = insertion_summary(log, "order")
        assert cost == summary.mean_annotations
        # Both topics replay the same three annotations.
        assert {t.topic_id for t in summary.traces} == {"a", "b"}

    def test_summary_counts(self):
        _, log = _noiseless_log(8, rounds=2)
        summary = insertion_summary(log, "informed", seed=5)
        assert summary.converged_count + summary.exhausted_count == 8
        assert summary.mean_annotations > 0

    def test_exports(self):
        import json

        _, log = _noiseless_log(5)
        summary = insertion_summary(log, "order")
        jsonl = traces_to_jsonl(summary.traces)
        assert len(jsonl.strip().splitlines()) == 5
        record = json.loads(jsonl.splitlines()[0])
        assert record["strategy"] == "order"
        csv_text = summary_to_csv([summary])
        assert csv_text.splitlines()[0] == "strategy,mean,converged_count,exhausted_count"
        assert csv_text.splitlines()[1].startswith("order,")
