"""Tests for the Gaussian skill-rating engine."""

import random

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from pairrank.errors import ConfigError, IntegrityError
from pairrank.rating import (
    Annotation,
    ComparisonMatrix,
    Ranking,
    RatingConfig,
    SkillRating,
    canonical_pair,
    rank_annotations,
    rank_from_matrix,
    rank_stability_curve,
    truncated_gaussian_v,
    truncated_gaussian_w,
    update_pair,
)

CFG = RatingConfig()


# ---------------------------------------------------------------------------
# truncated Gaussian corrections


class TestCorrections:
    def test_v_at_zero(self):
        # sqrt(2/pi); frozen from the mpmath oracle (oracles.mills_v).
        assert truncated_gaussian_v(0.0) == pytest.approx(0.79788456080286536, abs=1e-14)

    def test_v_far_ahead_winner(self):
        assert truncated_gaussian_v(8.0) < 1e-6

    def test_v_deep_negative(self):
        # mills_v(-5) = 5.1865039671258421
        assert truncated_gaussian_v(-5.0) == pytest.approx(5.1865039671258421, rel=1e-12)

    def test_v_asymptotic_branch(self):
        # Frozen from mills_v; the t < -6 branch runs the series expansion.
        assert truncated_gaussian_v(-8.0) == pytest.approx(8.1213681122361127, rel=1e-7)
        assert truncated_gaussian_v(-12.0) == pytest.approx(12.082214175254284, rel=1e-9)
        assert truncated_gaussian_v(-20.0) == pytest.approx(20.049753068527851, rel=1e-12)

    def test_w_at_zero(self):
        # 2/pi, i.e. v(0)^2.
        assert truncated_gaussian_w(0.0) == pytest.approx(0.63661977236758134, abs=1e-14)

    def test_w_no_information(self):
        assert truncated_gaussian_w(8.0) < 1e-5

    def test_w_upset(self):
        # mills_w(-3) = 0.92944081321473188
        assert truncated_gaussian_w(-3.0) == pytest.approx(0.92944081321473188, rel=1e-12)

    def test_w_asymptotic_branch(self):
        assert truncated_gaussian_w(-8.0) == pytest.approx(0.98567511655665909, abs=1e-5)
        assert truncated_gaussian_w(-20.0) == pytest.approx(0.99753673838494784, abs=1e-9)

    @pytest.mark.parametrize("bad", [float("nan"), float("inf"), float("-inf")])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(ValueError):
            truncated_gaussian_v(bad)
        with pytest.raises(ValueError):
            truncated_gaussian_w(bad)

    def test_grid_properties(self):
        # v strictly positive and strictly decreasing; w in (0, 1).
        grid = np.linspace(-40.0, 8.0, 481)
        vs = [truncated_gaussian_v(float(t)) for t in grid]
        ws = [truncated_gaussian_w(float(t)) for t in grid]
        assert all(v > 0.0 for v in vs)
        assert all(b < a for a, b in zip(vs, vs[1:]))
        assert all(0.0 < w < 1.0 for w in ws)


# ---------------------------------------------------------------------------
# pair updates


class TestUpdatePair:
    def test_symmetric_priors(self):
        winner, loser = update_pair(CFG.prior(), CFG.prior(), CFG)
        assert winner.mean - 25.0 == pytest.approx(25.0 - loser.mean, abs=1e-12)
        assert winner.mean > loser.mean
        assert winner.deviation == loser.deviation

    def test_equal_priors_match_integration_oracle(self):
        # Frozen from oracles.conditioned_pair_moments(25, 25/3, 25, 25/3, 25/6):
        #   winner (29.20522087003361, 7.194481348831054)
        #   loser  (20.79477912996640, 7.194481348831093)
        winner, loser = update_pair(CFG.prior(), CFG.prior(), CFG)
        assert winner.mean == pytest.approx(29.20522087003361, abs=1e-9)
        assert winner.deviation == pytest.approx(7.194481348831054, abs=1e-9)
        assert loser.mean == pytest.approx(20.79477912996640, abs=1e-9)
        assert loser.deviation == pytest.approx(7.194481348831093, abs=1e-9)

    def test_asymmetric_match_integration_oracle(self):
        # Frozen from oracles.conditioned_pair_moments(30, 4, 22, 6.5, 25/6).
        winner, loser = update_pair(SkillRating(30.0, 4.0), SkillRating(22.0, 6.5), CFG)
        assert winner.mean == pytest.approx(30.58899436542902, abs=1e-9)
        assert winner.deviation == pytest.approx(3.852555583155094, abs=1e-9)
        assert loser.mean == pytest.approx(20.44468675378903, abs=1e-9)
        assert loser.deviation == pytest.approx(5.846081422312092, abs=1e-9)

    def test_expected_outcome_carries_no_information(self):
        winner, loser = update_pair(SkillRating(50.0, 1.0), SkillRating(0.0, 1.0), CFG)
        assert abs(winner.mean - 50.0) < 0.01
        assert abs(loser.mean - 0.0) < 0.01

    @given(
        mu_w=st.floats(-30, 30),
        mu_l=st.floats(-30, 30),
        sig_w=st.floats(0.8, 20),
        sig_l=st.floats(0.8, 20),
    )
    @settings(max_examples=150)
    def test_winner_up_loser_down_deviations_shrink(self, mu_w, mu_l, sig_w, sig_l):
        # Gaps so extreme that the correction drops below one ulp are covered
        # by test_expected_outcome_carries_no_information instead.
        assume(abs(mu_w - mu_l) <= 25.0)
        winner, loser = update_pair(SkillRating(mu_w, sig_w), SkillRating(mu_l, sig_l), CFG)
        assert winner.mean > mu_w
        assert loser.mean < mu_l
        assert winner.deviation < sig_w
        assert loser.deviation < sig_l

    @given(
        mu_w=st.floats(-50, 50),
        mu_l=st.floats(-50, 50),
        shift=st.floats(-500, 500),
    )
    @settings(max_examples=100)
    def test_translation_equivariance(self, mu_w, mu_l, shift):
        base_w, base_l = update_pair(SkillRating(mu_w, 6.0), SkillRating(mu_l, 4.0), CFG)
        moved_w, moved_l = update_pair(
            SkillRating(mu_w + shift, 6.0), SkillRating(mu_l + shift, 4.0), CFG)
        assert moved_w.mean - shift == pytest.approx(base_w.mean, abs=1e-8)
        assert moved_l.mean - shift == pytest.approx(base_l.mean, abs=1e-8)
        assert moved_w.deviation == pytest.approx(base_w.deviation, abs=1e-10)

    def test_dynamics_noise_inflates_first(self):
        cfg = RatingConfig(dynamics_tau=2.0)
        winner, _ = update_pair(SkillRating(25.0, 0.1), SkillRating(25.0, 0.1), cfg)
        # Variance was re-inflated by tau before shrinking, so it may exceed
        # the tiny input deviation.
        assert winner.deviation > 0.1

    def test_invalid_config(self):
        with pytest.raises(ConfigError):
            RatingConfig(performance_noise_beta=0.0)
        with pytest.raises(ConfigError):
            RatingConfig(initial_deviation=-1.0)
        with pytest.raises(ConfigError):
            RatingConfig(dynamics_tau=-0.5)

    def test_invalid_rating(self):
        with pytest.raises(ValueError):
            SkillRating(0.0, 0.0)
        with pytest.raises(ValueError):
            SkillRating(float("nan"), 1.0)


# ---------------------------------------------------------------------------
# annotations and matrices


class TestAnnotation:
    def test_canonical_enforced(self):
        with pytest.raises(ValueError):
            Annotation("ann", "zebra", "apple", "a_wins")
        with pytest.raises(ValueError):
            canonical_pair("same", "same")

    def test_judged_maps_winner(self):
        ann = Annotation.judged("u1", winner="zebra", loser="apple")
        assert (ann.topic_a, ann.topic_b) == ("apple", "zebra")
        assert ann.outcome == "b_wins"
        assert ann.winner == "zebra" and ann.loser == "apple"

    def test_unknown_outcome(self):
        with pytest.raises(ValueError):
            Annotation("u", "a", "b", "banana")


class TestComparisonMatrix:
    def test_validation(self):
        with pytest.raises(ValueError):
            ComparisonMatrix(["a", "b"], [[0, 1]])
        with pytest.raises(ValueError):
            ComparisonMatrix(["a", "b"], [[1, 0], [0, 0]])
        with pytest.raises(ValueError):
            ComparisonMatrix(["a", "b"], [[0, -1], [0, 0]])
        with pytest.raises(ValueError):
            ComparisonMatrix(["a", "a"], [[0, 0], [0, 0]])

    def test_from_annotations_excludes_ties_and_skips(self):
        log = [
            Annotation.judged("u", "a", "b"),
            Annotation("u", "a", "b", "tie"),
            Annotation("u", "a", "b", "skip"),
            Annotation("u", "a", "c", "b_wins"),
        ]
        matrix = ComparisonMatrix.from_annotations(log)
        assert matrix.topic_ids == ["a", "b", "c"]
        assert matrix.counts[0, 1] == 1     # a beat b once
        assert matrix.counts[2, 0] == 1     # c beat a once
        assert matrix.counts.sum() == 2

    def test_unknown_topic_with_universe(self):
        with pytest.raises(IntegrityError):
            ComparisonMatrix.from_annotations(
                [Annotation.judged("u", "a", "b")], topic_ids=["a", "c"])

    def test_csv_round_trip(self):
        matrix = ComparisonMatrix(["s", "cs", "se"],
                                  [[0, 10, 10], [0, 0, 10], [0, 0, 0]])
        again = ComparisonMatrix.from_csv(matrix.to_csv())
        assert again.topic_ids == matrix.topic_ids
        assert np.array_equal(again.counts, matrix.counts)


# ---------------------------------------------------------------------------
# ranking


def _order_matrix(topics, truth, wins=3):
    """Noiseless matrix for a strict total order (truth[0] most general)."""
    idx = {t: i for i, t in enumerate(topics)}
    counts = np.zeros((len(topics), len(topics)), dtype=np.int64)
    for i in range(len(truth)):
        for j in range(i + 1, len(truth)):
            counts[idx[truth[i]], idx[truth[j]]] = wins
    return ComparisonMatrix(topics, counts)


class TestRankFromMatrix:
    def test_three_term_example_ordering(self):
        matrix = ComparisonMatrix(
            ["science", "computer-science", "software-engineering"],
            [[0, 10, 10], [0, 0, 10], [0, 0, 0]])
        ranking = rank_from_matrix(matrix)
        assert [t for t, _ in ranking.entries] == [
            "science", "computer-science", "software-engineering"]

    def test_all_zero_matrix_prior_with_lex_tiebreak(self):
        ranking = rank_from_matrix(ComparisonMatrix.empty(["c", "a", "b"]))
        assert [t for t, _ in ranking.entries] == ["a", "b", "c"]
        for _, rating in ranking.entries:
            assert rating == CFG.prior()

    def test_recovers_random_ground_truth_order(self):
        # Derived check: a brute-force ground-truth generator produces a
        # noiseless matrix; the ranking must reproduce the exact order.
        rng = random.Random(20240817)
        for _ in range(25):
            n = rng.randint(8, 12)
            topics = [f"t{i:02d}" for i in range(n)]
            truth = topics[:]
            rng.shuffle(truth)
            ranking = rank_from_matrix(_order_matrix(topics, truth, rng.randint(1, 5)))
            assert [t for t, _ in ranking.entries] == truth

    def test_adjacent_chain_recovers_order(self):
        topics = [f"t{i}" for i in range(10)]
        counts = np.zeros((10, 10), dtype=np.int64)
        for i in range(9):
            counts[i, i + 1] = 1
        ranking = rank_from_matrix(ComparisonMatrix(topics, counts))
        assert [t for t, _ in ranking.entries] == topics

    def test_empty_and_singleton(self):
        assert rank_from_matrix(ComparisonMatrix.empty([])).entries == ()
        single = rank_from_matrix(ComparisonMatrix.empty(["only"]))
        assert single.entries == (("only", CFG.prior()),)

    def test_permutation_invariance(self):
        topics = ["d", "a", "c", "b"]
        truth = ["b", "d", "a", "c"]
        base = rank_from_matrix(_order_matrix(topics, truth))
        permuted_topics = ["a", "b", "c", "d"]
        permuted = rank_from_matrix(_order_matrix(permuted_topics, truth))
        assert base.entries == permuted.entries

    def test_deterministic_bit_identical(self):
        matrix = _order_matrix(["x", "y", "z"], ["y", "z", "x"], wins=2)
        first = rank_from_matrix(matrix)
        second = rank_from_matrix(matrix)
        assert first == second

    def test_passes_must_be_positive(self):
        with pytest.raises(ValueError):
            rank_from_matrix(ComparisonMatrix.empty(["a"]), passes=0)


class TestRankingContainer:
    def test_tsv_round_trip(self):
        ranking = rank_from_matrix(
            _order_matrix(["a", "b", "c"], ["c", "a", "b"]))
        text = ranking.to_tsv()
        parsed = Ranking.from_tsv(text)
        assert [t for t, _ in parsed.entries] == [t for t, _ in ranking.entries]
        # 6-decimal TSV is a fixed point under parse/serialize.
        assert parsed.to_tsv() == text

    def test_positions(self):
        ranking = Ranking.from_ratings({
            "a": SkillRating(30, 1), "b": SkillRating(20, 1)})
        assert ranking.positions() == {"a": 1, "b": 2}
        assert ranking.position("b") == 2
        with pytest.raises(IntegrityError):
            ranking.position("nope")


# ---------------------------------------------------------------------------
# stability curve


def _round_robin_log(topics, truth, rounds):
    rank_of = {t: i for i, t in enumerate(truth)}
    log = []
    for _ in range(rounds):
        for i, a in enumerate(topics):
            for b in topics[i + 1:]:
                winner, loser = (a, b) if rank_of[a] < rank_of[b] else (b, a)
                log.append(Annotation.judged("sim", winner, loser))
    return log


class TestStabilityCurve:
    def test_length_contract(self):
        log = _round_robin_log([f"t{i}" for i in range(10)],
                               [f"t{i}" for i in range(10)], rounds=9)[:400]
        curve = rank_stability_curve(log, window=200)
        assert len(curve) == 2
        assert curve[0][0] == 200 and curve[1][0] == 400

    def test_window_larger_than_log(self):
        log = _round_robin_log(["a", "b", "c"], ["c", "b", "a"], rounds=1)
        curve = rank_stability_curve(log, window=1000)
        assert len(curve) == 1
        assert curve[0][0] == len(log)

    def test_empty_log(self):
        assert rank_stability_curve([], window=200) == []

    def test_noiseless_annotator_converges_to_zero(self):
        # Simulation-oracle check: with a noiseless annotator the ranking
        # settles after the first full round, so later windows report no
        # position movement.
        topics = [f"t{i}" for i in range(10)]
        truth = list(reversed(topics))
        log = _round_robin_log(topics, truth, rounds=4)
        curve = rank_stability_curve(log, window=45)
        assert len(curve) == 4
        changes = [c for _, c in curve]
        assert changes[0] > 0
        for earlier, later in zip(changes[1:], changes[2:]):
            assert later <= earlier
        assert changes[-1] == 0.0

    def test_bad_window(self):
        with pytest.raises(ValueError):
            rank_stability_curve([], window=0)


class TestRankAnnotations:
    def test_single_annotation_matches_update_pair(self):
        log = [Annotation.judged("u", "winner-topic", "loser-topic")]
        ranking = rank_annotations(log, cfg=CFG, passes=1)
        expected_w, expected_l = update_pair(CFG.prior(), CFG.prior(), CFG)
        ratings = ranking.ratings
        assert ratings["winner-topic"] == expected_w
        assert ratings["loser-topic"] == expected_l
