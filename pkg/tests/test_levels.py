"""Tests for exact 1-D clustering and level assignment."""

import numpy as np
import pytest

from oracles import brute_kmeans_sse
from pairrank.errors import IntegrityError
from pairrank.levels import (
    ElbowReport,
    LevelAssignment,
    assign_levels,
    choose_k_auto,
    choose_k_elbow,
    histogram_to_csv,
    kmeans_1d_exact,
    level_distribution,
    levels_to_csv,
    tie_consistency,
)
from pairrank.rating import Ranking, SkillRating


class TestKmeansExact:
    def test_separated_doubles(self):
        assignments, centers, sse = kmeans_1d_exact([0.0, 0.0, 10.0, 10.0], 2)
        assert list(centers) == [10.0, 0.0]
        assert sse == 0.0
        assert list(assignments) == [1, 1, 0, 0]

    def test_six_points_two_clusters(self):
        # Brute-force over all contiguous splits gives SSE 4.0 with the
        # {1,2,3} / {4,5,6} split.
        values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
        assignments, centers, sse = kmeans_1d_exact(values, 2)
        assert sse == pytest.approx(brute_kmeans_sse(values, 2), abs=1e-12)
        assert list(assignments) == [1, 1, 1, 0, 0, 0]
        assert list(centers) == [5.0, 2.0]

    def test_k_one_is_variance(self):
        values = [3.0, 7.0, 8.0, 14.0]
        _, centers, sse = kmeans_1d_exact(values, 1)
        assert centers[0] == pytest.approx(np.mean(values))
        assert sse == pytest.approx(float(np.var(values) * len(values)))

    def test_k_equals_n(self):
        _, _, sse = kmeans_1d_exact([1.0, 4.0, 9.0], 3)
        assert sse == 0.0

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            kmeans_1d_exact([1.0, 2.0], 3)
        with pytest.raises(ValueError):
            kmeans_1d_exact([1.0, 2.0], 0)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            kmeans_1d_exact([1.0, float("nan")], 1)

    def test_matches_brute_force_small_sweep(self):
        rng = np.random.default_rng(23)
        for n in range(2, 10):
            values = rng.normal(0, 5, n).tolist()
            for k in range(1, n + 1):
                _, _, sse = kmeans_1d_exact(values, k)
                assert sse == pytest.approx(brute_kmeans_sse(values, k),
                                            rel=1e-9, abs=1e-9)

    def test_sse_non_increasing_in_k(self):
        rng = np.random.default_rng(29)
        values = rng.normal(0, 10, 40).tolist()
        sses = [kmeans_1d_exact(values, k)[2] for k in range(1, 15)]
        for a, b in zip(sses, sses[1:]):
            assert b <= a + 1e-9

    def test_unsorted_input_assignments_follow_input_order(self):
        assignments, centers, _ = kmeans_1d_exact([10.0, 0.0, 11.0, 1.0], 2)
        assert list(assignments) == [0, 1, 0, 1]
        assert centers[0] > centers[1]


class TestElbow:
    def _blobs(self, rng, centers=(0.0, 100.0, 200.0), size=20, spread=1.0):
        return np.concatenate([rng.normal(c, spread, size) for c in centers])

    def test_three_blobs_pick_three(self):
        rng = np.random.default_rng(31)
        report = choose_k_elbow(self._blobs(rng), 2, 12)
        assert report.chosen_k == 3

    def test_three_blobs_many_seeds(self):
        for seed in range(20):
            rng = np.random.default_rng(1000 + seed)
            report = choose_k_elbow(self._blobs(rng), 2, 12)
            assert report.chosen_k == 3

    def test_all_equal_short_circuits(self):
        report = choose_k_elbow([5.0] * 10, 2, 8)
        assert report == ElbowReport((1,), (0.0,), 1)

    def test_sse_curve_recorded(self):
        rng = np.random.default_rng(37)
        report = choose_k_elbow(self._blobs(rng), 2, 8)
        assert report.k_candidates == tuple(range(2, 9))
        assert all(b <= a + 1e-9 for a, b in zip(report.sse, report.sse[1:]))

    def test_range_validation(self):
        with pytest.raises(ValueError):
            choose_k_elbow([1.0, 2.0, 3.0], 3, 3)
        with pytest.raises(ValueError):
            choose_k_elbow([1.0, 2.0, 3.0], 2, 9)

    def test_auto_handles_tiny_inputs(self):
        assert choose_k_auto([4.0]).chosen_k == 1
        assert choose_k_auto([4.0, 4.0]).chosen_k == 1
        assert choose_k_auto([4.0, 9.0]).chosen_k == 2


def _ranking(means):
    return Ranking.from_ratings(
        {f"t{i:02d}": SkillRating(m, 1.0) for i, m in enumerate(means)})


class TestAssignLevels:
    def test_three_topics_three_levels(self):
        ranking = _ranking([30.0, 20.0, 10.0])
        assignments = assign_levels(ranking, 3)
        assert [a.level for a in assignments] == [1, 2, 3]

    def test_identical_means_share_level(self):
        ranking = _ranking([30.0, 30.0, 10.0])
        assignments = assign_levels(ranking, 2)
        levels = {a.topic_id: a.level for a in assignments}
        tied = [tid for tid, r in ranking.entries if r.mean == 30.0]
        assert levels[tied[0]] == levels[tied[1]]

    def test_levels_monotone_in_rank(self):
        rng = np.random.default_rng(41)
        ranking = _ranking(rng.normal(25, 8, 30))
        assignments = assign_levels(ranking, 5)
        levels = [a.level for a in assignments]    # ranking order: mean desc
        assert levels == sorted(levels)
        assert set(levels) == {1, 2, 3, 4, 5}

    def test_branch_sample_keeps_order(self):
        # Vertical-branch ordering: more general topics never land on a
        # deeper level than their specializations.
        branch = ["science", "mathematics", "computer-science",
                  "artificial-intelligence", "computer-vision",
                  "image-segmentation", "convolutional-neural-network"]
        means = [40.0, 36.0, 31.0, 27.0, 22.0, 15.0, 8.0]
        ranking = Ranking.from_ratings(
            {t: SkillRating(m, 1.0) for t, m in zip(branch, means)})
        levels = {a.topic_id: a.level for a in assign_levels(ranking, 4)}
        for general, specific in zip(branch, branch[1:]):
            assert levels[general] <= levels[specific]

    def test_k_bounds(self):
        with pytest.raises(ValueError):
            assign_levels(_ranking([1.0, 1.0]), 2)   # only one distinct mean
        with pytest.raises(ValueError):
            assign_levels(Ranking(), 1)


class TestTieConsistency:
    ASSIGNMENTS = [
        LevelAssignment("a", 1, 30.0),
        LevelAssignment("b", 1, 30.0),
        LevelAssignment("c", 2, 20.0),
        LevelAssignment("d", 4, 5.0),
    ]

    def test_all_same_level(self):
        assert tie_consistency(self.ASSIGNMENTS, [("a", "b")]) == (1.0, 1.0)

    def test_half_exact(self):
        rates = tie_consistency(self.ASSIGNMENTS, [("a", "c"), ("a", "b")])
        assert rates == (0.5, 1.0)

    def test_far_pair(self):
        exact, within = tie_consistency(self.ASSIGNMENTS, [("a", "d")])
        assert (exact, within) == (0.0, 0.0)

    def test_duplicates_collapse(self):
        rates = tie_consistency(
            self.ASSIGNMENTS, [("a", "b"), ("b", "a"), ("a", "b"), ("a", "c")])
        assert rates == (0.5, 1.0)

    def test_unknown_topic(self):
        with pytest.raises(IntegrityError):
            tie_consistency(self.ASSIGNMENTS, [("a", "zz")])

    def test_within_rate_dominates(self):
        rng = np.random.default_rng(43)
        ranking = _ranking(rng.normal(25, 8, 20))
        assignments = assign_levels(ranking, 6)
        topics = [a.topic_id for a in assignments]
        pairs = [(topics[i], topics[j])
                 for i in range(0, 18, 3) for j in (i + 1, i + 2)]
        exact, within = tie_consistency(assignments, pairs)
        assert 0.0 <= exact <= within <= 1.0

    def test_empty_pairs(self):
        assert tie_consistency(self.ASSIGNMENTS, []) == (0.0, 0.0)


class TestLevelDistribution:
    def test_uniform_frequencies_proportional(self):
        assignments = [LevelAssignment(f"t{i}", 1 + i % 3, 0.0) for i in range(9)]
        freqs = {f"t{i}": 10 for i in range(9)}
        dist = level_distribution(assignments, freqs)
        assert dist.topic_counts == (3, 3, 3)
        assert dist.weighted_counts == (30, 30, 30)
        assert dist.mean_level == pytest.approx(dist.weighted_mean_level)

    def test_general_concentration_pulls_weighted_mean_up(self):
        assignments = [LevelAssignment("g1", 1, 0.0), LevelAssignment("g2", 1, 0.0),
                       LevelAssignment("s1", 3, 0.0), LevelAssignment("s2", 3, 0.0)]
        freqs = {"g1": 100, "g2": 80, "s1": 2, "s2": 1}
        dist = level_distribution(assignments, freqs)
        assert dist.weighted_mean_level < dist.mean_level

    def test_matches_arithmetic_oracle(self):
        # Spreadsheet-style recomputation of both means for a skewed
        # 8-level assignment.
        counts = [10, 22, 38, 55, 48, 30, 14, 6]
        freq_per_level = [900, 650, 380, 160, 70, 25, 12, 6]
        assignments = []
        freqs = {}
        i = 0
        for level, (count, freq) in enumerate(zip(counts, freq_per_level), start=1):
            for _ in range(count):
                tid = f"t{i:03d}"
                assignments.append(LevelAssignment(tid, level, 0.0))
                freqs[tid] = freq
                i += 1
        dist = level_distribution(assignments, freqs)
        total = sum(counts)
        expected_mean = sum(l * c for l, c in zip(range(1, 9), counts)) / total
        wcounts = [c * f for c, f in zip(counts, freq_per_level)]
        expected_wmean = sum(l * w for l, w in zip(range(1, 9), wcounts)) / sum(wcounts)
        assert dist.mean_level == pytest.approx(expected_mean)
        assert dist.weighted_mean_level == pytest.approx(expected_wmean)
        assert dist.weighted_mean_level < dist.mean_level

    def test_missing_frequency(self):
        with pytest.raises(IntegrityError):
            level_distribution([LevelAssignment("a", 1, 0.0)], {})

    def test_csv_exports(self):
        ranking = _ranking([30.0, 10.0])
        assignments = assign_levels(ranking, 2)
        csv_text = levels_to_csv(assignments, ranking)
        assert csv_text.startswith("topic_id,level,rating_mean,cluster_center\n")
        assert len(csv_text.strip().splitlines()) == 3
        dist = level_distribution(assignments, {a.topic_id: 5 for a in assignments})
        hist = histogram_to_csv(dist)
        assert hist == "level,topic_count,weighted_count\n1,1,5\n2,1,5\n"
