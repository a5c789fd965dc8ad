import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eegrank.dataio import Ranking
from eegrank.metrics import (
    UndefinedMetricError,
    average_precision,
    mean_ap,
    roc_auc,
    roc_curve,
    roc_curve_area,
    welch_t_test,
)


def brute_force_auc(scores, labels):
    """O(n^2) pair count: wins + half-ties over all (positive, negative) pairs."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    pos = scores[labels]
    neg = scores[~labels]
    wins = np.sum(pos[:, None] > neg[None, :])
    ties = np.sum(pos[:, None] == neg[None, :])
    return (wins + 0.5 * ties) / (pos.size * neg.size)


def brute_force_ap(ids_in_rank_order, relevant):
    terms = []
    hits = 0
    for rank, image_id in enumerate(ids_in_rank_order, start=1):
        if image_id in relevant:
            hits += 1
            terms.append(hits / rank)
    return math.fsum(terms) / len(relevant)


class TestRocAuc:
    def test_worked_example(self):
        # pairs: (.9,.8) win, (.9,.6) win, (.7,.8) loss, (.7,.6) win -> 3/4
        assert roc_auc([0.9, 0.8, 0.7, 0.6], [True, False, True, False]) == 0.75

    def test_perfect_and_degenerate(self):
        assert roc_auc([3, 2, 1, 0], [True, True, False, False]) == 1.0
        assert roc_auc([1, 1, 1, 1], [True, False, True, False]) == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(UndefinedMetricError):
            roc_auc([0.1, 0.2], [True, True])

    def test_matches_brute_force_exactly(self):
        rng = np.random.default_rng(42)
        for trial in range(60):
            n = int(rng.integers(2, 500))
            labels = rng.uniform(size=n) < 0.3
            if labels.all() or not labels.any():
                continue
            if trial % 2:
                scores = rng.standard_normal(n)
            else:
                scores = rng.integers(0, 6, size=n).astype(float)  # force ties
            assert roc_auc(scores, labels) == brute_force_auc(scores, labels)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(3)
        scores = rng.standard_normal(80)
        labels = rng.uniform(size=80) < 0.4
        assert roc_auc(np.exp(scores), labels) == pytest.approx(roc_auc(scores, labels), abs=0)

    def test_negation_complement_when_no_ties(self):
        rng = np.random.default_rng(4)
        scores = rng.standard_normal(101)
        labels = rng.uniform(size=101) < 0.5
        assert roc_auc(scores, labels) + roc_auc(-scores, labels) == pytest.approx(1.0, abs=1e-12)


class TestRocCurve:
    def test_perfect_passes_through_0_1(self):
        points = roc_curve([3, 2, 1, 0], [True, True, False, False])
        assert points[0] == (0.0, 0.0)
        assert (0.0, 1.0) in points
        assert points[-1] == (1.0, 1.0)

    def test_reversed_passes_through_1_0(self):
        points = roc_curve([0, 1, 2, 3], [True, True, False, False])
        assert (1.0, 0.0) in points

    def test_trapezoid_area_equals_auc(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            n = int(rng.integers(5, 300))
            scores = rng.integers(0, 12, size=n).astype(float)
            labels = rng.uniform(size=n) < 0.4
            if labels.all() or not labels.any():
                continue
            area = roc_curve_area(roc_curve(scores, labels))
            assert abs(area - roc_auc(scores, labels)) < 1e-12

    def test_staircase_monotone(self):
        rng = np.random.default_rng(10)
        scores = rng.standard_normal(50)
        labels = rng.uniform(size=50) < 0.5
        points = roc_curve(scores, labels)
        for (f1, t1), (f2, t2) in zip(points, points[1:]):
            assert f2 >= f1 and t2 >= t1


class TestAveragePrecision:
    def test_worked_example(self):
        ranking = Ranking("q", [("a", None), ("b", None), ("c", None), ("d", None)])
        assert average_precision(ranking, {"a", "c"}) == pytest.approx((1 + 2 / 3) / 2)

    def test_all_relevant_on_top(self):
        ranking = Ranking("q", [(i, None) for i in "abcd"])
        assert average_precision(ranking, {"a", "b"}) == 1.0

    def test_empty_relevant_set_rejected(self):
        with pytest.raises(UndefinedMetricError):
            average_precision(Ranking("q", [("a", None)]), set())

    def test_missing_relevant_rejected(self):
        with pytest.raises(ValueError, match="not present"):
            average_precision(Ranking("q", [("a", None)]), {"zzz"})

    def test_matches_brute_force_exactly(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(2, 200))
            ids = [f"i{k}" for k in range(n)]
            perm = list(rng.permutation(n))
            ordered = [ids[k] for k in perm]
            n_rel = int(rng.integers(1, n))
            relevant = set(rng.choice(ids, size=n_rel, replace=False))
            ranking = Ranking("q", [(i, None) for i in ordered])
            assert average_precision(ranking, relevant) == brute_force_ap(ordered, relevant)

    def test_nonrelevant_relabeling_invariance(self):
        ordered = ["a", "b", "c", "d", "e"]
        renamed = ["a", "x", "c", "y", "z"]
        rel = {"a", "c"}
        r1 = Ranking("q", [(i, None) for i in ordered])
        r2 = Ranking("q", [(i, None) for i in renamed])
        assert average_precision(r1, rel) == average_precision(r2, rel)


class TestMeanAp:
    def test_examples(self):
        assert mean_ap([1.0, 0.0, 0.5]) == 0.5
        assert mean_ap([0.7]) == 0.7
        assert mean_ap([0.2, 0.9, 0.4]) == mean_ap([0.9, 0.4, 0.2])


class TestWelch:
    def test_identical_groups(self):
        t, p = welch_t_test([1, 2, 3, 4], [1, 2, 3, 4])
        assert t == 0.0
        assert p == 1.0

    def test_frozen_reference_value(self):
        # reference computed independently (scipy.stats.ttest_ind, equal_var=False)
        # before this implementation was written
        t, p = welch_t_test([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
        assert t == pytest.approx(-1.0, abs=1e-12)
        assert p == pytest.approx(0.34659350708733416, abs=1e-6)

    def test_swap_negates_t_preserves_p(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal(9)
        b = rng.standard_normal(12) + 0.5
        t1, p1 = welch_t_test(a, b)
        t2, p2 = welch_t_test(b, a)
        assert t1 == -t2
        assert p1 == p2

    def test_too_small_group_rejected(self):
        with pytest.raises(ValueError):
            welch_t_test([1.0], [1, 2, 3])

    @settings(max_examples=40, deadline=None)
    @given(
        shift=st.floats(-2, 2),
        seed=st.integers(0, 2**31),
    )
    def test_p_in_unit_interval(self, shift, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal(6)
        b = rng.standard_normal(8) + shift
        t, p = welch_t_test(a, b)
        assert 0.0 <= p <= 1.0
        assert np.isfinite(t)
