"""Ranking and classification metrics: ROC/AUC, average precision, Welch's t-test.

AUC uses the Mann-Whitney formulation (ties count half), computed via average
ranks so it agrees exactly with the O(n^2) pair count: wins and ties are
integers, so U is an exact half-integer in float64. Average precision sums
with ``math.fsum`` so it reproduces the definitional computation bit-for-bit.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np
from scipy import stats

from .dataio import Ranking


class UndefinedMetricError(ValueError):
    """Raised when a metric needs both classes (or non-degenerate variance) and got neither."""


def _check_binary(labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pos = labels.astype(bool)
    n_pos = int(pos.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            f"need both classes, got {n_pos} positives and {n_neg} negatives"
        )
    return pos, ~pos


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean rank of their group."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def roc_auc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Probability a random positive outscores a random negative, ties half-credit."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError(f"scores shape {scores.shape} != labels shape {labels.shape}")
    if np.any(np.isnan(scores)):
        raise ValueError("NaN scores are not rankable")
    pos, _ = _check_binary(labels)
    n_pos = int(pos.sum())
    n_neg = scores.size - n_pos
    ranks = _average_ranks(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2
    return u / (n_pos * n_neg)


def roc_curve(scores: Sequence[float], labels: Sequence[bool]) -> list[tuple[float, float]]:
    """Monotone (fpr, tpr) staircase from (0,0) to (1,1), one point per distinct score."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos, _ = _check_binary(labels)
    n_pos = int(pos.sum())
    n_neg = scores.size - n_pos

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_pos = pos[order].astype(np.int64)
    tp = np.cumsum(sorted_pos)
    fp = np.cumsum(1 - sorted_pos)
    # keep only the last index of each tie group (thresholds at distinct scores)
    distinct = np.r_[sorted_scores[1:] != sorted_scores[:-1], True]
    points = [(0.0, 0.0)]
    for i in np.flatnonzero(distinct):
        points.append((fp[i] / n_neg, tp[i] / n_pos))
    return points


def roc_curve_area(points: Sequence[tuple[float, float]]) -> float:
    """Trapezoidal area under an (fpr, tpr) polyline."""
    fpr = np.array([p[0] for p in points])
    tpr = np.array([p[1] for p in points])
    return float(np.trapezoid(tpr, fpr))


def average_precision(ranking: Ranking | Sequence[str], relevant_set: set[str]) -> float:
    """Mean over relevant items of precision at each item's rank (standard AP)."""
    ids = ranking.image_ids() if isinstance(ranking, Ranking) else list(ranking)
    if not relevant_set:
        raise UndefinedMetricError("relevant set is empty")
    missing = relevant_set - set(ids)
    if missing:
        raise ValueError(f"{len(missing)} relevant ids not present in the ranking")
    terms = []
    hits = 0
    for rank, image_id in enumerate(ids, start=1):
        if image_id in relevant_set:
            hits += 1
            terms.append(hits / rank)
    return math.fsum(terms) / len(relevant_set)


def mean_ap(aps: Sequence[float]) -> float:
    if len(aps) == 0:
        raise UndefinedMetricError("no AP values to average")
    return math.fsum(aps) / len(aps)


def welch_t_test(group_a: Sequence[float], group_b: Sequence[float]) -> tuple[float, float]:
    """Welch's unequal-variance t statistic and two-sided p (Welch-Satterthwaite df)."""
    a = np.asarray(group_a, dtype=np.float64)
    b = np.asarray(group_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each group needs at least 2 values")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    if va == 0 and vb == 0:
        if a.mean() == b.mean():
            return 0.0, 1.0
        raise UndefinedMetricError("both groups have zero variance and differ in mean")
    sa = va / a.size
    sb = vb / b.size
    t = (a.mean() - b.mean()) / math.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa**2 / (a.size - 1) + sb**2 / (b.size - 1))
    p = 2 * float(stats.t.sf(abs(t), df))
    return float(t), p
