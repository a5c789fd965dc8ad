"""Rankings from classifier scores and from mouse annotation logs, plus
relevance-feedback re-ranking over a larger feature-indexed collection.

Two ranking constructions exist side by side: score-sorted (EEG route) and
the clicked/seen split (mouse route) where clicked images go on top, images
seen before the last positive click but left unclicked go to the bottom, and
everything else keeps its display order in between. Either route's output
can seed a feedback model over a larger collection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import svm
from .dataio import AnnotationLog, DataError, FeatureMatrix, Ranking
from .svm import TrainingError


@dataclass(eq=False)
class AnnotationSets:
    """Session image set split by the mouse log: positives, presumed negatives, rest.

    ``p_a`` is ordered by click time; ``n_a`` and ``rest`` keep display order.
    The three parts are disjoint and cover the session's image set.
    """

    p_a: list[str]
    n_a: list[str]
    rest: list[str]

    def all_ids(self) -> list[str]:
        return self.p_a + self.rest + self.n_a


def ranking_from_scores(
    image_ids: list[str], scores, display_order: list[str] | None = None, query_id: str = ""
) -> Ranking:
    """Sort descending by score; exact ties keep display (or given) order, stably."""
    scores = np.asarray(scores, dtype=np.float64)
    if len(image_ids) != scores.size:
        raise ValueError(f"{len(image_ids)} ids for {scores.size} scores")
    if np.any(np.isnan(scores)):
        raise ValueError("NaN scores are not rankable")
    if display_order is not None:
        pos = {image_id: k for k, image_id in enumerate(display_order)}
        missing = [i for i in image_ids if i not in pos]
        if missing:
            raise ValueError(f"{len(missing)} scored ids not in display order")
        tiebreak = [pos[i] for i in image_ids]
    else:
        tiebreak = list(range(len(image_ids)))
    order = sorted(range(len(image_ids)), key=lambda k: (-scores[k], tiebreak[k]))
    return Ranking(
        query_id=query_id,
        entries=[(image_ids[k], float(scores[k])) for k in order],
    )


def annotation_sets(log: AnnotationLog, display_order: list[str]) -> AnnotationSets:
    """Split the session's images by the mouse log.

    Click events toggle an image's marked state. ``p_a`` holds the images
    left marked at the end, ordered by the click that marked them; ``n_a``
    holds images shown at or before the last marking click and never left
    marked; the rest stay in display order. Events past the session budget
    (t_ms > duration_s * 1000) are ignored, mirroring the timer cutoff.
    """
    known = set(display_order)
    budget_ms = round(log.duration_s * 1000)
    shown_at: dict[str, int] = {}
    marked_at: dict[str, int] = {}
    for ev in log.events:
        if ev.t_ms > budget_ms:
            continue
        if ev.kind == "show":
            if ev.image_id is None:
                raise DataError("show event without image_id")
            shown_at.setdefault(ev.image_id, ev.t_ms)
        elif ev.kind == "click":
            if ev.image_id is None:
                raise DataError("click event without image_id")
            if ev.image_id not in shown_at or shown_at[ev.image_id] > ev.t_ms:
                raise DataError(f"click on image {ev.image_id!r} never shown before t={ev.t_ms}")
            if ev.image_id in marked_at:
                del marked_at[ev.image_id]  # re-click unmarks
            else:
                marked_at[ev.image_id] = ev.t_ms
    unknown = set(shown_at) - known
    if unknown:
        raise DataError(f"log shows {len(unknown)} images outside the session set")

    display_pos = {image_id: k for k, image_id in enumerate(display_order)}
    p_a = sorted(marked_at, key=lambda i: (marked_at[i], display_pos[i]))
    if marked_at:
        last_positive_ms = max(marked_at.values())
        negatives = {
            i for i, t in shown_at.items() if t <= last_positive_ms and i not in marked_at
        }
    else:
        negatives = set()
    n_a = [i for i in display_order if i in negatives]
    in_p = set(p_a)
    rest = [i for i in display_order if i not in in_p and i not in negatives]
    return AnnotationSets(p_a=p_a, n_a=n_a, rest=rest)


def ranking_from_annotations(sets: AnnotationSets, query_id: str = "") -> Ranking:
    """Clicked images on top (click order), presumed negatives at the bottom,
    everything else in display order in between. Scores are null."""
    ordered = sets.p_a + sets.rest + sets.n_a
    return Ranking(query_id=query_id, entries=[(image_id, None) for image_id in ordered])


def select_feedback_labels_eeg(
    ranking: Ranking, n_pos: int = 10, n_neg: int = 100
) -> tuple[list[str], list[str]]:
    """Trust only the extremes of a score ranking: top n_pos as positive,
    bottom n_neg as negative."""
    ids = ranking.image_ids()
    if len(ids) < n_pos + n_neg:
        raise ValueError(f"ranking of {len(ids)} too short for {n_pos}+{n_neg} labels")
    return ids[:n_pos], ids[-n_neg:]


def select_feedback_labels_mouse(sets: AnnotationSets) -> tuple[list[str], list[str]]:
    """Clicked images as positives, seen-but-unclicked as negatives."""
    if not sets.p_a:
        raise TrainingError("no positive annotations; feedback training infeasible")
    if not sets.n_a:
        raise TrainingError("no presumed negatives; feedback training infeasible")
    return list(sets.p_a), list(sets.n_a)


def feedback_rank(
    positive_ids: list[str],
    negative_ids: list[str],
    features: FeatureMatrix,
    c: float = svm.DEFAULT_C,
    query_id: str = "",
) -> Ranking:
    """Fit a linear SVM on the labeled rows and rank the whole collection by score.

    Ties break by feature-matrix row order (stable).
    """
    overlap = set(positive_ids) & set(negative_ids)
    if overlap:
        raise ValueError(f"{len(overlap)} ids labeled both positive and negative")
    row_of = {image_id: k for k, image_id in enumerate(features.image_ids)}
    missing = [i for i in list(positive_ids) + list(negative_ids) if i not in row_of]
    if missing:
        raise ValueError(f"{len(missing)} labeled ids missing from the feature matrix")
    rows = [row_of[i] for i in positive_ids] + [row_of[i] for i in negative_ids]
    labels = np.array([1.0] * len(positive_ids) + [-1.0] * len(negative_ids))
    X = features.values.astype(np.float64)
    model = svm.fit(X[rows], labels, c=c)
    scores = svm.decision_scores(model, X)
    return ranking_from_scores(features.image_ids, scores, query_id=query_id)


def check_permutation(ranking: Ranking, expected_ids: list[str]) -> None:
    """Assert a ranking is a permutation of the expected id set."""
    got = ranking.image_ids()
    if len(got) != len(expected_ids) or set(got) != set(expected_ids):
        raise DataError(
            f"ranking with {len(got)} entries is not a permutation of the {len(expected_ids)} expected ids"
        )


def average_precision_of_scores(image_ids, scores, relevant: set[str]) -> float:
    """Convenience: AP of a score-sorted ranking (input-order tie break)."""
    from .metrics import average_precision

    return average_precision(ranking_from_scores(list(image_ids), scores), relevant)
