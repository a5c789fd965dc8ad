"""Multi-session experiment harnesses over synthetic users.

Everything here is a deterministic function of explicit seeds: plans derive
their seeds from a base seed and query index, profiles get the base seed, and
the simulated mouse annotator has its own stream. Results are plain
dataclasses the report layer can serialize. All numbers produced by these
harnesses describe synthetic users only.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import metrics, retrieval, svm, synth
from .dataio import AnnotationEvent, AnnotationLog, FeatureMatrix, Ranking, RsvpPlan
from .pipeline import PipelineConfig, preprocess_session
from .planner import build_plan
from .synth import UserProfile

N_QUERIES = 3


def resolve_profile(name_or_profile: str | UserProfile, seed: int) -> UserProfile:
    if isinstance(name_or_profile, UserProfile):
        return replace(name_or_profile, seed=seed)
    return replace(synth.load_preset(name_or_profile), seed=seed)


def carve_query_pools(
    relevant_ids: list[str], other_ids: list[str], n_queries: int = N_QUERIES
) -> list[tuple[list[str], list[str]]]:
    """Split id pools into per-query (50 targets, 950 distractors) slices."""
    pools = []
    for q in range(n_queries):
        targets = relevant_ids[q * 50 : (q + 1) * 50]
        distractors = other_ids[q * 950 : (q + 1) * 950]
        if len(targets) != 50 or len(distractors) != 950:
            raise ValueError(
                f"pool too small for query {q}: need 50 targets/950 distractors per query"
            )
        pools.append((targets, distractors))
    return pools


def default_query_plans(rate_hz: int, base_seed: int, gap_s: float = 5.0) -> list[RsvpPlan]:
    """Three disjoint-id plans with seeds derived from the base seed."""
    plans = []
    for q in range(N_QUERIES):
        targets = [f"q{q}t{i:03d}" for i in range(50)]
        distractors = [f"q{q}d{i:03d}" for i in range(950)]
        plans.append(
            build_plan(
                targets,
                distractors,
                rate_hz,
                seed=base_seed * 10 + q,
                query_id=f"q{q}",
                inter_block_gap_s=gap_s,
            )
        )
    return plans


def plans_from_pools(
    pools: list[tuple[list[str], list[str]]], rate_hz: int, base_seed: int, gap_s: float = 5.0
) -> list[RsvpPlan]:
    return [
        build_plan(
            targets,
            distractors,
            rate_hz,
            seed=base_seed * 10 + q,
            query_id=f"q{q}",
            inter_block_gap_s=gap_s,
        )
        for q, (targets, distractors) in enumerate(pools)
    ]


@dataclass(eq=False)
class QueryEval:
    query_id: str
    auc: float
    ap: float
    roc_points: list[tuple[float, float]]
    ranking: Ranking
    scores: np.ndarray
    image_ids: list[str]
    targets: np.ndarray


@dataclass(eq=False)
class EegUserRun:
    profile_name: str
    rate_hz: int
    seed: int
    queries: list[QueryEval]
    features: list[FeatureMatrix] = field(default_factory=list, repr=False)

    @property
    def aucs(self) -> list[float]:
        return [q.auc for q in self.queries]

    @property
    def mean_auc(self) -> float:
        return float(np.mean(self.aucs))

    @property
    def mean_ap(self) -> float:
        return float(metrics.mean_ap([q.ap for q in self.queries]))


def preprocess_queries(
    plans: list[RsvpPlan], profile: UserProfile, cfg: PipelineConfig | None = None
) -> list[FeatureMatrix]:
    mats = []
    for plan in plans:
        rec, markers = synth.simulate_recording(plan, profile)
        mats.append(preprocess_session(rec, markers, cfg))
    return mats


def run_eeg_user(
    plans: list[RsvpPlan],
    profile: UserProfile,
    cfg: PipelineConfig | None = None,
    c: float = svm.DEFAULT_C,
    keep_features: bool = False,
) -> EegUserRun:
    """Simulate, preprocess, and leave-one-query-out score one synthetic user."""
    mats = preprocess_queries(plans, profile, cfg)
    scores = svm.cross_query_scores(mats, c=c)
    queries = []
    for plan, mat, s in zip(plans, mats, scores):
        auc = metrics.roc_auc(s, mat.targets)
        roc_points = metrics.roc_curve(s, mat.targets)
        ranking = retrieval.ranking_from_scores(
            mat.image_ids, s, display_order=plan.image_ids(), query_id=plan.query_id
        )
        ap = metrics.average_precision(ranking, set(plan.target_ids()))
        queries.append(
            QueryEval(
                query_id=plan.query_id,
                auc=auc,
                ap=ap,
                roc_points=roc_points,
                ranking=ranking,
                scores=s,
                image_ids=mat.image_ids,
                targets=mat.targets,
            )
        )
    return EegUserRun(
        profile_name=profile.name or "custom",
        rate_hz=plans[0].rate_hz,
        seed=profile.seed,
        queries=queries,
        features=mats if keep_features else [],
    )


# ---------------------------------------------------------------------------
# Simulated mouse annotator
# ---------------------------------------------------------------------------


def simulate_mouse_log(
    plan: RsvpPlan,
    duration_s: float,
    scan_rate_img_s: float = 2.0,
    detect_prob: float = 0.9,
    page_size: int = 20,
    seed: int = 0,
    session_id: str | None = None,
) -> AnnotationLog:
    """Headless stand-in for a human on the grid interface.

    The annotator pages through the display order at a fixed scan rate,
    clicking each target it detects (Bernoulli per image) the moment it is
    scanned. Events stop at the time budget.
    """
    if scan_rate_img_s <= 0:
        raise ValueError("scan rate must be positive")
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, plan.seed & 0xFFFFFFFF]))
    order = [(image_id, is_t) for block in plan.blocks for image_id, is_t in block]
    budget_ms = round(duration_s * 1000)
    events: list[AnnotationEvent] = []
    for k, (image_id, is_target) in enumerate(order):
        page = k // page_size
        if k % page_size == 0:
            page_open_ms = round(k / scan_rate_img_s * 1000)
            if page_open_ms > budget_ms:
                break
            if page > 0:
                events.append(AnnotationEvent(page_open_ms, "next", page=page))
            for image_id2, _ in order[k : k + page_size]:
                events.append(AnnotationEvent(page_open_ms, "show", image_id=image_id2, page=page))
        looked_ms = round((k + 1) / scan_rate_img_s * 1000)
        detected = bool(rng.uniform() < detect_prob)  # drawn for every image, seen or not
        if looked_ms > budget_ms:
            continue
        if is_target and detected:
            events.append(AnnotationEvent(looked_ms, "click", image_id=image_id, page=page))
    events.sort(key=lambda e: e.t_ms)
    return AnnotationLog(
        session_id=session_id or f"{plan.query_id}-mouse",
        mode="mouse",
        rate_hz=plan.rate_hz,
        duration_s=duration_s,
        events=events,
    )


def run_mouse_user(
    plans: list[RsvpPlan],
    duration_s: float,
    scan_rate_img_s: float = 2.0,
    detect_prob: float = 0.9,
    page_size: int = 20,
    seed: int = 0,
) -> list[tuple[Ranking, float]]:
    """Simulated-annotator rankings and APs for each query plan."""
    out = []
    for plan in plans:
        log = simulate_mouse_log(
            plan,
            duration_s,
            scan_rate_img_s=scan_rate_img_s,
            detect_prob=detect_prob,
            page_size=page_size,
            seed=seed,
        )
        sets = retrieval.annotation_sets(log, plan.image_ids())
        ranking = retrieval.ranking_from_annotations(sets, query_id=plan.query_id)
        ap = metrics.average_precision(ranking, set(plan.target_ids()))
        out.append((ranking, ap))
    return out


# ---------------------------------------------------------------------------
# Grids and budget comparisons
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class CompareCell:
    profile_name: str
    rate_hz: int
    interface: str  # "eeg" | "mouse"
    duration_s: float
    seed: int
    per_query_ap: list[float]
    mean_ap: float
    per_query_auc: list[float] | None = None  # EEG only


@dataclass(eq=False)
class CompareResult:
    cells: list[CompareCell]
    t_tests: list[dict]

    def mean_ap_of(self, profile: str, rate: int, interface: str) -> float:
        values = [
            c.mean_ap
            for c in self.cells
            if c.profile_name == profile and c.rate_hz == rate and c.interface == interface
        ]
        return float(np.mean(values))


def run_compare_grid(
    seeds: list[int],
    profiles: tuple[str, ...] = ("expert", "novice"),
    rates: tuple[int, ...] = (5, 10),
    scan_rate_img_s: float = 2.0,
    detect_prob: float = 0.9,
    page_size: int = 20,
    cfg: PipelineConfig | None = None,
) -> CompareResult:
    """The expert/novice x 5/10 Hz x eeg/mouse grid, one cell per seed.

    Mouse budgets match the stimulus span of the paired EEG rate (200 s at
    5 Hz, 100 s at 10 Hz); the mouse sees the same display order.
    """
    cells: list[CompareCell] = []
    for rate in rates:
        duration_s = 1000 / rate
        for profile_name in profiles:
            for seed in seeds:
                plans = default_query_plans(rate, base_seed=seed)
                profile = resolve_profile(profile_name, seed)
                eeg = run_eeg_user(plans, profile, cfg)
                cells.append(
                    CompareCell(
                        profile_name=profile_name,
                        rate_hz=rate,
                        interface="eeg",
                        duration_s=duration_s,
                        seed=seed,
                        per_query_ap=[q.ap for q in eeg.queries],
                        mean_ap=eeg.mean_ap,
                        per_query_auc=eeg.aucs,
                    )
                )
                mouse = run_mouse_user(
                    plans,
                    duration_s,
                    scan_rate_img_s=scan_rate_img_s,
                    detect_prob=detect_prob,
                    page_size=page_size,
                    seed=seed,
                )
                aps = [ap for _, ap in mouse]
                cells.append(
                    CompareCell(
                        profile_name=profile_name,
                        rate_hz=rate,
                        interface="mouse",
                        duration_s=duration_s,
                        seed=seed,
                        per_query_ap=aps,
                        mean_ap=float(metrics.mean_ap(aps)),
                    )
                )

    t_tests = []

    def cell_values(profile=None, rate=None, interface=None, what="mean_ap"):
        out = []
        for c in cells:
            if profile and c.profile_name != profile:
                continue
            if rate and c.rate_hz != rate:
                continue
            if interface and c.interface != interface:
                continue
            if what == "mean_auc":
                if c.per_query_auc is None:
                    continue
                out.append(float(np.mean(c.per_query_auc)))
            else:
                out.append(c.mean_ap)
        return out

    if len(seeds) >= 2:
        for rate in rates:
            if {"expert", "novice"} <= set(profiles):
                a = cell_values(profile="expert", rate=rate, interface="eeg", what="mean_auc")
                b = cell_values(profile="novice", rate=rate, interface="eeg", what="mean_auc")
                t, p = metrics.welch_t_test(a, b)
                t_tests.append(
                    {"comparison": f"expert-vs-novice auc @{rate}Hz", "t": t, "p": p}
                )
        if len(rates) == 2:
            for profile_name in profiles:
                a = cell_values(profile=profile_name, rate=rates[0], interface="eeg")
                b = cell_values(profile=profile_name, rate=rates[1], interface="eeg")
                t, p = metrics.welch_t_test(a, b)
                t_tests.append(
                    {
                        "comparison": f"{profile_name} eeg mAP {rates[0]}Hz-vs-{rates[1]}Hz",
                        "t": t,
                        "p": p,
                    }
                )
        for rate in rates:
            for profile_name in profiles:
                a = cell_values(profile=profile_name, rate=rate, interface="eeg")
                b = cell_values(profile=profile_name, rate=rate, interface="mouse")
                t, p = metrics.welch_t_test(a, b)
                t_tests.append(
                    {"comparison": f"{profile_name} eeg-vs-mouse mAP @{rate}Hz", "t": t, "p": p}
                )
    return CompareResult(cells=cells, t_tests=t_tests)


@dataclass(eq=False)
class TimeBudgetResult:
    mouse_map_200s: float
    mouse_map_100s: float
    eeg_map_5hz: float
    eeg_map_10hz: float

    @property
    def mouse_drop(self) -> float:
        return self.mouse_map_200s - self.mouse_map_100s

    @property
    def eeg_drop(self) -> float:
        return self.eeg_map_5hz - self.eeg_map_10hz


def time_budget_comparison(
    seeds: list[int],
    profile_name: str = "novice",
    scan_rate_img_s: float = 2.0,
    detect_prob: float = 0.9,
    page_size: int = 20,
    cfg: PipelineConfig | None = None,
) -> TimeBudgetResult:
    """Halving the interaction budget: how much does each interface lose?

    Mouse runs on the 5 Hz-order plans with 200 s vs the 10 Hz-order plans
    with 100 s; EEG runs at 5 Hz vs 10 Hz on the same plans. The novice
    preset is the default subject: it keeps session mAP in a mid range where
    the rate comparison is informative (the expert preset saturates 5 Hz).
    """
    mouse_aps = {200: [], 100: []}
    eeg_aps = {5: [], 10: []}
    for seed in seeds:
        for rate, budget in ((5, 200), (10, 100)):
            plans = default_query_plans(rate, base_seed=seed)
            profile = resolve_profile(profile_name, seed)
            eeg = run_eeg_user(plans, profile, cfg)
            eeg_aps[rate].append(eeg.mean_ap)
            mouse = run_mouse_user(
                plans,
                float(budget),
                scan_rate_img_s=scan_rate_img_s,
                detect_prob=detect_prob,
                page_size=page_size,
                seed=seed,
            )
            mouse_aps[budget].append(float(metrics.mean_ap([ap for _, ap in mouse])))
    return TimeBudgetResult(
        mouse_map_200s=float(np.mean(mouse_aps[200])),
        mouse_map_100s=float(np.mean(mouse_aps[100])),
        eeg_map_5hz=float(np.mean(eeg_aps[5])),
        eeg_map_10hz=float(np.mean(eeg_aps[10])),
    )


# ---------------------------------------------------------------------------
# Feedback loop (EEG labels -> larger collection)
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class FeedbackRun:
    profile_name: str
    seed: int
    session_ap: float  # AP of the EEG ranking within the 1000-image session
    feedback_ap: float  # AP of the re-ranking over the full collection
    n_label_errors: int  # mislabeled items among the 10+100 picked


def run_feedback_loop(
    features: FeatureMatrix,
    relevant_ids: list[str],
    profile_name: str,
    seed: int,
    rate_hz: int = 5,
    n_pos: int = 10,
    n_neg: int = 100,
    cfg: PipelineConfig | None = None,
) -> FeedbackRun:
    """EEG session on a carve-out of the collection, 10/100 labels, re-rank all.

    The first query's ranking (scored by a model trained on the other two)
    supplies the labels.
    """
    relevant_set = set(relevant_ids)
    others = [i for i in features.image_ids if i not in relevant_set]
    pools = carve_query_pools(relevant_ids, others)
    plans = plans_from_pools(pools, rate_hz, base_seed=seed)
    profile = resolve_profile(profile_name, seed)
    mats = preprocess_queries(plans, profile, cfg)

    # only query 0's ranking feeds the labels: one fit on the other two queries
    model = svm.fit(
        np.vstack([mats[1].values, mats[2].values]),
        np.concatenate([mats[1].targets, mats[2].targets]),
    )
    scores = svm.decision_scores(model, mats[0])
    ranking0 = retrieval.ranking_from_scores(
        mats[0].image_ids, scores, display_order=plans[0].image_ids(), query_id=plans[0].query_id
    )
    session_ap = metrics.average_precision(ranking0, set(plans[0].target_ids()))

    pos, neg = retrieval.select_feedback_labels_eeg(ranking0, n_pos=n_pos, n_neg=n_neg)
    n_errors = sum(1 for i in pos if i not in relevant_set) + sum(
        1 for i in neg if i in relevant_set
    )
    ranking = retrieval.feedback_rank(pos, neg, features, query_id=plans[0].query_id)
    feedback_ap = metrics.average_precision(ranking, relevant_set)
    return FeedbackRun(
        profile_name=profile_name,
        seed=seed,
        session_ap=session_ap,
        feedback_ap=feedback_ap,
        n_label_errors=n_errors,
    )
