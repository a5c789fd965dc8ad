"""Report bundles: delimited outputs plus rendered figures, side by side.

Every experiment flow writes the same trio into its output directory: CSV
tables for downstream tooling, a JSON summary for programmatic consumers, and
PNG figures for humans. Figures are drawn on explicit Figure objects (no
pyplot global state) so report generation is reentrant and headless.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .dataio import Ranking, save_ranking
from .experiments import CompareResult, EegUserRun, FeedbackRun, TimeBudgetResult

_FIG_DPI = 120


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _save(fig: Figure, path: Path) -> None:
    fig.savefig(path, dpi=_FIG_DPI, bbox_inches="tight", metadata={"Software": "eegrank"})


def write_eval_report(out_dir: str | Path, run: EegUserRun) -> dict:
    """Cross-query evaluation bundle: AUC table, ROC points, scores, figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    _write_csv(
        out_dir / "aucs.csv",
        ["query_id", "auc", "ap"],
        [[q.query_id, repr(q.auc), repr(q.ap)] for q in run.queries],
    )
    for q in run.queries:
        _write_csv(
            out_dir / f"roc_{q.query_id}.csv",
            ["fpr", "tpr"],
            [[repr(f), repr(t)] for f, t in q.roc_points],
        )
        _write_csv(
            out_dir / f"scores_{q.query_id}.csv",
            ["image_id", "score", "is_target"],
            [
                [image_id, repr(float(s)), int(t)]
                for image_id, s, t in zip(q.image_ids, q.scores, q.targets)
            ],
        )
        save_ranking(q.ranking, out_dir / f"ranking_{q.query_id}.csv")

    summary = {
        "profile": run.profile_name,
        "rate_hz": run.rate_hz,
        "seed": run.seed,
        "per_query": [
            {"query_id": q.query_id, "auc": q.auc, "ap": q.ap} for q in run.queries
        ],
        "mean_auc": run.mean_auc,
        "mean_ap": run.mean_ap,
    }
    _write_json(out_dir / "report.json", summary)

    fig = Figure(figsize=(5.5, 4.5))
    ax = fig.add_subplot(111)
    for q in run.queries:
        fpr = [p[0] for p in q.roc_points]
        tpr = [p[1] for p in q.roc_points]
        ax.plot(fpr, tpr, label=f"{q.query_id} (AUC {q.auc:.3f})")
    ax.plot([0, 1], [0, 1], ls="--", c="gray", lw=0.8)
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    rate = f" @ {run.rate_hz} Hz" if run.rate_hz else ""
    ax.set_title(f"{run.profile_name}{rate}, leave-one-query-out")
    ax.legend(loc="lower right")
    _save(fig, out_dir / "roc.png")
    return summary


def write_ranking_report(
    out_dir: str | Path, ranking: Ranking, ap: float | None, relevant: set[str] | None = None
) -> dict:
    """Single-ranking bundle: the CSV, its AP, and a recall-depth figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_ranking(ranking, out_dir / "ranking.csv")
    summary = {"query_id": ranking.query_id, "n_entries": len(ranking.entries), "ap": ap}
    _write_json(out_dir / "ap.json", summary)

    if relevant:
        ids = ranking.image_ids()
        hits = np.cumsum([1 if i in relevant else 0 for i in ids])
        recall = hits / len(relevant)
        fig = Figure(figsize=(5.5, 3.5))
        ax = fig.add_subplot(111)
        ax.plot(np.arange(1, len(ids) + 1), recall)
        ax.set_xlabel("Rank")
        ax.set_ylabel("Recall")
        title = f"Recall by depth ({ranking.query_id})" if ranking.query_id else "Recall by depth"
        ax.set_title(title + ("" if ap is None else f", AP {ap:.3f}"))
        _save(fig, out_dir / "recall.png")
    return summary


def write_compare_report(
    out_dir: str | Path, result: CompareResult, budget: TimeBudgetResult | None = None
) -> dict:
    """Grid bundle: per-cell mAP table, Welch tests, grouped-bar figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    _write_csv(
        out_dir / "cells.csv",
        ["profile", "rate_hz", "interface", "duration_s", "seed", "mean_ap", "per_query_ap"],
        [
            [
                c.profile_name,
                c.rate_hz,
                c.interface,
                c.duration_s,
                c.seed,
                repr(c.mean_ap),
                ";".join(repr(x) for x in c.per_query_ap),
            ]
            for c in result.cells
        ],
    )
    _write_csv(
        out_dir / "t_tests.csv",
        ["comparison", "t", "p"],
        [[t["comparison"], repr(t["t"]), repr(t["p"])] for t in result.t_tests],
    )

    profiles = sorted({c.profile_name for c in result.cells})
    rates = sorted({c.rate_hz for c in result.cells})
    table = {}
    for profile in profiles:
        for rate in rates:
            for interface in ("eeg", "mouse"):
                table[f"{profile}/{rate}Hz/{interface}"] = result.mean_ap_of(
                    profile, rate, interface
                )
    summary = {
        "mean_ap": table,
        "t_tests": result.t_tests,
        "n_cells": len(result.cells),
        "note": "synthetic users only; numbers do not reproduce human-subject results",
    }
    if budget is not None:
        summary["time_budget"] = {
            "mouse_map_200s": budget.mouse_map_200s,
            "mouse_map_100s": budget.mouse_map_100s,
            "eeg_map_5hz": budget.eeg_map_5hz,
            "eeg_map_10hz": budget.eeg_map_10hz,
            "mouse_drop": budget.mouse_drop,
            "eeg_drop": budget.eeg_drop,
        }
    _write_json(out_dir / "report.json", summary)

    fig = Figure(figsize=(7, 4))
    ax = fig.add_subplot(111)
    labels = []
    eeg_vals = []
    mouse_vals = []
    for profile in profiles:
        for rate in rates:
            labels.append(f"{profile}\n{rate} Hz")
            eeg_vals.append(result.mean_ap_of(profile, rate, "eeg"))
            mouse_vals.append(result.mean_ap_of(profile, rate, "mouse"))
    x = np.arange(len(labels))
    width = 0.38
    ax.bar(x - width / 2, eeg_vals, width, label="EEG")
    ax.bar(x + width / 2, mouse_vals, width, label="Mouse")
    ax.set_xticks(x, labels)
    ax.set_ylabel("mAP (synthetic users)")
    ax.set_title("EEG vs mouse rankings across the grid")
    ax.legend()
    _save(fig, out_dir / "map_grid.png")

    # classifier-level view: mean AUC per profile and rate (EEG cells only)
    auc_cells = [c for c in result.cells if c.per_query_auc is not None]
    if auc_cells:
        fig = Figure(figsize=(6, 3.8))
        ax = fig.add_subplot(111)
        x = np.arange(len(profiles))
        width = 0.8 / max(len(rates), 1)
        for r_i, rate in enumerate(rates):
            vals = []
            for profile in profiles:
                group = [
                    float(np.mean(c.per_query_auc))
                    for c in auc_cells
                    if c.profile_name == profile and c.rate_hz == rate
                ]
                vals.append(float(np.mean(group)) if group else np.nan)
            ax.bar(x + (r_i - (len(rates) - 1) / 2) * width, vals, width, label=f"{rate} Hz")
        ax.set_xticks(x, profiles)
        ax.set_ylabel("mean AUC (synthetic users)")
        ax.set_ylim(0.0, 1.0)
        ax.axhline(0.5, ls="--", c="gray", lw=0.8)
        ax.set_title("Epoch classifier AUC by profile and rate")
        ax.legend()
        _save(fig, out_dir / "auc_grid.png")

    if budget is not None:
        fig = Figure(figsize=(5.5, 3.8))
        ax = fig.add_subplot(111)
        x = np.arange(2)
        ax.bar(x - 0.19, [budget.eeg_map_5hz, budget.eeg_map_10hz], 0.38, label="EEG")
        ax.bar(x + 0.19, [budget.mouse_map_200s, budget.mouse_map_100s], 0.38, label="Mouse")
        ax.set_xticks(x, ["full budget\n(200 s / 5 Hz)", "half budget\n(100 s / 10 Hz)"])
        ax.set_ylabel("mAP (synthetic users)")
        ax.set_title("Interaction budget halved: per-interface drop")
        ax.legend()
        _save(fig, out_dir / "time_budget.png")
    return summary


def write_feedback_report(out_dir: str | Path, runs: list[FeedbackRun]) -> dict:
    """Feedback-loop bundle: per-run APs and a session-vs-feedback figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out_dir / "feedback.csv",
        ["profile", "seed", "session_ap", "feedback_ap", "n_label_errors"],
        [
            [r.profile_name, r.seed, repr(r.session_ap), repr(r.feedback_ap), r.n_label_errors]
            for r in runs
        ],
    )
    by_profile: dict[str, list[FeedbackRun]] = {}
    for r in runs:
        by_profile.setdefault(r.profile_name, []).append(r)
    summary = {
        "per_profile": {
            name: {
                "mean_session_ap": float(np.mean([r.session_ap for r in group])),
                "mean_feedback_ap": float(np.mean([r.feedback_ap for r in group])),
                "n_runs": len(group),
            }
            for name, group in by_profile.items()
        }
    }
    _write_json(out_dir / "report.json", summary)

    fig = Figure(figsize=(5.5, 3.8))
    ax = fig.add_subplot(111)
    names = sorted(by_profile)
    x = np.arange(len(names))
    session = [summary["per_profile"][n]["mean_session_ap"] for n in names]
    feedback = [summary["per_profile"][n]["mean_feedback_ap"] for n in names]
    ax.bar(x - 0.19, session, 0.38, label="session ranking")
    ax.bar(x + 0.19, feedback, 0.38, label="feedback re-ranking")
    ax.set_xticks(x, names)
    ax.set_ylabel("AP")
    ax.set_title("Relevance feedback over the full collection")
    ax.legend()
    _save(fig, out_dir / "feedback.png")
    return summary
