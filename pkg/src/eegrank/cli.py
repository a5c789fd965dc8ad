"""Command-line orchestration of the experiment flows.

Each subcommand is a pure function of its input files and flags to its output
files; reruns with identical inputs produce byte-identical outputs. Error
classes map to distinct exit codes:

  2  usage errors (bad flags, missing arguments)
  3  file format errors
  4  data errors (inconsistent logs/markers, rejected epochs)
  5  validation/precondition errors
  6  infeasible training or undefined metrics
  7  numeric failures (filter design)
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import dataio, experiments, fixtures, metrics, report, retrieval, svm, synth
from .dataio import DataError, FormatError
from .metrics import UndefinedMetricError
from .pipeline import NumericError, PipelineConfig, RejectedMarkersError, preprocess_session
from .planner import build_plan
from .svm import TrainingError

EXIT_FORMAT = 3
EXIT_DATA = 4
EXIT_VALIDATION = 5
EXIT_INFEASIBLE = 6
EXIT_NUMERIC = 7


def _exit_code_of(exc: Exception) -> int:
    if isinstance(exc, FormatError):
        return EXIT_FORMAT
    if isinstance(exc, (DataError, RejectedMarkersError)):
        return EXIT_DATA
    if isinstance(exc, (TrainingError, UndefinedMetricError)):
        return EXIT_INFEASIBLE
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC
    if isinstance(exc, (ValueError, KeyError, FileNotFoundError)):
        return EXIT_VALIDATION
    raise exc


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Exception as exc:  # noqa: BLE001 - mapped to exit codes
            code = _exit_code_of(exc)
            click.echo(f"error: {exc}", err=True)
            sys.exit(code)

    return wrapper


@click.group()
def main():
    """Synthetic RSVP EEG sessions, epoch classification, and ranking flows."""


def _load_profile(spec: str, seed: int) -> synth.UserProfile:
    from dataclasses import replace

    if spec in ("expert", "novice"):
        profile = synth.load_preset(spec)
    else:
        profile = synth.UserProfile.load(spec)
    return replace(profile, seed=seed)


@main.command("gen-dataset")
@click.option("--n", default=1000, show_default=True)
@click.option("--targets", "n_targets", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--glyph", default="ring", type=click.Choice(["ring", "cross"]), show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@handle_errors
def gen_dataset(n, n_targets, seed, glyph, out_dir):
    """Render a synthetic image dataset with an embedded query glyph."""
    manifest = fixtures.gen_images(
        n, n_targets, fixtures.GlyphSpec(shape=glyph), seed=seed, out_dir=out_dir
    )
    click.echo(f"wrote {n} images ({n_targets} targets) to {out_dir}")
    return manifest


@main.command("gen-features")
@click.option("--n", default=5000, show_default=True)
@click.option("--dims", default=128, show_default=True)
@click.option("--relevant", "n_relevant", default=250, show_default=True)
@click.option("--separation", default=10.0, show_default=True)
@click.option("--noise-sd", default=1.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_stem", required=True, type=click.Path())
@handle_errors
def gen_features(n, dims, n_relevant, separation, noise_sd, seed, out_stem):
    """Synthesize a clustered feature matrix plus its relevance ground truth."""
    mat, relevant_ids = fixtures.gen_feature_set(
        n=n, d=dims, n_relevant=n_relevant, separation=separation, noise_sd=noise_sd, seed=seed
    )
    dataio.save_feature_matrix(mat, out_stem)
    truth_path = Path(out_stem).with_suffix("").as_posix() + ".truth.json"
    with open(truth_path, "w") as fh:
        json.dump({"relevant_ids": relevant_ids, "image_ids": mat.image_ids}, fh, indent=2)
        fh.write("\n")
    click.echo(f"wrote {n}x{dims} features to {out_stem} (+ {truth_path})")


@main.command("gen-plan")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True))
@click.option("--truth", "truth_path", type=click.Path(exists=True))
@click.option("--query-index", default=0, show_default=True)
@click.option("--rate", default=5, type=click.Choice(["5", "10"]), show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--query-id", default="", show_default=True)
@click.option("--gap", "gap_s", default=5.0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@handle_errors
def gen_plan(manifest_path, truth_path, query_index, rate, seed, query_id, gap_s, out_path):
    """Build an oddball RSVP plan from a dataset manifest or feature ground truth."""
    if bool(manifest_path) == bool(truth_path):
        raise ValueError("pass exactly one of --manifest or --truth")
    if manifest_path:
        manifest = fixtures.load_manifest(manifest_path)
        targets = [im["id"] for im in manifest["images"] if im["is_target"]]
        distractors = [im["id"] for im in manifest["images"] if not im["is_target"]]
    else:
        with open(truth_path) as fh:
            truth = json.load(fh)
        relevant = truth["relevant_ids"]
        others = [i for i in truth["image_ids"] if i not in set(relevant)]
        pools = experiments.carve_query_pools(relevant, others, n_queries=query_index + 1)
        targets, distractors = pools[query_index]
    plan = build_plan(
        targets[:50],
        distractors[:950],
        int(rate),
        seed=seed,
        query_id=query_id or f"q{query_index}",
        inter_block_gap_s=gap_s,
    )
    dataio.save_plan(plan, out_path)
    click.echo(f"wrote plan {plan.query_id} ({rate} Hz, seed {seed}) to {out_path}")


@main.command("simulate")
@click.option("--plan", "plan_path", required=True, type=click.Path(exists=True))
@click.option("--profile", default="expert", show_default=True, help="expert, novice, or a JSON path")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_stem", required=True, type=click.Path())
@handle_errors
def simulate(plan_path, profile, seed, out_stem):
    """Render a synthetic EEG session: recording + markers + RSVP button log."""
    plan = dataio.load_plan(plan_path)
    user = _load_profile(profile, seed)
    session = synth.simulate_session(plan, user)
    dataio.save_recording(session.recording, out_stem)
    dataio.save_markers(session.markers, f"{out_stem}.markers.jsonl")
    dataio.save_log(session.log, f"{out_stem}.rsvp-log.json")
    click.echo(
        f"wrote {session.recording.n_channels}ch x {session.recording.n_samples} samples, "
        f"{len(session.markers)} markers to {out_stem}.*"
    )


@main.command("preprocess")
@click.option("--rec", "rec_stem", required=True, type=click.Path())
@click.option("--markers", "markers_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", "out_stem", required=True, type=click.Path())
@handle_errors
def preprocess(rec_stem, markers_path, config_path, out_stem):
    """Run the preprocessing chain to a per-epoch feature matrix."""
    rec = dataio.load_recording(rec_stem)
    markers = dataio.load_markers(markers_path)
    cfg = PipelineConfig.load(config_path) if config_path else PipelineConfig()
    mat = preprocess_session(rec, markers, cfg)
    dataio.save_feature_matrix(mat, out_stem)
    n_targets = int(mat.targets.sum()) if mat.targets is not None else 0
    click.echo(f"wrote {mat.n_rows}x{mat.n_dims} features ({n_targets} target rows) to {out_stem}")


def _load_labeled_query(spec: str):
    """Parse FEATURES:MARKERS into a labeled FeatureMatrix."""
    try:
        feat_path, markers_path = spec.rsplit(":", 1)
    except ValueError:
        raise ValueError(f"--query must be FEATURES:MARKERS, got {spec!r}")
    mat = dataio.load_feature_matrix(feat_path)
    markers = dataio.load_markers(markers_path)
    label_of = {m.image_id: m.is_target for m in markers}
    missing = [i for i in mat.image_ids if i not in label_of]
    if missing:
        raise DataError(f"{len(missing)} feature rows have no marker label in {markers_path}")
    mat.targets = np.array([label_of[i] for i in mat.image_ids], dtype=bool)
    return mat, markers[0].query_id if markers else ""


@main.command("eval-eeg")
@click.option(
    "--query",
    "queries",
    multiple=True,
    required=True,
    help="FEATURES:MARKERS, three times (one per query)",
)
@click.option("--c", "c_param", default=1.0, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
@handle_errors
def eval_eeg(queries, c_param, out_dir):
    """Leave-one-query-out evaluation: AUC/AP report, ROC points, figures."""
    if len(queries) != 3:
        raise ValueError(f"need exactly 3 --query options, got {len(queries)}")
    mats = []
    query_ids = []
    for spec in queries:
        mat, query_id = _load_labeled_query(spec)
        mats.append(mat)
        query_ids.append(query_id)
    scores = svm.cross_query_scores(mats, c=c_param)
    evals = []
    for query_id, mat, s in zip(query_ids, mats, scores):
        ranking = retrieval.ranking_from_scores(mat.image_ids, s, query_id=query_id)
        relevant = {i for i, t in zip(mat.image_ids, mat.targets) if t}
        evals.append(
            experiments.QueryEval(
                query_id=query_id,
                auc=metrics.roc_auc(s, mat.targets),
                ap=metrics.average_precision(ranking, relevant),
                roc_points=metrics.roc_curve(s, mat.targets),
                ranking=ranking,
                scores=s,
                image_ids=mat.image_ids,
                targets=mat.targets,
            )
        )
    run = experiments.EegUserRun(
        profile_name="(from files)", rate_hz=0, seed=-1, queries=evals
    )
    summary = report.write_eval_report(out_dir, run)
    for q in summary["per_query"]:
        click.echo(f"{q['query_id']}: AUC {q['auc']:.4f}  AP {q['ap']:.4f}")
    click.echo(f"mean AUC {summary['mean_auc']:.4f}; report in {out_dir}")


def _read_scores_csv(path):
    ids, scores, targets = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["image_id", "score", "is_target"]:
            raise FormatError(f"{path}: expected header image_id,score,is_target, got {header}")
        for row in reader:
            ids.append(row[0])
            scores.append(float(row[1]))
            targets.append(bool(int(row[2])))
    return ids, np.array(scores), targets


@main.command("rank")
@click.option("--from", "source", required=True, type=click.Choice(["eeg", "mouse"]))
@click.option("--scores", "scores_path", type=click.Path(exists=True), help="eeg: scores CSV from eval-eeg")
@click.option("--log", "log_path", type=click.Path(exists=True), help="mouse: annotation log JSON")
@click.option("--plan", "plan_path", type=click.Path(exists=True), help="mouse: session plan JSON")
@click.option("--emit-labels", "labels_path", type=click.Path(), help="also write feedback labels JSON")
@click.option("--n-pos", default=10, show_default=True)
@click.option("--n-neg", default=100, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
@handle_errors
def rank(source, scores_path, log_path, plan_path, labels_path, n_pos, n_neg, out_dir):
    """Build a ranking from EEG scores or a mouse annotation log (+ AP)."""
    if source == "eeg":
        if not scores_path:
            raise ValueError("--from eeg needs --scores")
        ids, scores, targets = _read_scores_csv(scores_path)
        ranking = retrieval.ranking_from_scores(ids, scores)
        relevant = {i for i, t in zip(ids, targets) if t}
        pos, neg = retrieval.select_feedback_labels_eeg(ranking, n_pos=n_pos, n_neg=n_neg)
    else:
        if not (log_path and plan_path):
            raise ValueError("--from mouse needs --log and --plan")
        log = dataio.load_log(log_path)
        plan = dataio.load_plan(plan_path)
        sets = retrieval.annotation_sets(log, plan.image_ids())
        ranking = retrieval.ranking_from_annotations(sets, query_id=plan.query_id)
        relevant = set(plan.target_ids())
        pos, neg = list(sets.p_a), list(sets.n_a)
    ap = metrics.average_precision(ranking, relevant) if relevant else None
    report.write_ranking_report(out_dir, ranking, ap, relevant)
    if labels_path:
        with open(labels_path, "w") as fh:
            json.dump({"positive_ids": pos, "negative_ids": neg}, fh, indent=2)
            fh.write("\n")
        click.echo(f"labels: {len(pos)} positive, {len(neg)} negative -> {labels_path}")
    click.echo(f"AP {ap:.4f}; ranking in {out_dir}" if ap is not None else f"ranking in {out_dir}")


@main.command("feedback")
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True))
@click.option("--features", "features_path", required=True, type=click.Path())
@click.option("--truth", "truth_path", type=click.Path(exists=True), help="ground truth for AP")
@click.option("--c", "c_param", default=1.0, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
@handle_errors
def feedback(labels_path, features_path, truth_path, c_param, out_dir):
    """Relevance-feedback re-ranking of a larger collection from labeled ids."""
    with open(labels_path) as fh:
        labels = json.load(fh)
    mat = dataio.load_feature_matrix(features_path)
    ranking = retrieval.feedback_rank(
        labels["positive_ids"], labels["negative_ids"], mat, c=c_param
    )
    relevant = None
    ap = None
    if truth_path:
        with open(truth_path) as fh:
            relevant = set(json.load(fh)["relevant_ids"])
        ap = metrics.average_precision(ranking, relevant)
    report.write_ranking_report(out_dir, ranking, ap, relevant)
    click.echo(f"AP {ap:.4f}; ranking in {out_dir}" if ap is not None else f"ranking in {out_dir}")


@main.command("compare")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@handle_errors
def compare(config_path, out_dir):
    """Run the profile x rate x interface grid plus the time-budget comparison."""
    with open(config_path) as fh:
        cfg = json.load(fh)
    seeds = list(cfg.get("seeds", [0, 1, 2]))
    result = experiments.run_compare_grid(
        seeds,
        profiles=tuple(cfg.get("profiles", ["expert", "novice"])),
        rates=tuple(cfg.get("rates", [5, 10])),
        scan_rate_img_s=float(cfg.get("scan_rate_img_s", 2.0)),
        detect_prob=float(cfg.get("detect_prob", 0.9)),
        page_size=int(cfg.get("page_size", 20)),
    )
    budget = None
    if cfg.get("time_budget", True):
        budget = experiments.time_budget_comparison(
            seeds,
            profile_name=cfg.get("time_budget_profile", "novice"),
            scan_rate_img_s=float(cfg.get("scan_rate_img_s", 2.0)),
            detect_prob=float(cfg.get("detect_prob", 0.9)),
            page_size=int(cfg.get("page_size", 20)),
        )
    summary = report.write_compare_report(out_dir, result, budget)
    for key, value in sorted(summary["mean_ap"].items()):
        click.echo(f"{key}: mAP {value:.4f}")
    click.echo(f"report in {out_dir} (all numbers describe synthetic users)")


@main.command("serve")
@click.option("--plan", "plan_path", required=True, type=click.Path(exists=True))
@click.option("--images", "images_dir", required=True, type=click.Path(exists=True))
@click.option("--mode", required=True, type=click.Choice(["mouse", "rsvp"]))
@click.option("--duration", "duration_s", type=float, help="session budget in seconds; defaults to the stimulus span")
@click.option("--session-dir", default="sessions", show_default=True, type=click.Path())
@click.option("--session-id", default=None)
@click.option("--query-text", default="")
@click.option("--page-size", default=20, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@handle_errors
def serve(plan_path, images_dir, mode, duration_s, session_dir, session_id, query_text, page_size, host, port):
    """Serve the annotation UI API for one session."""
    import uvicorn

    from .planner import stimulus_span_s
    from .service import SessionStore, create_app

    plan = dataio.load_plan(plan_path)
    if duration_s is None:
        duration_s = stimulus_span_s(plan)
    store = SessionStore(images_dir=images_dir, root=session_dir)
    session = store.create(
        plan,
        mode,
        duration_s,
        session_id=session_id,
        query_text=query_text,
        page_size=page_size,
    )
    click.echo(f"session {session.session_id} ({mode}, {duration_s:.0f} s) at http://{host}:{port}")
    uvicorn.run(create_app(store), host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
