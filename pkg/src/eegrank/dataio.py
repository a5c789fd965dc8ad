"""Shared domain types and their on-disk formats.

Array-like objects use a two-file layout: a human-readable JSON header next
to a raw little-endian float32 payload (``.rec.json``/``.rec.f32`` for
recordings, ``.feat.json``/``.feat.f32`` for feature matrices). Plans and
annotation logs are single JSON documents; markers are JSON lines; rankings
are ``rank,image_id,score`` CSV. All loaders validate shape/consistency and
raise :class:`FormatError` or :class:`DataError` rather than returning
partially-parsed objects.

Amplitudes are microvolts throughout. Image ids are opaque strings; ordering
always comes from an explicit list, never from id sort order.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


class FormatError(Exception):
    """File structure does not match its declared header (or the header is invalid)."""


class DataError(Exception):
    """File parses but carries values the domain rejects (NaN/Inf, inconsistent logs, ...)."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class RawRecording:
    """Multichannel sampled EEG, ``samples`` shaped (n_channels, n_samples) in microvolts."""

    sample_rate_hz: int
    channel_labels: list[str]
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.dtype not in (np.float32, np.float64):
            self.samples = self.samples.astype(np.float32)
        if self.samples.ndim != 2:
            raise ValueError(f"samples must be 2-D (channels x samples), got ndim={self.samples.ndim}")
        if self.n_channels < 1:
            raise ValueError("recording needs at least one channel")
        if len(self.channel_labels) != self.n_channels:
            raise ValueError(
                f"{len(self.channel_labels)} channel labels for {self.n_channels} channels"
            )
        if not (isinstance(self.sample_rate_hz, (int, np.integer)) and self.sample_rate_hz > 0):
            raise ValueError(f"sample_rate_hz must be a positive integer, got {self.sample_rate_hz!r}")
        self.sample_rate_hz = int(self.sample_rate_hz)

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz


@dataclass(frozen=True)
class EventMarker:
    """Stimulus onset: sample index into a recording plus image identity and hidden label."""

    onset_sample: int
    image_id: str
    is_target: bool
    block_index: int
    query_id: str

    def __post_init__(self):
        if self.onset_sample < 0:
            raise ValueError(f"onset_sample must be >= 0, got {self.onset_sample}")


@dataclass(eq=False)
class Epoch:
    """One stimulus-locked EEG segment, ``data`` shaped (n_channels, n_epoch_samples)."""

    image_id: str
    is_target: bool
    data: np.ndarray
    epoch_sample_rate_hz: int

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]


@dataclass(eq=False)
class FeatureMatrix:
    """Row-aligned feature vectors: ``values`` is (n_rows, n_dims), float32 on disk.

    ``targets`` is an optional in-memory label vector; the on-disk format
    carries only ids, labels are re-joined from markers or a manifest.
    Savers cast to float32; in memory float64 is preserved for pipeline math.
    """

    image_ids: list[str]
    values: np.ndarray
    targets: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.dtype not in (np.float32, np.float64):
            self.values = self.values.astype(np.float32)
        if self.values.ndim != 2:
            raise ValueError(f"values must be 2-D, got ndim={self.values.ndim}")
        if len(self.image_ids) != self.values.shape[0]:
            raise ValueError(
                f"{len(self.image_ids)} image ids for {self.values.shape[0]} rows"
            )
        if self.targets is not None:
            self.targets = np.asarray(self.targets, dtype=bool)
            if self.targets.shape != (self.values.shape[0],):
                raise ValueError("targets must align with rows")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_dims(self) -> int:
        return self.values.shape[1]


@dataclass(eq=False)
class RsvpPlan:
    """Block structure, image order, and timing parameters for one query's presentation."""

    query_id: str
    rate_hz: int
    blocks: list[list[tuple[str, bool]]]
    inter_block_gap_s: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.rate_hz not in (5, 10):
            raise ValueError(f"rate_hz must be 5 or 10, got {self.rate_hz}")
        self.blocks = [[(str(i), bool(t)) for i, t in block] for block in self.blocks]

    @property
    def n_images(self) -> int:
        return sum(len(b) for b in self.blocks)

    def image_ids(self) -> list[str]:
        """All image ids in display order (block after block)."""
        return [image_id for block in self.blocks for image_id, _ in block]

    def target_ids(self) -> list[str]:
        return [image_id for block in self.blocks for image_id, is_t in block if is_t]

    def validate(self, images_per_block: int = 200, targets_per_block: int = 10) -> None:
        """Check the oddball block invariants (5 blocks, exact per-block counts, no repeats)."""
        if len(self.blocks) != 5:
            raise DataError(f"plan must have 5 blocks, got {len(self.blocks)}")
        for b, block in enumerate(self.blocks):
            if len(block) != images_per_block:
                raise DataError(f"block {b} has {len(block)} images, expected {images_per_block}")
            n_targets = sum(1 for _, is_t in block if is_t)
            if n_targets != targets_per_block:
                raise DataError(f"block {b} has {n_targets} targets, expected {targets_per_block}")
        ids = self.image_ids()
        if len(set(ids)) != len(ids):
            raise DataError("plan repeats at least one image id")


EVENT_KINDS = ("show", "click", "next", "button")


@dataclass(frozen=True)
class AnnotationEvent:
    t_ms: int
    kind: str
    image_id: str | None = None
    page: int | None = None
    seq: int | None = None

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.t_ms < 0:
            raise ValueError(f"t_ms must be >= 0, got {self.t_ms}")


@dataclass(eq=False)
class AnnotationLog:
    """Timed UI event stream for one session (mouse grid or RSVP player)."""

    session_id: str
    mode: str
    rate_hz: int
    duration_s: float
    events: list[AnnotationEvent] = field(default_factory=list)

    def __post_init__(self):
        if self.mode not in ("mouse", "rsvp"):
            raise ValueError(f"mode must be 'mouse' or 'rsvp', got {self.mode!r}")
        last = -1
        for ev in self.events:
            if ev.t_ms < last:
                raise DataError("event timestamps must be non-decreasing")
            last = ev.t_ms


@dataclass(eq=False)
class Ranking:
    """Ordered scored image list; ``entries`` is [(image_id, score-or-None), ...]."""

    query_id: str
    entries: list[tuple[str, float | None]]

    def image_ids(self) -> list[str]:
        return [image_id for image_id, _ in self.entries]


# ---------------------------------------------------------------------------
# Two-file array formats
# ---------------------------------------------------------------------------


def _stem(path: str | Path, tag: str) -> Path:
    """Normalize ``foo``, ``foo.rec.json`` or ``foo.rec.f32`` to the stem ``foo``."""
    p = Path(path)
    name = p.name
    for suffix in (f".{tag}.json", f".{tag}.f32"):
        if name.endswith(suffix):
            return p.with_name(name[: -len(suffix)])
    return p


def _write_json(path: Path, obj: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _read_json(path: Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


def _read_payload(path: Path, expected_values: int) -> np.ndarray:
    raw = path.read_bytes()
    if len(raw) % 4 != 0:
        raise FormatError(f"{path}: payload length {len(raw)} bytes is not a multiple of 4")
    found = len(raw) // 4
    if found != expected_values:
        raise FormatError(
            f"{path}: header promises {expected_values} float32 values, payload has {found}"
        )
    return np.frombuffer(raw, dtype="<f4")


def save_recording(rec: RawRecording, path: str | Path) -> None:
    """Write ``<stem>.rec.json`` + ``<stem>.rec.f32`` (channel-major float32 LE)."""
    stem = _stem(path, "rec")
    header = {
        "version": FORMAT_VERSION,
        "sample_rate_hz": rec.sample_rate_hz,
        "n_channels": rec.n_channels,
        "n_samples": rec.n_samples,
        "channel_labels": rec.channel_labels,
        "encoding": "f32le",
        "layout": "channel-major",
    }
    _write_json(stem.with_name(stem.name + ".rec.json"), header)
    payload = np.ascontiguousarray(rec.samples, dtype="<f4")
    stem.with_name(stem.name + ".rec.f32").write_bytes(payload.tobytes())


def load_recording(path: str | Path) -> RawRecording:
    stem = _stem(path, "rec")
    header_path = stem.with_name(stem.name + ".rec.json")
    header = _read_json(header_path)
    if header.get("version") != FORMAT_VERSION:
        raise FormatError(f"{header_path}: unsupported version {header.get('version')!r}")
    if header.get("encoding") != "f32le":
        raise FormatError(f"{header_path}: unknown encoding tag {header.get('encoding')!r}")
    if header.get("layout") != "channel-major":
        raise FormatError(f"{header_path}: unknown layout tag {header.get('layout')!r}")
    n_channels = int(header["n_channels"])
    n_samples = int(header["n_samples"])
    labels = list(header["channel_labels"])
    if len(labels) != n_channels:
        raise FormatError(
            f"{header_path}: {len(labels)} channel labels for {n_channels} channels"
        )
    flat = _read_payload(stem.with_name(stem.name + ".rec.f32"), n_channels * n_samples)
    return RawRecording(
        sample_rate_hz=int(header["sample_rate_hz"]),
        channel_labels=labels,
        samples=flat.reshape(n_channels, n_samples).copy(),
    )


def save_feature_matrix(mat: FeatureMatrix, path: str | Path) -> None:
    """Write ``<stem>.feat.json`` + ``<stem>.feat.f32`` (row-major float32 LE)."""
    stem = _stem(path, "feat")
    header = {
        "version": FORMAT_VERSION,
        "n_rows": mat.n_rows,
        "n_dims": mat.n_dims,
        "image_ids": mat.image_ids,
    }
    _write_json(stem.with_name(stem.name + ".feat.json"), header)
    payload = np.ascontiguousarray(mat.values, dtype="<f4")
    stem.with_name(stem.name + ".feat.f32").write_bytes(payload.tobytes())


def load_feature_matrix(path: str | Path) -> FeatureMatrix:
    stem = _stem(path, "feat")
    header_path = stem.with_name(stem.name + ".feat.json")
    header = _read_json(header_path)
    if header.get("version") != FORMAT_VERSION:
        raise FormatError(f"{header_path}: unsupported version {header.get('version')!r}")
    n_rows = int(header["n_rows"])
    n_dims = int(header["n_dims"])
    image_ids = [str(i) for i in header["image_ids"]]
    if len(image_ids) != n_rows:
        raise FormatError(f"{header_path}: {len(image_ids)} image ids for {n_rows} rows")
    flat = _read_payload(stem.with_name(stem.name + ".feat.f32"), n_rows * n_dims)
    if not np.all(np.isfinite(flat)):
        bad = int(np.count_nonzero(~np.isfinite(flat)))
        raise DataError(f"{stem}.feat.f32: {bad} non-finite values in payload")
    return FeatureMatrix(image_ids=image_ids, values=flat.reshape(n_rows, n_dims).copy())


# ---------------------------------------------------------------------------
# Markers (JSON lines)
# ---------------------------------------------------------------------------


def save_markers(markers: list[EventMarker], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for m in markers:
            fh.write(
                json.dumps(
                    {
                        "onset_sample": m.onset_sample,
                        "image_id": m.image_id,
                        "is_target": m.is_target,
                        "block_index": m.block_index,
                        "query_id": m.query_id,
                    }
                )
            )
            fh.write("\n")


def load_markers(path: str | Path) -> list[EventMarker]:
    path = Path(path)
    markers: list[EventMarker] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                markers.append(
                    EventMarker(
                        onset_sample=int(obj["onset_sample"]),
                        image_id=str(obj["image_id"]),
                        is_target=bool(obj["is_target"]),
                        block_index=int(obj["block_index"]),
                        query_id=str(obj["query_id"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: bad marker line ({exc})") from exc
    for a, b in zip(markers, markers[1:]):
        if b.onset_sample < a.onset_sample:
            raise DataError(f"{path}: markers not sorted by onset_sample")
    return markers


# ---------------------------------------------------------------------------
# Plans, annotation logs, rankings
# ---------------------------------------------------------------------------


def save_plan(plan: RsvpPlan, path: str | Path) -> None:
    _write_json(
        Path(path),
        {
            "version": FORMAT_VERSION,
            "query_id": plan.query_id,
            "rate_hz": plan.rate_hz,
            "inter_block_gap_s": plan.inter_block_gap_s,
            "seed": plan.seed,
            "blocks": [[[image_id, is_t] for image_id, is_t in block] for block in plan.blocks],
        },
    )


def load_plan(path: str | Path, validate: bool = True) -> RsvpPlan:
    path = Path(path)
    obj = _read_json(path)
    try:
        plan = RsvpPlan(
            query_id=str(obj["query_id"]),
            rate_hz=int(obj["rate_hz"]),
            blocks=[[(str(i), bool(t)) for i, t in block] for block in obj["blocks"]],
            inter_block_gap_s=float(obj.get("inter_block_gap_s", 5.0)),
            seed=int(obj.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: bad plan document ({exc})") from exc
    if validate:
        plan.validate()
    return plan


def save_log(log: AnnotationLog, path: str | Path) -> None:
    events = []
    for ev in log.events:
        obj: dict = {"t_ms": ev.t_ms, "kind": ev.kind}
        if ev.image_id is not None:
            obj["image_id"] = ev.image_id
        if ev.page is not None:
            obj["page"] = ev.page
        if ev.seq is not None:
            obj["seq"] = ev.seq
        events.append(obj)
    _write_json(
        Path(path),
        {
            "version": FORMAT_VERSION,
            "session_id": log.session_id,
            "mode": log.mode,
            "rate_hz": log.rate_hz,
            "duration_s": log.duration_s,
            "events": events,
        },
    )


def load_log(path: str | Path) -> AnnotationLog:
    path = Path(path)
    obj = _read_json(path)
    try:
        events = [
            AnnotationEvent(
                t_ms=int(e["t_ms"]),
                kind=str(e["kind"]),
                image_id=None if e.get("image_id") is None else str(e["image_id"]),
                page=None if e.get("page") is None else int(e["page"]),
                seq=None if e.get("seq") is None else int(e["seq"]),
            )
            for e in obj["events"]
        ]
        return AnnotationLog(
            session_id=str(obj["session_id"]),
            mode=str(obj["mode"]),
            rate_hz=int(obj["rate_hz"]),
            duration_s=float(obj["duration_s"]),
            events=events,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: bad annotation log ({exc})") from exc


def save_ranking(ranking: Ranking, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "image_id", "score"])
        for rank, (image_id, score) in enumerate(ranking.entries, start=1):
            writer.writerow([rank, image_id, "" if score is None else repr(float(score))])


def load_ranking(path: str | Path, query_id: str = "") -> Ranking:
    path = Path(path)
    entries: list[tuple[str, float | None]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["rank", "image_id", "score"]:
            raise FormatError(f"{path}: expected header rank,image_id,score, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            rank_s, image_id, score_s = row
            if int(rank_s) != lineno - 1:
                raise FormatError(f"{path}:{lineno}: rank column out of sequence")
            score = None if score_s == "" else float(score_s)
            if score is not None and math.isnan(score):
                raise DataError(f"{path}:{lineno}: NaN score")
            entries.append((image_id, score))
    return Ranking(query_id=query_id, entries=entries)
