"""HTTP service backing the annotation UI.

Four endpoints: session manifest, image bytes, event append, finish. Events
are idempotent via client sequence numbers (replays are acknowledged and
dropped); a finished session is immutable. Session state lives in a per-
session directory: a manifest, an append-only event journal, and on finish
the canonical AnnotationLog plus the scored result.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from . import metrics, retrieval
from .dataio import AnnotationEvent, AnnotationLog, DataError, RsvpPlan, save_log

PAGE_SIZE_DEFAULT = 20


class EventIn(BaseModel):
    seq: int = Field(ge=0)
    t_ms: int = Field(ge=0)
    kind: Literal["show", "click", "next", "button"]
    image_id: str | None = None
    page: int | None = None


class EventBatch(BaseModel):
    events: list[EventIn]


@dataclass(eq=False)
class Session:
    session_id: str
    plan: RsvpPlan
    mode: str
    duration_s: float
    query_text: str
    page_size: int
    dir: Path
    events: dict[int, EventIn] = field(default_factory=dict)
    finished: bool = False
    result: dict | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def display_order(self) -> list[str]:
        return self.plan.image_ids()

    def manifest(self) -> dict:
        base = {
            "session_id": self.session_id,
            "mode": self.mode,
            "rate_hz": self.plan.rate_hz,
            "duration_s": self.duration_s,
            "query_text": self.query_text,
            "example_image_ids": self.plan.target_ids()[:4],
        }
        if self.mode == "mouse":
            order = self.display_order
            base["pages"] = [
                order[k : k + self.page_size] for k in range(0, len(order), self.page_size)
            ]
        else:
            base["stimulus_order"] = {
                "blocks": [[image_id for image_id, _ in block] for block in self.plan.blocks],
                "inter_block_gap_s": self.plan.inter_block_gap_s,
            }
        return base

    def to_log(self) -> AnnotationLog:
        """Canonical log: journal events ordered by (t_ms, seq), budget-trimmed."""
        budget_ms = round(self.duration_s * 1000)
        ordered = sorted(self.events.values(), key=lambda e: (e.t_ms, e.seq))
        events = [
            AnnotationEvent(t_ms=e.t_ms, kind=e.kind, image_id=e.image_id, page=e.page, seq=e.seq)
            for e in ordered
            if e.t_ms <= budget_ms
        ]
        return AnnotationLog(
            session_id=self.session_id,
            mode=self.mode,
            rate_hz=self.plan.rate_hz,
            duration_s=self.duration_s,
            events=events,
        )


class SessionStore:
    """Holds live sessions and their image directory; one writer per session."""

    def __init__(self, images_dir: str | Path, root: str | Path):
        self.images_dir = Path(images_dir)
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, Session] = {}

    def create(
        self,
        plan: RsvpPlan,
        mode: str,
        duration_s: float,
        session_id: str | None = None,
        query_text: str = "",
        page_size: int = PAGE_SIZE_DEFAULT,
    ) -> Session:
        if mode not in ("mouse", "rsvp"):
            raise ValueError(f"mode must be mouse or rsvp, got {mode!r}")
        session_id = session_id or f"{plan.query_id}-{mode}"
        if session_id in self.sessions:
            raise ValueError(f"session {session_id!r} already exists")
        session_dir = self.root / session_id
        session_dir.mkdir(parents=True, exist_ok=True)
        session = Session(
            session_id=session_id,
            plan=plan,
            mode=mode,
            duration_s=duration_s,
            query_text=query_text or f"query {plan.query_id}",
            page_size=page_size,
            dir=session_dir,
        )
        with open(session_dir / "session.json", "w") as fh:
            json.dump(session.manifest(), fh, indent=2)
            fh.write("\n")
        self.sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    def image_path(self, image_id: str) -> Path:
        return self.images_dir / f"{image_id}.png"


def _finish_result(session: Session) -> dict:
    log = session.to_log()
    n_clicks = sum(1 for e in log.events if e.kind == "click")
    n_seen = len({e.image_id for e in log.events if e.kind == "show" and e.image_id})
    ap = None
    if session.mode == "mouse":
        sets = retrieval.annotation_sets(log, session.display_order)
        ranking = retrieval.ranking_from_annotations(sets, query_id=session.plan.query_id)
        ap = metrics.average_precision(ranking, set(session.plan.target_ids()))
    save_log(log, session.dir / "log.json")
    result = {"ap": ap, "n_clicks": n_clicks, "n_seen": n_seen}
    with open(session.dir / "result.json", "w") as fh:
        json.dump(result, fh, indent=2)
        fh.write("\n")
    return result


def create_app(store: SessionStore) -> FastAPI:
    app = FastAPI(title="eegrank annotation service")

    @app.get("/api/sessions/{session_id}/manifest")
    def manifest(session_id: str):
        try:
            return store.get(session_id).manifest()
        except KeyError:
            raise HTTPException(404, f"unknown session {session_id!r}")

    @app.get("/api/images/{image_id}")
    def image(image_id: str):
        path = store.image_path(image_id)
        if not path.is_file():
            raise HTTPException(404, f"unknown image {image_id!r}")
        return Response(content=path.read_bytes(), media_type="image/png")

    @app.post("/api/sessions/{session_id}/events")
    def append_events(session_id: str, batch: EventBatch):
        try:
            session = store.get(session_id)
        except KeyError:
            raise HTTPException(404, f"unknown session {session_id!r}")
        with session.lock:
            if session.finished:
                raise HTTPException(409, "session already finished")
            accepted = 0
            duplicates = 0
            with open(session.dir / "events.jsonl", "a") as fh:
                for ev in batch.events:
                    if ev.seq in session.events:
                        duplicates += 1
                        continue
                    if ev.kind in ("show", "click", "button") and not ev.image_id:
                        raise HTTPException(422, f"{ev.kind} event needs image_id (seq {ev.seq})")
                    session.events[ev.seq] = ev
                    fh.write(json.dumps(ev.model_dump()) + "\n")
                    accepted += 1
        return {"accepted": accepted, "duplicates": duplicates, "total": len(session.events)}

    @app.post("/api/sessions/{session_id}/finish")
    def finish(session_id: str):
        try:
            session = store.get(session_id)
        except KeyError:
            raise HTTPException(404, f"unknown session {session_id!r}")
        with session.lock:
            if session.finished:
                raise HTTPException(409, "session already finished")
            try:
                result = _finish_result(session)
            except DataError as exc:
                raise HTTPException(422, f"inconsistent event log: {exc}")
            session.finished = True
            session.result = result
        return result

    @app.get("/api/sessions")
    def list_sessions():
        return {
            "sessions": [
                {"session_id": s.session_id, "mode": s.mode, "finished": s.finished}
                for s in store.sessions.values()
            ]
        }

    return app
