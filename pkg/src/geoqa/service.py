"""HTTP/JSON service: dataset metadata, query, navigation, and session
endpoints over one shared engine.

Sessions are serialized individually (one lock per session) while distinct
sessions proceed concurrently against the immutable engine. Every /query turn
appends exactly one trace record to the in-memory log and, when configured,
to an append-only JSON-lines file.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .answers import Answer, render_focus_change, render_notice
from .engine import Engine
from .geodata import Level
from .navigation import (
    BoundaryNotice,
    Direction,
    FocusState,
    ZoomError,
    ZoomNotice,
    move,
    zoom_in,
    zoom_out,
)
from .pipeline import TraceRecord, UserInput, run_pipeline
from .session import SessionState

SUGGESTIONS_PER_PAGE = 3


class QueryRequest(BaseModel):
    session: str
    text: str


class NavigateRequest(BaseModel):
    session: str
    action: str  # north|east|south|west|zoom_in|zoom_out|focus


class SessionHub:
    """Session registry with per-session serialization."""

    def __init__(self) -> None:
        self._sessions: dict[str, SessionState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def create(self) -> SessionState:
        session_id = uuid.uuid4().hex
        state = SessionState(session_id=session_id)
        with self._registry_lock:
            self._sessions[session_id] = state
            self._locks[session_id] = threading.Lock()
        return state

    def get(self, session_id: str) -> tuple[SessionState, threading.Lock]:
        with self._registry_lock:
            state = self._sessions.get(session_id)
            lock = self._locks.get(session_id)
        if state is None or lock is None:
            raise KeyError(session_id)
        return state, lock


class TraceLog:
    """In-memory trace list plus optional append-only JSONL file."""

    def __init__(self, path: Optional[str | Path] = None):
        self.records: list[TraceRecord] = []
        self._lock = threading.Lock()
        self._path = Path(path) if path else None

    def append(self, record: TraceRecord) -> None:
        line = json.dumps(record.to_json(), ensure_ascii=False)
        with self._lock:
            self.records.append(record)
            if self._path is not None:
                with self._path.open("a", encoding="utf-8") as f:
                    f.write(line + "\n")

    def count(self) -> int:
        with self._lock:
            return len(self.records)


def _region_feature(engine: Engine, region) -> dict:
    values = {
        m.key: engine.dataset.value(region.id, m.key) for m in engine.dataset.metrics
    }
    return {
        "type": "Feature",
        "geometry": {
            "type": "MultiPolygon",
            "coordinates": [
                [[list(pt) for pt in ring] for ring in poly] for poly in region.geometry
            ],
        },
        "properties": {
            "id": region.id,
            "name": region.name,
            "parent_id": region.parent_id,
            "centroid": list(region.centroid),
            "values": values,
        },
    }


def create_app(
    engine: Engine,
    trace_log: Optional[TraceLog] = None,
    ui_dist: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="geoqa", version="0.1.0")
    hub = SessionHub()
    traces = trace_log if trace_log is not None else TraceLog()
    app.state.engine = engine
    app.state.sessions = hub
    app.state.traces = traces

    @app.exception_handler(HTTPException)
    async def error_envelope(request: Request, exc: HTTPException):
        return JSONResponse(
            status_code=exc.status_code,
            content={"error": exc.detail, "detail": exc.detail},
        )

    def _session(session_id: str) -> tuple[SessionState, threading.Lock]:
        try:
            return hub.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")

    @app.post("/session")
    def create_session() -> dict:
        state = hub.create()
        return {"session": state.session_id}

    @app.get("/dataset")
    def dataset_info() -> dict:
        ds = engine.dataset
        return {
            "name": ds.name,
            "schema_summary": engine.schema_text,
            "metrics": [
                {
                    "key": m.key,
                    "label": m.label,
                    "unit": m.unit,
                    "description": m.description,
                    "level": m.level.value,
                }
                for m in ds.metrics
            ],
            "default_metric": engine.default_metric_key,
            "levels": {
                "state": len(ds.regions_at(Level.STATE)),
                "county": len(ds.regions_at(Level.COUNTY)),
            },
            "legend": engine.legend_payload(),
        }

    @app.get("/regions/{level}")
    def regions(level: str) -> dict:
        try:
            lvl = Level(level)
        except ValueError:
            raise HTTPException(status_code=404, detail=f"unknown level {level!r}")
        features = [
            _region_feature(engine, r) for r in engine.dataset.regions_at(lvl)
        ]
        return {"type": "FeatureCollection", "features": features}

    @app.post("/query")
    def query(request: QueryRequest) -> dict:
        state, lock = _session(request.session)
        if not request.text.strip():
            raise HTTPException(status_code=400, detail="query text must be non-empty")
        with lock:
            user_input = UserInput(text=request.text, session_id=request.session)
            answer, trace = run_pipeline(user_input, state, engine)
            traces.append(trace)
        return answer.to_json()

    @app.post("/navigate")
    def navigate(request: NavigateRequest) -> dict:
        state, lock = _session(request.session)
        with lock:
            answer = _apply_navigation(engine, state, request.action)
        return answer.to_json()

    @app.get("/suggestions")
    def suggestions(session: str) -> dict:
        state, lock = _session(session)
        ring = engine.suggestions
        with lock:
            start = state.suggestion_cursor % len(ring)
            window = [ring[(start + i) % len(ring)] for i in range(SUGGESTIONS_PER_PAGE)]
            state.suggestion_cursor = (start + SUGGESTIONS_PER_PAGE) % len(ring)
        return {"suggestions": window}

    if ui_dist:
        app.mount("/ui", StaticFiles(directory=ui_dist, html=True), name="ui")

    return app


def _apply_navigation(engine: Engine, state: SessionState, action: str) -> Answer:
    action = action.strip().lower()
    dataset = engine.dataset

    if action == "focus":
        focus = state.focus or engine.initial_focus()
        state.focus = focus
        return render_focus_change(focus, dataset)

    if action in ("zoom_in", "+"):
        focus = state.focus or engine.initial_focus()
        try:
            new_focus = zoom_in(focus, dataset)
        except ZoomError as exc:
            return Answer(str(exc), announce=str(exc))
        state.focus = new_focus
        return render_focus_change(new_focus, dataset)

    if action in ("zoom_out", "-"):
        focus = state.focus
        if focus is None:
            return Answer("Nothing is focused yet.", announce="Nothing is focused yet.")
        result = zoom_out(focus)
        if isinstance(result, ZoomNotice):
            return render_notice(result)
        state.focus = result
        return render_focus_change(result, dataset)

    try:
        direction = Direction(action)
    except ValueError:
        raise HTTPException(status_code=400, detail=f"unknown action {action!r}")

    if state.focus is None:
        # first arrow press lands on the documented initial state
        state.focus = engine.initial_focus()
        return render_focus_change(state.focus, dataset)

    graph = engine.graph_for(state.focus)
    result = move(state.focus, direction, graph, dataset)
    if isinstance(result, BoundaryNotice):
        return render_notice(result)
    state.focus = result
    return render_focus_change(result, dataset)
