"""JSON-over-HTTP boundary for sessions, ranking queries, and results.

One JSON document per session in a data directory, written atomically
before any response that reports the mutation (write-ahead).  Phase-1
compute runs on a background thread per session; request handlers only
take the per-session lock briefly, so snapshot reads never wait on the
optimizer.  A session with a simulated oracle runs straight to done; a
deferred-oracle session parks on awaiting_ranking until a human answers
through POST .../ranking.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .oracle import answer_ranking
from .preference import RankingResponse
from .session import (
    ConfigError,
    InvalidRankingError,
    PhaseError,
    Session,
    SessionConfig,
    StaleQueryError,
    canonical_json,
)

API_PREFIX = "/api/v1"


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


class SessionRecord:
    """One session plus its service-level envelope."""

    def __init__(self, session_id: str, session: Session, created: str | None = None):
        self.session_id = session_id
        self.session = session
        self.created = created or _utcnow()
        self.updated = self.created
        self.failure: str | None = None
        self.lock = threading.Lock()

    @property
    def status(self) -> str:
        if self.failure is not None:
            return "failed"
        if self.session.pending_query is not None:
            return "awaiting_ranking"
        if self.session.is_done:
            return "done"
        return "running"

    def summary(self) -> dict:
        s = self.session
        return {
            "session_id": self.session_id,
            "status": self.status,
            "phase": s.phase,
            "created": self.created,
            "updated": self.updated,
            "n_observations": len(s.observations),
            "n_rankings": len(s.rankings),
            "n_phase1_done": s.n_phase1_done,
            "n_phase2_done": s.n_phase2_done,
            "n_phase1": s.config.n_phase1,
            "n_phase2": s.config.n_phase2,
            "assets": list(s.assets),
            "error": self.failure,
        }


class SessionStore:
    """Persistence plus per-session locking for the HTTP layer."""

    def __init__(self, data_dir: Path | str, background: bool = True):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.background = background
        self._records: dict[str, SessionRecord] = {}
        self._registry_lock = threading.Lock()
        self._threads: list[threading.Thread] = []

    # -- persistence -------------------------------------------------------

    def _path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.json"

    def _persist(self, record: SessionRecord) -> None:
        """Atomic write: the on-disk document is always a complete state."""
        record.updated = _utcnow()
        doc = {
            "session_id": record.session_id,
            "created": record.created,
            "updated": record.updated,
            "status": record.status,
            "error": record.failure,
            "state": record.session.to_json_dict(),
        }
        path = self._path(record.session_id)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(canonical_json(doc), encoding="utf-8")
        os.replace(tmp, path)

    def load_existing(self) -> list[str]:
        """Load every persisted session; returns ids that need a driver."""
        unfinished = []
        for path in sorted(self.data_dir.glob("*.json")):
            doc = json.loads(path.read_text(encoding="utf-8"))
            record = SessionRecord(
                session_id=doc["session_id"],
                session=Session.from_json_dict(doc["state"]),
                created=doc.get("created"),
            )
            record.failure = doc.get("error")
            with self._registry_lock:
                self._records[record.session_id] = record
            if record.status == "running":
                unfinished.append(record.session_id)
        return unfinished

    def resume_all(self) -> None:
        for session_id in self.load_existing():
            self._launch(session_id)

    # -- lifecycle ---------------------------------------------------------

    def create(self, config_obj: dict) -> str:
        config = SessionConfig.from_json(config_obj)
        if config.n_phase2 > 0 and config.oracle is None:
            raise ConfigError("config requires an oracle for phase 2")
        session = Session.start(config)
        record = SessionRecord(session_id=uuid.uuid4().hex, session=session)
        with self._registry_lock:
            self._records[record.session_id] = record
        self._persist(record)
        self._launch(record.session_id)
        return record.session_id

    def _launch(self, session_id: str) -> None:
        if self.background:
            t = threading.Thread(target=self._drive, args=(session_id,), daemon=True)
            self._threads.append(t)
            t.start()
        else:
            self._drive(session_id)

    def _drive(self, session_id: str) -> None:
        """Run the session as far as it can go without a human."""
        record = self.get(session_id)
        session = record.session
        oracle = session.config.oracle
        try:
            while True:
                with record.lock:
                    if session.phase == "phase1":
                        session.step_phase1()
                    elif session.is_done:
                        self._persist(record)
                        return
                    elif session.pending_query is None:
                        session.propose_query()
                    elif oracle is not None and not oracle.is_deferred:
                        session.submit_ranking(answer_ranking(oracle, session.pending_query))
                    else:
                        self._persist(record)  # parked awaiting a human
                        return
                    self._persist(record)
        except Exception as e:  # surface the failure through the API
            with record.lock:
                record.failure = f"{type(e).__name__}: {e}"
                self._persist(record)

    def wait_idle(self, timeout: float = 300.0) -> None:
        """Join background drivers (used by tests and shutdown)."""
        for t in self._threads:
            t.join(timeout)

    # -- request-path operations --------------------------------------------

    def get(self, session_id: str) -> SessionRecord:
        with self._registry_lock:
            record = self._records.get(session_id)
        if record is None:
            raise KeyError(session_id)
        return record

    def list_summaries(self) -> list[dict]:
        with self._registry_lock:
            records = list(self._records.values())
        records.sort(key=lambda r: r.created)
        return [r.summary() for r in records]

    def pending_query(self, session_id: str) -> dict | None:
        record = self.get(session_id)
        with record.lock:
            query = record.session.pending_query
            if query is None:
                return None
            return {
                "query_id": query.query_id,
                "kind": query.kind,
                "assets": list(record.session.assets),
                "reference": {"weights": query.reference.to_json()},
                "candidates": [{"weights": c.to_json()} for c in query.candidates],
                "m": query.m,
                "n_phase2_done": record.session.n_phase2_done,
                "n_phase2": record.session.config.n_phase2,
            }

    def submit_ranking(self, session_id: str, query_id: str, order: list[int]) -> dict:
        """Apply one ranking; propose the follow-up query before replying."""
        record = self.get(session_id)
        with record.lock:
            session = record.session
            response = RankingResponse(query_id=query_id, order=tuple(order))
            session.submit_ranking(response)
            oracle = session.config.oracle
            next_pending = False
            if not session.is_done and (oracle is None or oracle.is_deferred):
                try:
                    session.propose_query()
                    next_pending = True
                except PhaseError:
                    pass
            self._persist(record)
            status = record.status
        if not next_pending and oracle is not None and not oracle.is_deferred:
            self._launch(session_id)
        return {"status": status, "next_query_pending": next_pending}

    def results(self, session_id: str, alpha: float | None, partial: bool) -> dict:
        record = self.get(session_id)
        with record.lock:
            session = record.session
            if not session.is_done and not partial:
                raise PhaseError(
                    f"session is {record.status}; pass partial=true for a snapshot"
                )
            return session.result(alpha=alpha).to_json()


class RankingBody(BaseModel):
    query_id: str
    order: list[int]


def create_app(store: SessionStore, ui_dir: Path | str | None = None) -> FastAPI:
    app = FastAPI(title="prefolio", docs_url=None, redoc_url=None)

    def _record_or_404(session_id: str) -> SessionRecord:
        try:
            return store.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}") from None

    @app.post(API_PREFIX + "/sessions", status_code=201)
    def create_session(config: dict):
        try:
            session_id = store.create(config)
        except ConfigError as e:
            raise HTTPException(status_code=400, detail=str(e)) from None
        except FileNotFoundError as e:
            raise HTTPException(status_code=404, detail=str(e)) from None
        return {"session_id": session_id}

    @app.get(API_PREFIX + "/sessions")
    def list_sessions():
        return {"sessions": store.list_summaries()}

    @app.get(API_PREFIX + "/sessions/{session_id}")
    def get_session(session_id: str):
        return _record_or_404(session_id).summary()

    @app.get(API_PREFIX + "/sessions/{session_id}/query")
    def get_query(session_id: str):
        _record_or_404(session_id)
        query = store.pending_query(session_id)
        if query is None:
            return Response(status_code=204)
        return query

    @app.post(API_PREFIX + "/sessions/{session_id}/ranking")
    def post_ranking(session_id: str, body: RankingBody):
        _record_or_404(session_id)
        try:
            return store.submit_ranking(session_id, body.query_id, body.order)
        except StaleQueryError as e:
            raise HTTPException(status_code=409, detail=str(e)) from None
        except InvalidRankingError as e:
            raise HTTPException(status_code=422, detail=str(e)) from None

    @app.get(API_PREFIX + "/sessions/{session_id}/results")
    def get_results(
        session_id: str,
        alpha: float | None = Query(default=None),
        partial: bool = Query(default=False),
    ):
        _record_or_404(session_id)
        if alpha is not None and not 0.0 < alpha < 1.0:
            raise HTTPException(status_code=422, detail=f"alpha must be in (0, 1), got {alpha}")
        try:
            result = store.results(session_id, alpha, partial)
        except PhaseError as e:
            raise HTTPException(status_code=409, detail=str(e)) from None
        # canonical bytes so identical sessions serve identical documents
        return Response(content=canonical_json(result), media_type="application/json")

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
