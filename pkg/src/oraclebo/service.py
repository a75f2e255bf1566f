"""Live personalization sessions over HTTP/JSON.

Each session owns a listener scene and a stepping engine; the client hears
the corrupted clip rendered through the current candidate filter, submits a
0-10 rating, and the engine advances to the next candidate.  Every mutation
snapshots the session to disk so a restarted service resumes mid-session,
and mutations within a session are single-flight: a request that catches
the session busy is rejected rather than queued.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from pathlib import Path

import numpy as np
from fastapi import Body, FastAPI, Request
from fastapi.responses import JSONResponse, Response

from . import audio, personalize
from .embedding import project_up
from .optimizer import BudgetLedger, OracleBoEngine, Proposal

PHASE_AWAITING = "awaiting-score"
PHASE_FINISHED = "finished"


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, field: str | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.field = field

    def body(self) -> dict:
        payload = {"code": self.code, "message": self.message}
        if self.field:
            payload["field"] = self.field
        return payload


class LiveSession:
    def __init__(self, session_id: str, scene: personalize.SceneConfig):
        self.session_id = session_id
        self.scene = scene
        self.listener = personalize.build_listener(scene)
        self.facts = personalize.scene_facts(scene, self.listener)
        self.ledger = BudgetLedger(scene.budget)
        for _ in self.facts:
            self.ledger.charge_dimension()
        self.engine = OracleBoEngine(personalize.engine_config(scene), self.facts)
        self.history: list[dict] = []
        self.pending: Proposal | None = None
        self.phase = PHASE_FINISHED
        self.lock = threading.Lock()
        self._clip_cache: dict[str, bytes] = {}
        self._advance()

    # -- engine stepping ---------------------------------------------------

    def _advance(self) -> None:
        if self.engine.queries < self.scene.f_evals and self.ledger.remaining >= 1:
            self.pending = self.engine.propose()
            self.phase = PHASE_AWAITING
        else:
            self.pending = None
            self.phase = PHASE_FINISHED
        self._clip_cache.clear()

    def submit(self, score: float) -> None:
        candidate = personalize.candidate_filter(self.pending)
        self.ledger.charge_filter()
        self.engine.observe(self.pending, -score)
        self.history.append(
            {
                "y": [float(v) for v in self.pending.y_low],
                "gains_db": [float(g) for g in candidate.gains_db],
                "score": float(score),
                "timestamp": time.time(),
            }
        )
        self._advance()

    def finish(self) -> None:
        self.pending = None
        self.phase = PHASE_FINISHED

    # -- views ---------------------------------------------------------------

    def best(self) -> tuple[float | None, list[float] | None]:
        if not self.history:
            return None, None
        best = max(self.history, key=lambda h: h["score"])
        return best["score"], best["gains_db"]

    def state(self) -> dict:
        best_score, best_gains = self.best()
        return {
            "session_id": self.session_id,
            "phase": self.phase,
            "ledger": {
                "total_budget": self.ledger.total_budget,
                "filter_queries_used": self.ledger.filter_queries_used,
                "dimension_queries_used": self.ledger.dimension_queries_used,
            },
            "history": [
                {"score": h["score"], "timestamp": h["timestamp"]} for h in self.history
            ],
            "best_score": best_score,
            "best_gains_db": best_gains,
            "facts": [[f.index, f.value] for f in self.facts],
            "has_pending": self.pending is not None,
        }

    def render_clip(self, variant: str) -> bytes:
        if variant in self._clip_cache:
            return self._clip_cache[variant]
        if variant == "candidate":
            if self.phase != PHASE_AWAITING:
                raise ApiError(409, "conflict", "no candidate is awaiting a score")
            filt = personalize.candidate_filter(self.pending)
            clip = audio.apply_filter(self.listener.corrupted, filt)
        elif variant == "corrupted":
            clip = self.listener.corrupted
        elif variant == "best":
            _, best_gains = self.best()
            if best_gains is None:
                raise ApiError(409, "conflict", "no rated candidate yet")
            clip = audio.apply_filter(self.listener.corrupted, audio.SpectralFilter(np.array(best_gains)))
        else:
            raise ApiError(400, "invalid-config", f"unknown clip variant {variant!r}", field="variant")
        data = audio.render_wav(clip)
        self._clip_cache[variant] = data
        return data

    # -- persistence ---------------------------------------------------------

    def snapshot(self) -> dict:
        return {
            "session_id": self.session_id,
            "scene": {k: getattr(self.scene, k) for k in personalize.SceneConfig.__dataclass_fields__},
            "history": self.history,
            "phase": self.phase,
        }

    @classmethod
    def restore(cls, payload: dict) -> "LiveSession":
        scene = personalize.SceneConfig(**payload["scene"])
        session = cls.__new__(cls)
        session.session_id = payload["session_id"]
        session.scene = scene
        session.listener = personalize.build_listener(scene)
        session.facts = personalize.scene_facts(scene, session.listener)
        session.ledger = BudgetLedger(scene.budget)
        for _ in session.facts:
            session.ledger.charge_dimension()
        session.engine = OracleBoEngine(personalize.engine_config(scene), session.facts)
        session.history = list(payload["history"])
        session.lock = threading.Lock()
        session._clip_cache = {}
        for item in session.history:
            y = np.asarray(item["y"], dtype=float)
            session.ledger.charge_filter()
            session.engine.observe(Proposal(y, project_up(session.engine.spec, y)), -item["score"])
        if payload["phase"] == PHASE_FINISHED:
            session.pending = None
            session.phase = PHASE_FINISHED
            return session
        session._advance()
        return session


def _parse_scene(payload: dict) -> personalize.SceneConfig:
    if not isinstance(payload, dict):
        raise ApiError(400, "invalid-config", "request body must be a JSON object")
    corruption = payload.get("corruption", {})
    if not isinstance(corruption, dict):
        raise ApiError(400, "invalid-config", "corruption must be an object", field="corruption")
    kind = corruption.get("kind", "random")
    overrides = payload.get("overrides", {})
    if not isinstance(overrides, dict):
        raise ApiError(400, "invalid-config", "overrides must be an object", field="overrides")
    allowed = {"n_bins", "n_low", "q", "n_mc", "n_raw", "r_init", "sigma", "d0", "mle_restarts"}
    unknown = set(overrides) - allowed
    if unknown:
        raise ApiError(400, "invalid-config", f"unknown overrides: {sorted(unknown)}", field="overrides")

    clip_id = payload.get("clip_id", "speechish")
    if clip_id not in audio.BUILTIN_CLIP_IDS:
        raise ApiError(404, "not-found", f"unknown clip {clip_id!r}", field="clip_id")
    if kind == "profile":
        path = corruption.get("path")
        if not path:
            raise ApiError(400, "invalid-config", "profile corruption needs a path", field="corruption.path")
        if not Path(path).exists():
            raise ApiError(404, "not-found", f"profile file not found: {path}", field="corruption.path")
        try:
            audio.load_profile(path)
        except audio.ProfileFormatError as exc:
            raise ApiError(400, "invalid-config", str(exc), field="corruption.path")
    elif kind != "random":
        raise ApiError(400, "invalid-config", f"unknown corruption kind {kind!r}", field="corruption.kind")

    try:
        return personalize.SceneConfig(
            clip_id=clip_id,
            budget=int(payload.get("budget", 30)),
            l_count=int(payload.get("l_count", 5)),
            seed=int(payload.get("seed", 0)),
            corruption_kind=kind,
            corruption_seed=int(corruption.get("seed", 0)),
            corruption_knots=corruption.get("knots"),
            profile_path=corruption.get("path"),
            **overrides,
        )
    except (TypeError, ValueError) as exc:
        raise ApiError(400, "invalid-config", str(exc))


def create_app(storage_dir: str | Path = "sessions") -> FastAPI:
    storage = Path(storage_dir)
    storage.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="oraclebo session service")
    sessions: dict[str, LiveSession] = {}
    registry_lock = threading.Lock()
    app.state.sessions = sessions

    def persist(session: LiveSession) -> None:
        path = storage / f"{session.session_id}.json"
        path.write_text(json.dumps(session.snapshot()) + "\n")

    def get_session(session_id: str) -> LiveSession:
        with registry_lock:
            if session_id in sessions:
                return sessions[session_id]
            path = storage / f"{session_id}.json"
            if not path.exists():
                raise ApiError(404, "not-found", f"unknown session {session_id}")
            session = LiveSession.restore(json.loads(path.read_text()))
            sessions[session_id] = session
            return session

    @app.exception_handler(ApiError)
    async def _api_error(_: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content=exc.body())

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict = Body(default={})):
        scene = _parse_scene(payload or {})
        session = LiveSession(uuid.uuid4().hex, scene)
        with registry_lock:
            sessions[session.session_id] = session
        persist(session)
        return session.state()

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str):
        return get_session(session_id).state()

    @app.get("/sessions/{session_id}/clip")
    def get_clip(session_id: str, variant: str = "candidate"):
        session = get_session(session_id)
        data = session.render_clip(variant)
        return Response(content=data, media_type="audio/wav")

    @app.post("/sessions/{session_id}/score")
    def submit_score(session_id: str, payload: dict = Body(default={})):
        session = get_session(session_id)
        if not session.lock.acquire(blocking=False):
            raise ApiError(409, "conflict", "another mutation is in flight")
        try:
            if session.phase != PHASE_AWAITING:
                raise ApiError(409, "conflict", f"session is {session.phase}, not awaiting a score")
            score = payload.get("score") if isinstance(payload, dict) else None
            if not isinstance(score, (int, float)) or isinstance(score, bool):
                raise ApiError(422, "invalid-score", "score must be a number", field="score")
            if not 0.0 <= float(score) <= 10.0:
                raise ApiError(422, "invalid-score", "score must lie in [0, 10]", field="score")
            session.submit(float(score))
            persist(session)
            return session.state()
        finally:
            session.lock.release()

    @app.post("/sessions/{session_id}/finish")
    def finish(session_id: str):
        session = get_session(session_id)
        if not session.lock.acquire(blocking=False):
            raise ApiError(409, "conflict", "another mutation is in flight")
        try:
            session.finish()
            persist(session)
            return session.state()
        finally:
            session.lock.release()

    return app


def serve_forever(host: str, port: int, storage_dir: Path) -> None:
    import uvicorn

    uvicorn.run(create_app(storage_dir), host=host, port=port, log_level="warning")
