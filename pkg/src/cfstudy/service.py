"""HTTP study service: session endpoints, event-sourced persistence, exports.

Every accepted mutation is appended to a line-delimited JSON event log with a
per-session sequence number; replaying the log (optionally on top of a
snapshot) reconstructs all session state exactly, because the game core is
deterministic and anything clock-derived (timing flags) is frozen into the
event payload when the request is handled. A per-session lock serialises
mutations, so concurrent requests cannot interleave inside one session.
"""
from __future__ import annotations

import hashlib
import io
import json
import os
import random
import secrets
import tempfile
import threading
import time

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib
from base64 import b32encode
from csv import writer as csv_writer
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import survey as survey_mod
from .cfe import CfeConfig
from .game import (
    Condition,
    GameConfig,
    Phase,
    ProtocolError,
    Session,
    Timings,
    ValidationError,
    advance,
    create_session,
    feedback_payload,
    scene_descriptor,
    session_from_dict,
    session_to_dict,
    submit_attention,
    submit_feeding,
    submit_survey,
)
from .stats import SessionData, quality_flags
from .tree import GrowthModel, load_model

ENV_BIND = "CFSTUDY_BIND"
ENV_ADMIN_TOKEN = "CFSTUDY_ADMIN_TOKEN"

ASSIGNMENTS = ("block-random", "fixed:control", "fixed:cfe")

LONG_CSV_HEADER = [
    "session_id",
    "condition",
    "experiment",
    "trial",
    "p1",
    "p2",
    "p3",
    "p4",
    "p5",
    "growth",
    "delta",
    "pack_size",
    "decision_time_ms",
    "attention_pass_count",
    "speeder",
    "inattentive",
    "straightliner_game",
    "straightliner_survey",
    "early",
]

SURVEY_CSV_HEADER = (
    ["session_id", "condition", "experiment", "relevant_dk"]
    + [f"rel_p{i}" for i in range(1, 6)]
    + ["irrelevant_dk"]
    + [f"irrel_p{i}" for i in range(1, 6)]
    + [f"likert_{i}" for i in survey_mod.LIKERT_ITEMS]
    + ["age_band", "gender"]
)


class ApiError(Exception):
    def __init__(self, status: int, detail: str):
        super().__init__(detail)
        self.status = status
        self.detail = detail


@dataclass
class StudyConfig:
    experiment: int
    model: GrowthModel
    trials: int = 12
    timings: Timings = field(default_factory=Timings)
    cfe: CfeConfig = field(default_factory=CfeConfig)
    assignment: str = "block-random"
    master_seed: int = 0
    bind: str = "127.0.0.1:8655"
    admin_token: str | None = None
    snapshot_every: int = 500

    def __post_init__(self) -> None:
        if self.assignment not in ASSIGNMENTS:
            raise ValueError(f"unknown assignment {self.assignment!r}, expected one of {ASSIGNMENTS}")

    def game_config(self) -> GameConfig:
        return GameConfig(
            experiment=self.experiment,
            model=self.model,
            cfe=self.cfe,
            trials=self.trials,
            timings=self.timings,
        )

    @classmethod
    def from_toml(cls, path: str | Path, env: dict | None = None) -> "StudyConfig":
        """Load a config file; CFSTUDY_BIND / CFSTUDY_ADMIN_TOKEN env vars win."""
        env = os.environ if env is None else env
        path = Path(path)
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        model_path = Path(raw["model_path"])
        if not model_path.is_absolute():
            model_path = path.parent / model_path
        model = load_model(model_path)
        timings = Timings(**raw.get("timings", {}))
        cfe = CfeConfig(**raw.get("cfe", {}))
        return cls(
            experiment=raw.get("experiment", model.experiment),
            model=model,
            trials=raw.get("trials", 12),
            timings=timings,
            cfe=cfe,
            assignment=raw.get("assignment", "block-random"),
            master_seed=raw.get("master_seed", 0),
            bind=env.get(ENV_BIND) or raw.get("bind", "127.0.0.1:8655"),
            admin_token=env.get(ENV_ADMIN_TOKEN) or raw.get("admin_token"),
            snapshot_every=raw.get("snapshot_every", 500),
        )


class EventStore:
    """Append-only JSONL log plus a JSON snapshot, both under one directory."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.log_path = self.directory / "events.jsonl"
        self.snapshot_path = self.directory / "snapshot.json"
        self._write_lock = threading.Lock()
        self._fh = open(self.log_path, "a", encoding="utf-8")

    def append(self, event: dict) -> None:
        line = json.dumps(event, sort_keys=True, separators=(",", ":"))
        with self._write_lock:
            self._fh.write(line + "\n")
            self._fh.flush()

    def events(self) -> list[dict]:
        if not self.log_path.exists():
            return []
        out = []
        with open(self.log_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(json.loads(line))
        return out

    def write_snapshot(self, snapshot: dict) -> None:
        # Unique temp name: concurrent writers must not race on one path.
        fd, tmp_name = tempfile.mkstemp(dir=self.directory, suffix=".snapshot.tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(json.dumps(snapshot, sort_keys=True))
            os.replace(tmp_name, self.snapshot_path)
        except BaseException:
            try:
                os.unlink(tmp_name)
            except OSError:
                pass
            raise

    def read_snapshot(self) -> dict | None:
        if not self.snapshot_path.exists():
            return None
        return json.loads(self.snapshot_path.read_text())

    def close(self) -> None:
        with self._write_lock:
            self._fh.close()


@dataclass
class _SessionMeta:
    """Service-side state that lives next to the game session."""

    next_seq: int = 1
    entered_ts_ms: int = 0  # when the currently gated scene appeared
    early: list[str] = field(default_factory=list)
    payment_hash: str | None = None
    payment_deleted: bool = False

    def to_dict(self) -> dict:
        return {
            "next_seq": self.next_seq,
            "entered_ts_ms": self.entered_ts_ms,
            "early": list(self.early),
            "payment_hash": self.payment_hash,
            "payment_deleted": self.payment_deleted,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "_SessionMeta":
        return cls(
            next_seq=d["next_seq"],
            entered_ts_ms=d["entered_ts_ms"],
            early=list(d["early"]),
            payment_hash=d["payment_hash"],
            payment_deleted=d["payment_deleted"],
        )


class StudyService:
    """The endpoint family behind the HTTP app, exercisable directly in tests."""

    def __init__(
        self,
        config: StudyConfig,
        store_dir: str | Path,
        clock: Callable[[], float] = time.time,
    ):
        self.config = config
        self.game_config = config.game_config()
        self.store = EventStore(store_dir)
        self.clock = clock
        self._registry_lock = threading.Lock()
        self._snapshot_lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._meta: dict[str, _SessionMeta] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._created_count = 0
        self._events_since_snapshot = 0
        self._recover()

    # ------------------------------------------------------------------ setup

    def _recover(self) -> None:
        snapshot = self.store.read_snapshot()
        applied: dict[str, int] = {}
        if snapshot is not None:
            self._created_count = snapshot["created_count"]
            for sid, blob in snapshot["sessions"].items():
                self._sessions[sid] = session_from_dict(blob["game"])
                self._meta[sid] = _SessionMeta.from_dict(blob["meta"])
                self._locks[sid] = threading.Lock()
                applied[sid] = blob["meta"]["next_seq"] - 1
        for event in self.store.events():
            sid = event["session_id"]
            if event["seq"] <= applied.get(sid, 0):
                continue
            self._apply_event(event)

    def _apply_event(self, event: dict) -> None:
        """Re-run one logged mutation against the in-memory state."""
        kind = event["kind"]
        sid = event["session_id"]
        payload = event["payload"]
        if kind == "session_created":
            session = create_session(
                self.game_config,
                Condition(payload["condition"]),
                payload["seed"],
                session_id=sid,
            )
            meta = _SessionMeta(entered_ts_ms=event["ts_ms"])
            self._sessions[sid] = session
            self._meta[sid] = meta
            self._locks[sid] = threading.Lock()
            self._created_count += 1
        else:
            session = self._sessions[sid]
            meta = self._meta[sid]
            if kind == "advanced":
                advance(self.game_config, session)
            elif kind == "feeding_submitted":
                submit_feeding(
                    self.game_config,
                    session,
                    tuple(payload["leaves"]),
                    payload["decision_time_ms"],
                )
            elif kind == "attention_submitted":
                submit_attention(self.game_config, session, payload["answer"])
            elif kind == "survey_submitted":
                submit_survey(
                    self.game_config,
                    session,
                    survey_mod.response_from_dict(payload["response"]),
                )
            elif kind == "payment_code_issued":
                meta.payment_hash = payload["code_hash"]
            elif kind == "payment_code_deleted":
                meta.payment_deleted = True
            else:
                raise ValueError(f"unknown event kind {kind!r} in log")
            if payload.get("early"):
                meta.early.append(payload["early"])
            # Payment events never move the scene clock forward in the live
            # path, so replay must not either.
            if kind not in ("payment_code_issued", "payment_code_deleted"):
                meta.entered_ts_ms = event["ts_ms"]
        meta.next_seq = event["seq"] + 1

    # ------------------------------------------------------------- internals

    def _now_ms(self) -> int:
        return int(self.clock() * 1000)

    def _get(self, session_id: str) -> tuple[Session, _SessionMeta, threading.Lock]:
        with self._registry_lock:
            if session_id not in self._sessions:
                raise ApiError(404, f"unknown session {session_id!r}")
            return self._sessions[session_id], self._meta[session_id], self._locks[session_id]

    def _append(self, session_id: str, meta: _SessionMeta, kind: str, payload: dict, ts_ms: int) -> None:
        event = {
            "session_id": session_id,
            "seq": meta.next_seq,
            "ts_ms": ts_ms,
            "kind": kind,
            "payload": payload,
        }
        meta.next_seq += 1
        self.store.append(event)
        with self._registry_lock:
            self._events_since_snapshot += 1

    def _maybe_snapshot(self) -> None:
        """Periodic snapshot; called with no session lock held (it takes them all)."""
        with self._registry_lock:
            if self._events_since_snapshot < self.config.snapshot_every:
                return
        if not self._snapshot_lock.acquire(blocking=False):
            return  # one writer is enough; the counter keeps the next one due
        try:
            with self._registry_lock:
                if self._events_since_snapshot < self.config.snapshot_every:
                    return
                self._events_since_snapshot = 0
            self.snapshot()
        finally:
            self._snapshot_lock.release()

    def _assign_condition(self, index: int) -> Condition:
        if self.config.assignment == "fixed:control":
            return Condition.CONTROL
        if self.config.assignment == "fixed:cfe":
            return Condition.CFE
        # Block-random in pairs: each pair holds one of each arm in a seeded
        # order, so the group sizes never drift apart by more than one.
        pair, position = divmod(index, 2)
        first_is_control = random.Random(f"{self.config.master_seed}:{pair}").random() < 0.5
        if position == 0:
            return Condition.CONTROL if first_is_control else Condition.CFE
        return Condition.CFE if first_is_control else Condition.CONTROL

    # -------------------------------------------------------------- endpoints

    def create_session(self, body: object) -> dict:
        if not isinstance(body, dict) or body.get("consent") is not True:
            raise ApiError(422, "consent must be given: {\"consent\": true}")
        ts = self._now_ms()
        with self._registry_lock:
            index = self._created_count
            self._created_count += 1
        condition = self._assign_condition(index)
        seed = secrets.randbits(31)
        sid = secrets.token_hex(8)
        session = create_session(self.game_config, condition, seed, session_id=sid)
        meta = _SessionMeta(entered_ts_ms=ts)
        lock = threading.Lock()
        with self._registry_lock:
            self._sessions[sid] = session
            self._meta[sid] = meta
            self._locks[sid] = lock
        with lock:
            self._append(sid, meta, "session_created", {"condition": condition.value, "seed": seed}, ts)
            scene = scene_descriptor(self.game_config, session)
        self._maybe_snapshot()
        return {"session_id": sid, "scene": scene}

    def get_scene(self, session_id: str) -> dict:
        session, _, lock = self._get(session_id)
        with lock:
            return scene_descriptor(self.game_config, session)

    def advance_scene(self, session_id: str) -> dict:
        session, meta, lock = self._get(session_id)
        ts = self._now_ms()
        with lock:
            from_phase = session.phase
            try:
                advance(self.game_config, session)
            except ProtocolError as exc:
                raise ApiError(409, str(exc)) from exc
            early = ""
            elapsed = ts - meta.entered_ts_ms
            if from_phase is Phase.INSTRUCTIONS and elapsed < self.game_config.timings.start_delay_s * 1000:
                early = "start"
            elif from_phase is Phase.FEEDBACK and elapsed < self.game_config.timings.continue_delay_s * 1000:
                early = f"continue:block{len(session.trials) // 2}"
            if early:
                meta.early.append(early)
            self._append(session_id, meta, "advanced", {"early": early}, ts)
            meta.entered_ts_ms = ts
            result = {"scene": scene_descriptor(self.game_config, session)}
        self._maybe_snapshot()
        return result

    def submit_feeding(self, session_id: str, body: object) -> dict:
        session, meta, lock = self._get(session_id)
        if not isinstance(body, dict):
            raise ApiError(422, "body must be an object")
        leaves = body.get("leaves")
        decision_time = body.get("decision_time_ms")
        ts = self._now_ms()
        with lock:
            had_progress = session.progress_pending
            try:
                record = submit_feeding(self.game_config, session, leaves, decision_time)
            except ValidationError as exc:
                raise ApiError(422, str(exc)) from exc
            except ProtocolError as exc:
                raise ApiError(409, str(exc)) from exc
            early = ""
            if had_progress and ts - meta.entered_ts_ms < self.game_config.timings.progress_s * 1000:
                early = f"feed:{record.trial}"
            if early:
                meta.early.append(early)
            self._append(
                session_id,
                meta,
                "feeding_submitted",
                {
                    "leaves": list(record.choice),
                    "decision_time_ms": record.decision_time_ms,
                    "early": early,
                },
                ts,
            )
            meta.entered_ts_ms = ts
            result = {
                "trial": record.trial,
                "delta": record.delta,
                "pack_size": record.pack_after,
                "scene": scene_descriptor(self.game_config, session),
            }
        self._maybe_snapshot()
        return result

    def get_feedback(self, session_id: str) -> dict:
        session, _, lock = self._get(session_id)
        with lock:
            try:
                return feedback_payload(self.game_config, session)
            except ProtocolError as exc:
                raise ApiError(409, str(exc)) from exc

    def submit_attention(self, session_id: str, body: object) -> dict:
        session, meta, lock = self._get(session_id)
        if not isinstance(body, dict) or "answer" not in body:
            raise ApiError(422, "body must carry an integer answer")
        answer = body["answer"]
        ts = self._now_ms()
        with lock:
            try:
                record = submit_attention(self.game_config, session, answer)
            except ValidationError as exc:
                raise ApiError(422, str(exc)) from exc
            except ProtocolError as exc:
                raise ApiError(409, str(exc)) from exc
            self._append(session_id, meta, "attention_submitted", {"answer": record.answer}, ts)
            meta.entered_ts_ms = ts
            result = {"correct": record.correct, "scene": scene_descriptor(self.game_config, session)}
        self._maybe_snapshot()
        return result

    def submit_survey(self, session_id: str, body: object) -> dict:
        session, meta, lock = self._get(session_id)
        try:
            response = survey_mod.response_from_payload(body)
        except ValueError as exc:
            raise ApiError(422, str(exc)) from exc
        ts = self._now_ms()
        with lock:
            try:
                submit_survey(self.game_config, session, response)
            except ValidationError as exc:
                raise ApiError(422, str(exc)) from exc
            except ProtocolError as exc:
                raise ApiError(409, str(exc)) from exc
            self._append(
                session_id,
                meta,
                "survey_submitted",
                {"response": survey_mod.response_to_dict(response)},
                ts,
            )
            meta.entered_ts_ms = ts
            result = {"scene": scene_descriptor(self.game_config, session)}
        self._maybe_snapshot()
        return result

    def payment_code(self, session_id: str) -> dict:
        """Issue the one-time completion code; only its hash is retained."""
        session, meta, lock = self._get(session_id)
        ts = self._now_ms()
        with lock:
            if session.phase is not Phase.DONE:
                raise ApiError(409, "payment code is only available after the survey")
            if meta.payment_hash is not None:
                raise ApiError(409, "payment code was already issued")
            token = b32encode(secrets.token_bytes(16)).decode("ascii").rstrip("=")
            code_hash = hashlib.sha256(token.encode("ascii")).hexdigest()
            meta.payment_hash = code_hash
            self._append(session_id, meta, "payment_code_issued", {"code_hash": code_hash}, ts)
        self._maybe_snapshot()
        return {"code": token}

    def verify_payment_code(self, session_id: str, token: str) -> bool:
        _, meta, lock = self._get(session_id)
        with lock:
            if meta.payment_hash is None or meta.payment_deleted:
                return False
            return hashlib.sha256(token.encode("ascii")).hexdigest() == meta.payment_hash

    def delete_payment_code(self, session_id: str) -> None:
        _, meta, lock = self._get(session_id)
        ts = self._now_ms()
        with lock:
            if meta.payment_hash is None or meta.payment_deleted:
                raise ApiError(404, "no payment code on record")
            meta.payment_deleted = True
            self._append(session_id, meta, "payment_code_deleted", {}, ts)
        self._maybe_snapshot()

    # ----------------------------------------------------------------- admin

    def _consistent_copies(self) -> tuple[list[Session], dict[str, list[str]]]:
        """Session copies taken under their locks, so exports see settled state."""
        with self._registry_lock:
            ids = sorted(self._sessions)
        sessions: list[Session] = []
        early: dict[str, list[str]] = {}
        for sid in ids:
            with self._locks[sid]:
                sessions.append(session_from_dict(session_to_dict(self._sessions[sid])))
                early[sid] = list(self._meta[sid].early)
        return sessions, early

    def admin_export(self, fmt: str) -> str:
        sessions, early = self._consistent_copies()
        if fmt == "long-csv":
            return export_long_csv(sessions, early)
        if fmt == "survey-csv":
            return export_survey_csv(sessions)
        raise ApiError(422, f"unknown export format {fmt!r}")

    def admin_quality(self) -> dict:
        sessions, early = self._consistent_copies()
        out = {}
        for session in sessions:
            complete = session.phase is Phase.DONE
            flags = None
            if complete:
                qf = quality_flags(SessionData.from_session(session))
                flags = {
                    "speeder": qf.speeder,
                    "inattentive": qf.inattentive,
                    "straightliner_game": qf.straightliner_game,
                    "straightliner_survey": qf.straightliner_survey,
                }
            out[session.id] = {
                "complete": complete,
                "phase": session.phase.value,
                "trials_played": len(session.trials),
                "attention_pass_count": sum(1 for a in session.attention if a.correct),
                "flags": flags,
                "early": early[session.id],
            }
        return out

    def snapshot(self) -> None:
        """Write a consistent point-in-time snapshot next to the log."""
        with self._registry_lock:
            ids = sorted(self._sessions)
            locks = [self._locks[sid] for sid in ids]
        for lock in locks:
            lock.acquire()
        try:
            blob = {
                "created_count": self._created_count,
                "sessions": {
                    sid: {
                        "game": session_to_dict(self._sessions[sid]),
                        "meta": self._meta[sid].to_dict(),
                    }
                    for sid in ids
                },
            }
        finally:
            for lock in reversed(locks):
                lock.release()
        self.store.write_snapshot(blob)

    def state_digest(self) -> str:
        """Hash of every session's canonical serialisation, for replay checks."""
        blob = {
            sid: session_to_dict(self._sessions[sid]) for sid in sorted(self._sessions)
        }
        text = json.dumps(blob, sort_keys=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def close(self) -> None:
        self.store.close()


# ------------------------------------------------------------------- exports


def _flag_columns(session: Session) -> list[str]:
    if session.phase is not Phase.DONE:
        return ["", "", "", ""]
    qf = quality_flags(SessionData.from_session(session))
    return [
        str(int(qf.speeder)),
        str(int(qf.inattentive)),
        str(int(qf.straightliner_game)),
        str(int(qf.straightliner_survey)),
    ]


def export_long_csv(sessions: list[Session], early: dict[str, list[str]] | None = None) -> str:
    """One row per (session, trial), RFC-4180, deterministic order."""
    early = early or {}
    buf = io.StringIO()
    w = csv_writer(buf)
    w.writerow(LONG_CSV_HEADER)
    for session in sorted(sessions, key=lambda s: s.id):
        flags = _flag_columns(session)
        early_feeds = {e.split(":", 1)[1] for e in early.get(session.id, []) if e.startswith("feed:")}
        attention_pass = sum(1 for a in session.attention if a.correct)
        for rec in session.trials:
            w.writerow(
                [
                    session.id,
                    session.condition.value,
                    str(session.experiment),
                    str(rec.trial),
                    *[str(v) for v in rec.choice],
                    repr(float(rec.growth)),
                    str(rec.delta),
                    str(rec.pack_after),
                    str(rec.decision_time_ms),
                    str(attention_pass),
                    *flags,
                    str(int(str(rec.trial) in early_feeds)),
                ]
            )
    return buf.getvalue()


def export_survey_csv(sessions: list[Session]) -> str:
    """One row per completed survey with per-plant relevance indicators."""
    buf = io.StringIO()
    w = csv_writer(buf)
    w.writerow(SURVEY_CSV_HEADER)
    for session in sorted(sessions, key=lambda s: s.id):
        resp = session.survey
        if resp is None:
            continue

        def selection_cols(sel: frozenset[int] | str | None) -> list[str]:
            dk = "1" if sel == survey_mod.DONT_KNOW else "0"
            chosen = sel if isinstance(sel, frozenset) else frozenset()
            return [dk] + [str(int(p in chosen)) for p in survey_mod.PLANT_IDS]

        likert_cols = [str(resp.likert[i]) for i in survey_mod.LIKERT_ITEMS]
        w.writerow(
            [session.id, session.condition.value, str(session.experiment)]
            + selection_cols(resp.relevant_plants)
            + selection_cols(resp.irrelevant_plants)
            + likert_cols
            + [resp.age_band or "", resp.gender or ""]
        )
    return buf.getvalue()


# ---------------------------------------------------------------- HTTP layer


def build_app(service: StudyService):
    """FastAPI wrapper over the service methods.

    Handlers are synchronous on purpose: they take blocking per-session
    locks, and the framework's threadpool keeps those off the event loop.
    """
    from fastapi import Body, FastAPI, Header
    from fastapi.responses import JSONResponse, PlainTextResponse

    app = FastAPI(title="cfstudy", docs_url=None, redoc_url=None)

    @app.exception_handler(ApiError)
    async def api_error_handler(_request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"detail": exc.detail})

    def check_admin(authorization: str | None) -> None:
        token = service.config.admin_token
        if not token:
            raise ApiError(401, "admin access is not configured")
        expected = f"Bearer {token}"
        if authorization is None or not secrets.compare_digest(authorization, expected):
            raise ApiError(401, "missing or invalid bearer token")

    @app.post("/api/session")
    def create(payload: dict = Body(...)):
        return service.create_session(payload)

    @app.get("/api/session/{session_id}/scene")
    def scene(session_id: str):
        return service.get_scene(session_id)

    @app.post("/api/session/{session_id}/advance")
    def advance_(session_id: str):
        return service.advance_scene(session_id)

    @app.post("/api/session/{session_id}/feed")
    def feed(session_id: str, payload: dict = Body(...)):
        return service.submit_feeding(session_id, payload)

    @app.get("/api/session/{session_id}/feedback")
    def feedback(session_id: str):
        return service.get_feedback(session_id)

    @app.post("/api/session/{session_id}/attention")
    def attention(session_id: str, payload: dict = Body(...)):
        return service.submit_attention(session_id, payload)

    @app.post("/api/session/{session_id}/survey")
    def survey(session_id: str, payload: dict = Body(...)):
        return service.submit_survey(session_id, payload)

    @app.get("/api/session/{session_id}/payment-code")
    def payment(session_id: str):
        return service.payment_code(session_id)

    @app.get("/admin/export")
    def admin_export(format: str = "long-csv", authorization: str | None = Header(default=None)):
        check_admin(authorization)
        return PlainTextResponse(service.admin_export(format), media_type="text/csv")

    @app.get("/admin/quality")
    def admin_quality(authorization: str | None = Header(default=None)):
        check_admin(authorization)
        return service.admin_quality()

    @app.delete("/admin/session/{session_id}/payment-code")
    def delete_payment(session_id: str, authorization: str | None = Header(default=None)):
        check_admin(authorization)
        service.delete_payment_code(session_id)
        return {"deleted": True}

    return app


def serve(config: StudyConfig, store_dir: str | Path) -> None:  # pragma: no cover - manual entry point
    import uvicorn

    service = StudyService(config, store_dir)
    host, _, port = config.bind.partition(":")
    uvicorn.run(build_app(service), host=host or "127.0.0.1", port=int(port or 8655), log_level="info")
