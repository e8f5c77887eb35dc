"""Local HTTP service for clinician review: sessions, threshold patching
with an append-only audit log, synchronous re-detection, waveform data,
and accept/reject feedback.

Persistence is one directory per session (WAV, config.json, report.json,
audit.ndjson, feedback.ndjson): inspectable and diff-able. Privacy/HIPAA
handling is a deployment concern, documented in the README.
"""
from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .audio import load_audio
from .config import RuleConfig
from .errors import AudioFormatError, ConfigError, InsufficientSpeechError
from .pipeline import detect_events

MAX_UPLOAD_BYTES = 50 * 1024 * 1024
VERDICTS = ("accepted", "rejected", "retyped")


def _event_payload(report) -> list[dict[str, Any]]:
    out = []
    for i, e in enumerate(report.events):
        d = e.to_dict()
        d["id"] = f"ev-{i:04d}"
        out.append(d)
    return out


@dataclass
class Session:
    id: str
    directory: Path
    config: RuleConfig
    report: dict[str, Any]
    version: int
    lock: threading.Lock = field(default_factory=threading.Lock)

    def event_ids(self) -> set[str]:
        return {e["id"] for e in self.report["events"]}


class SessionStore:
    """All session state and the serialization point for mutations."""

    def __init__(self, base_dir: str | Path):
        self.base = Path(base_dir)
        self.base.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._store_lock = threading.Lock()
        for d in sorted(self.base.iterdir()):
            if (d / "config.json").exists() and (d / "report.json").exists():
                self._sessions[d.name] = self._load_session(d)

    def _load_session(self, d: Path) -> Session:
        config = RuleConfig.from_json((d / "config.json").read_text())
        report = json.loads((d / "report.json").read_text())
        return Session(id=d.name, directory=d, config=config,
                       report=report, version=report.get("version", 1))

    # -- helpers --------------------------------------------------------

    def _write_json(self, path: Path, data: dict) -> None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(json.dumps(data, indent=2, sort_keys=True))
        tmp.replace(path)

    def _append_ndjson(self, path: Path, rows: list[dict]) -> None:
        with path.open("a") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")

    def _read_ndjson(self, path: Path) -> list[dict]:
        if not path.exists():
            return []
        return [json.loads(line) for line in path.read_text().splitlines() if line]

    def _run_detection(self, sess: Session) -> None:
        buf = load_audio(sess.directory / "audio.wav")
        report = detect_events(buf, sess.config, recording_id=sess.id)
        sess.version += 1
        payload = report.to_dict()
        payload["version"] = sess.version
        payload["events"] = _event_payload(report)
        sess.report = payload
        self._write_json(sess.directory / "report.json", payload)
        self._write_json(sess.directory / "config.json", sess.config.to_dict())

    # -- operations -----------------------------------------------------

    def create(self, wav_bytes: bytes, config: RuleConfig | None = None) -> Session:
        if len(wav_bytes) > MAX_UPLOAD_BYTES:
            raise ValueError(f"payload exceeds {MAX_UPLOAD_BYTES} bytes")
        sid = uuid.uuid4().hex[:12]
        d = self.base / sid
        d.mkdir()
        (d / "audio.wav").write_bytes(wav_bytes)
        try:
            load_audio(d / "audio.wav")  # validate before persisting state
        except AudioFormatError:
            (d / "audio.wav").unlink()
            d.rmdir()
            raise
        sess = Session(id=sid, directory=d, config=config or RuleConfig(),
                       report={}, version=0)
        self._run_detection(sess)
        with self._store_lock:
            self._sessions[sid] = sess
        return sess

    def get(self, sid: str) -> Session | None:
        return self._sessions.get(sid)

    def patch_thresholds(self, sid: str, patch: dict[str, Any],
                         author: str = "clinician") -> Session:
        sess = self._sessions[sid]
        with sess.lock:
            old = sess.config
            new = old.patched(patch)  # raises ConfigError atomically
            batch = uuid.uuid4().hex[:8]
            ts = time.time()
            rows = []
            for name in sorted(patch):
                before = getattr(old, name)
                after = getattr(new, name)
                if isinstance(before, tuple):
                    before, after = list(before), list(after)
                rows.append({"ts": ts, "field": name, "old": before,
                             "new": after, "author": author, "batch": batch})
            sess.config = new
            self._append_ndjson(sess.directory / "audit.ndjson", rows)
            self._run_detection(sess)
        return sess

    def redetect(self, sid: str) -> Session:
        sess = self._sessions[sid]
        with sess.lock:
            self._run_detection(sess)
        return sess

    def record_feedback(self, sid: str, event_id: str, verdict: str,
                        report_version: int, author: str = "clinician") -> dict:
        sess = self._sessions[sid]
        with sess.lock:
            if report_version != sess.version:
                raise StaleEventError(
                    f"feedback refers to report version {report_version}, "
                    f"current is {sess.version}")
            if event_id not in sess.event_ids():
                raise StaleEventError(f"unknown event {event_id!r} in latest report")
            row = {"ts": time.time(), "event_id": event_id, "verdict": verdict,
                   "author": author, "report_version": report_version}
            self._append_ndjson(sess.directory / "feedback.ndjson", [row])
            return row

    def audit_log(self, sid: str) -> list[dict]:
        sess = self._sessions[sid]
        return self._read_ndjson(sess.directory / "audit.ndjson")

    def feedback_log(self, sid: str) -> list[dict]:
        sess = self._sessions[sid]
        rows = self._read_ndjson(sess.directory / "feedback.ndjson")
        for row in rows:
            row["stale"] = row.get("report_version") != sess.version
        return rows

    def replay_config(self, sid: str,
                      initial: RuleConfig | None = None) -> RuleConfig:
        """Apply the audit log to the initial config; must reproduce the
        session's current config exactly."""
        cfg = initial or RuleConfig()
        for row in self.audit_log(sid):
            cfg = cfg.patched({row["field"]: row["new"]})
        return cfg

    def waveform(self, sid: str, points: int) -> list[tuple[float, float]]:
        if points < 2:
            raise ValueError("points must be >= 2")
        sess = self._sessions[sid]
        buf = load_audio(sess.directory / "audio.wav")
        x = buf.samples
        n = len(x)
        points = min(points, n)
        edges = np.linspace(0, n, points + 1).astype(int)
        out = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            seg = x[lo:max(hi, lo + 1)]
            out.append((float(seg.min()), float(seg.max())))
        return out


class StaleEventError(Exception):
    pass


def create_app(data_dir: str | Path = "sessions",
               static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="stutterkit service")
    store = SessionStore(data_dir)
    app.state.store = store

    def _session_payload(sess: Session) -> dict:
        return {"id": sess.id, "version": sess.version,
                "report": sess.report,
                "feedback": store.feedback_log(sess.id)}

    def _not_found(sid: str) -> JSONResponse:
        return JSONResponse({"error": f"unknown session {sid!r}"}, status_code=404)

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        body = await request.body()
        if len(body) > MAX_UPLOAD_BYTES:
            return JSONResponse({"error": "payload too large"}, status_code=413)
        try:
            sess = store.create(body)
        except AudioFormatError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        except InsufficientSpeechError as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        return _session_payload(sess)

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": [{"id": s.id, "version": s.version,
                              "counts": s.report.get("counts", {})}
                             for s in store._sessions.values()]}

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        sess = store.get(sid)
        if sess is None:
            return _not_found(sid)
        return _session_payload(sess)

    @app.post("/sessions/{sid}/detect")
    def redetect(sid: str):
        if store.get(sid) is None:
            return _not_found(sid)
        sess = store.redetect(sid)
        return _session_payload(sess)

    @app.patch("/sessions/{sid}/thresholds")
    async def patch_thresholds(sid: str, request: Request):
        if store.get(sid) is None:
            return _not_found(sid)
        try:
            patch = await request.json()
        except json.JSONDecodeError:
            return JSONResponse({"error": "body must be JSON"}, status_code=400)
        if not isinstance(patch, dict) or not patch:
            return JSONResponse({"error": "body must be a non-empty object"},
                                status_code=400)
        author = str(patch.pop("author", "clinician"))
        try:
            sess = store.patch_thresholds(sid, patch, author=author)
        except ConfigError as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        except InsufficientSpeechError as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        return _session_payload(sess)

    @app.get("/sessions/{sid}/events")
    def get_events(sid: str):
        sess = store.get(sid)
        if sess is None:
            return _not_found(sid)
        return {"version": sess.version, "events": sess.report["events"],
                "counts": sess.report["counts"],
                "speaking_rate": sess.report["speaking_rate"]}

    @app.get("/sessions/{sid}/waveform")
    def get_waveform(sid: str, points: int = 800):
        sess = store.get(sid)
        if sess is None:
            return _not_found(sid)
        if points < 2:
            return JSONResponse({"error": "points must be >= 2"}, status_code=400)
        peaks = store.waveform(sid, points)
        return {"version": sess.version, "points": len(peaks),
                "duration_s": _duration(sess), "peaks": peaks}

    @app.post("/sessions/{sid}/feedback")
    async def post_feedback(sid: str, request: Request):
        sess = store.get(sid)
        if sess is None:
            return _not_found(sid)
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return JSONResponse({"error": "body must be JSON"}, status_code=400)
        verdict = body.get("verdict")
        if verdict not in VERDICTS:
            return JSONResponse(
                {"error": f"verdict must be one of {VERDICTS}"}, status_code=400)
        try:
            row = store.record_feedback(
                sid, str(body.get("event_id")), verdict,
                int(body.get("report_version", -1)),
                author=str(body.get("author", "clinician")))
        except StaleEventError as exc:
            return JSONResponse({"error": str(exc), "version": sess.version},
                                status_code=409)
        return {"version": sess.version, "recorded": row}

    @app.get("/sessions/{sid}/audit")
    def get_audit(sid: str):
        sess = store.get(sid)
        if sess is None:
            return _not_found(sid)
        return {"version": sess.version, "entries": store.audit_log(sid)}

    @app.get("/sessions/{sid}/config")
    def get_config(sid: str):
        sess = store.get(sid)
        if sess is None:
            return _not_found(sid)
        return {"version": sess.version, "config": sess.config.to_dict()}

    def _duration(sess: Session) -> float:
        buf = load_audio(sess.directory / "audio.wav")
        return round(buf.duration_s, 3)

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="ui")
    return app
