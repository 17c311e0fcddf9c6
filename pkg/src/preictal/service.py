"""Session service: the boundary a monitoring console talks to.

One replay pipeline per session runs on its own thread, appending events to
a per-session log file. Subscribers replay the log from any sequence number
and then tail live appends; delivery per subscriber is exactly once and in
order because the log is the single source of truth and a sequence number
is just a line index. Config updates go through a mailbox and take effect
at the next window boundary; the ack names the last window processed under
the old revision.

HTTP surface:
  POST /sessions                   create a session (replay source)
  GET  /sessions/{id}              status snapshot
  PUT  /sessions/{id}/config       live retune, acked with version + boundary
  GET  /sessions/{id}/export       zip bundle: log, config history,
                                   population snapshot, source reference
  WS   /sessions/{id}/events       hello record, then event records (JSON,
                                   one per frame), then an end marker
"""

from __future__ import annotations

import hashlib
import io
import json
import secrets
import tempfile
import threading
import time
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import Response

from .config import EngineConfig
from .decision import DecisionEvent, EventLog
from .errors import BundleError, ConfigError, EngineError
from .immune import load_bundle, save_bundle
from .pipeline import Pipeline
from .recording import load_recording, windows
from .signature import RunningRanges


@dataclass
class Session:
    session_id: str
    pipeline: Pipeline
    recording_path: str
    log_path: Path
    speed: float = 0.0  # replay pacing: 0 = as fast as possible, 1 = realtime
    state: str = "created"  # created | running | ended | failed
    lock: threading.Lock = field(default_factory=threading.Lock)
    new_event: threading.Condition = None  # type: ignore[assignment]
    events: list[DecisionEvent] = field(default_factory=list)
    config_history: list[dict] = field(default_factory=list)
    error: str = ""

    def __post_init__(self):
        self.new_event = threading.Condition(self.lock)


class SessionManager:
    def __init__(self, data_dir: str | Path = "sessions"):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, Session] = {}

    def create(
        self,
        recording_path: str,
        config: EngineConfig,
        bundle_path: str | None = None,
        speed: float = 0.0,
    ) -> Session:
        rec = load_recording(recording_path)
        config.validate_for_rate(rec.sample_rate_hz)
        population = None
        ranges = RunningRanges()
        if bundle_path:
            population, loaded_ranges = load_bundle(bundle_path)
            if loaded_ranges is not None:
                ranges = loaded_ranges
        session_id = secrets.token_hex(8)
        log_path = self.data_dir / f"{session_id}.events.jsonl"
        pipe = Pipeline(config=config, population=population, ranges=ranges)
        session = Session(
            session_id=session_id,
            pipeline=pipe,
            recording_path=str(recording_path),
            log_path=log_path,
            speed=speed,
        )
        session.config_history.append(
            {"window_boundary": -1, "config": config.to_dict()}
        )
        self.sessions[session_id] = session

        def run():
            log = EventLog(log_path)
            try:
                with session.lock:
                    session.state = "running"
                window_s = config.window_samples(rec.sample_rate_hz) / rec.sample_rate_hz
                for w in windows(rec, config):
                    with session.lock:
                        report = session.pipeline.process(w)
                        if report.event is not None:
                            log.append(report.event)
                            session.events.append(report.event)
                            session.new_event.notify_all()
                    if session.speed > 0:
                        time.sleep(window_s / session.speed)
                with session.lock:
                    session.state = "ended"
                    session.new_event.notify_all()
            except EngineError as exc:
                with session.lock:
                    session.state = "failed"
                    session.error = str(exc)
                    session.new_event.notify_all()
            finally:
                log.close()

        threading.Thread(target=run, daemon=True, name=f"session-{session_id}").start()
        return session

    def get(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")


def export_zip(session: Session) -> bytes:
    """Self-describing archive of everything the session produced."""
    with session.lock:
        event_lines = "".join(ev.to_json() + "\n" for ev in session.events)
        config_lines = "".join(json.dumps(c) + "\n" for c in session.config_history)
        pop = session.pipeline.population
        ranges = session.pipeline.ranges
        source = json.dumps(
            {
                "session_id": session.session_id,
                "recording_path": session.recording_path,
                "state": session.state,
                "windows_processed": session.pipeline.windows_processed,
            }
        )
    members = {
        "events.jsonl": event_lines.encode(),
        "config_history.jsonl": config_lines.encode(),
        "source.json": source.encode(),
    }
    if pop is not None:
        with tempfile.NamedTemporaryFile(suffix=".ais1") as tmp:
            save_bundle(pop, tmp.name, ranges)
            members["population.ais1"] = Path(tmp.name).read_bytes()
    checksums = {
        name: hashlib.sha256(body).hexdigest() for name, body in members.items()
    }
    members["checksums.json"] = json.dumps(checksums, sort_keys=True).encode()
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        for name, body in sorted(members.items()):
            zf.writestr(name, body)
    return buf.getvalue()


def import_export_bundle(path: str | Path) -> dict:
    """Verify and open an exported archive; checksum mismatches are fatal."""
    with zipfile.ZipFile(path) as zf:
        names = set(zf.namelist())
        if "checksums.json" not in names:
            raise BundleError("export bundle missing checksums.json")
        checksums = json.loads(zf.read("checksums.json"))
        out: dict = {}
        for name, want in checksums.items():
            if name not in names:
                raise BundleError(f"export bundle missing {name}")
            body = zf.read(name)
            got = hashlib.sha256(body).hexdigest()
            if got != want:
                raise BundleError(f"checksum mismatch for {name}")
            out[name] = body
    events = [
        DecisionEvent.from_json(line)
        for line in out["events.jsonl"].decode().splitlines()
        if line.strip()
    ]
    result = {
        "events": events,
        "source": json.loads(out["source.json"]),
        "config_history": [
            json.loads(line)
            for line in out["config_history.jsonl"].decode().splitlines()
            if line.strip()
        ],
    }
    if "population.ais1" in out:
        with tempfile.NamedTemporaryFile(suffix=".ais1", delete=False) as tmp:
            tmp.write(out["population.ais1"])
            tmp_path = tmp.name
        pop, ranges = load_bundle(tmp_path)
        Path(tmp_path).unlink()
        result["population"] = pop
        result["ranges"] = ranges
    return result


def create_app(data_dir: str | Path = "sessions") -> FastAPI:
    app = FastAPI(title="preictal monitor")
    manager = SessionManager(data_dir)
    app.state.manager = manager

    @app.post("/sessions")
    def create_session(body: dict):
        recording_path = body.get("recording_path")
        if not recording_path or not Path(recording_path).exists():
            raise HTTPException(status_code=400, detail="recording_path missing or not found")
        try:
            config = EngineConfig.from_dict(body.get("config", {})) if body.get("config") else EngineConfig()
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        bundle_path = body.get("bundle_path")
        if bundle_path and not Path(bundle_path).exists():
            raise HTTPException(status_code=400, detail=f"bundle not found: {bundle_path}")
        try:
            session = manager.create(
                recording_path,
                config,
                bundle_path=bundle_path,
                speed=max(0.0, float(body.get("speed", 0.0))),
            )
        except (EngineError, OSError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"session_id": session.session_id}

    @app.get("/sessions/{session_id}")
    def session_status(session_id: str):
        session = manager.get(session_id)
        with session.lock:
            return {
                "session_id": session.session_id,
                "state": session.state,
                "config": session.pipeline.config.to_dict(),
                "windows_processed": session.pipeline.windows_processed,
                "next_seq": len(session.events),
                "error": session.error,
            }

    @app.put("/sessions/{session_id}/config")
    def update_config(session_id: str, body: dict):
        session = manager.get(session_id)
        with session.lock:
            try:
                new_config = session.pipeline.config.with_updates(
                    **{k: v for k, v in body.items() if k != "version"}
                )
                version, boundary = session.pipeline.request_config(new_config)
            except ConfigError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            session.config_history.append(
                {"window_boundary": boundary, "config": new_config.to_dict()}
            )
        return {"applied_version": version, "effective_after_window": boundary}

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str):
        session = manager.get(session_id)
        blob = export_zip(session)
        return Response(
            content=blob,
            media_type="application/zip",
            headers={
                "Content-Disposition": f'attachment; filename="{session_id}.zip"'
            },
        )

    @app.websocket("/sessions/{session_id}/events")
    async def event_stream(ws: WebSocket, session_id: str):
        import anyio

        await ws.accept()
        session = manager.sessions.get(session_id)
        if session is None:
            await ws.send_text(json.dumps({"error": f"unknown session {session_id}"}))
            await ws.close()
            return
        try:
            from_seq = int(ws.query_params.get("from_seq", "0"))
        except ValueError:
            from_seq = 0

        with session.lock:
            hello = {
                "session_id": session.session_id,
                "config": session.pipeline.config.to_dict(),
                "next_seq": max(0, from_seq),
            }
        await ws.send_text(json.dumps(hello))

        seq = max(0, from_seq)

        def wait_for_next(cursor: int):
            with session.lock:
                while True:
                    if cursor < len(session.events):
                        return session.events[cursor]
                    if session.state in ("ended", "failed"):
                        return None
                    session.new_event.wait(timeout=0.5)

        try:
            while True:
                ev = await anyio.to_thread.run_sync(wait_for_next, seq)
                if ev is None:
                    break
                await ws.send_text(ev.to_json())
                seq += 1
            await ws.send_text(
                json.dumps({"end_of_session": True, "next_seq": seq})
            )
            await ws.close()
        except WebSocketDisconnect:
            pass

    return app
