"""Session gateway: the interactive surface over the whole pipeline.

Clients open a session against a world and backend, submit utterances, and
watch an ordered event stream (label, plan, decision, per-segment
execution with interleaved telemetry, final report). Control tokens follow
the chat loop: !quit/!exit close the session, !clear truncates the visible
transcript. Transcripts persist as append-only JSONL files, sufficient to
replay the run.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .commands import MachineLanguageVector, land
from .config import PipelineConfig
from .energy import classify_efficiency, integrate_energy, spr_windows, total_power
from .nlu import NluError
from .pipeline import make_backend, run_task
from .planning import FailureMemory, PlanningError, record_failure
from .sim import SimulatorSession, bundled_world, bundled_world_ids, step
from .tasks import TaskRequest

TELEMETRY_STRIDE = 25   # one telemetry sample per 0.5 s of flight at dt=0.02


class UtterancePayload(BaseModel):
    text: str


class OpenPayload(BaseModel):
    world: str
    prompt_style: str = "EIP"
    backend: str = "reference"


@dataclass
class GatewayConfig:
    transcript_dir: str = "transcripts"
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    backends: tuple[str, ...] = ("reference",)
    realtime_factor: float = 0.0   # wall seconds slept per simulated second


class Session:
    def __init__(self, sid: str, world_id: str, style: str, backend_id: str,
                 config: GatewayConfig):
        self.id = sid
        self.world_id = world_id
        self.style = style
        self.backend_id = backend_id
        self.config = config
        self.world = bundled_world(world_id)
        self._prompt_log = Path(config.transcript_dir) / f"{sid}.prompts.log"
        self.state = "idle"    # idle | planning | executing | aborted | closed
        self.events: list[dict] = []
        self.clear_from = 0
        self.memory = FailureMemory(capacity=config.pipeline.memory_capacity)
        self.abort_requested = threading.Event()
        self.cv = threading.Condition()
        self._last_t = 0.0
        self._transcript = Path(config.transcript_dir) / f"{sid}.jsonl"
        self._transcript.parent.mkdir(parents=True, exist_ok=True)

    def log_exchange(self, kind: str, text: str) -> None:
        """Append a prompt or raw backend response to the session's log."""
        with open(self._prompt_log, "a", encoding="utf-8") as fh:
            fh.write(f"--- {kind} ---\n{text}\n")

    def emit(self, role: str, kind: str, payload) -> dict:
        with self.cv:
            now = time.monotonic()
            t = max(now, self._last_t + 1e-6)   # timestamps stay monotone
            self._last_t = t
            event = {
                "seq": len(self.events),
                "t": round(t, 6),
                "role": role,
                "kind": kind,
                "payload": payload,
            }
            self.events.append(event)
            with open(self._transcript, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")
            self.cv.notify_all()
        return event

    def visible_events(self) -> list[dict]:
        return self.events[self.clear_from :]

    def snapshot(self) -> dict:
        return {
            "id": self.id,
            "world": self.world_id,
            "prompt_style": self.style,
            "backend": self.backend_id,
            "state": self.state,
            "events": len(self.events),
        }


class _StreamingSink:
    """Command sink wrapper that narrates segments and telemetry as events."""

    def __init__(self, session: Session, sim: SimulatorSession):
        self.session = session
        self.sim = sim
        self._emitted_samples = 0

    @property
    def flight_time(self):
        return self.sim.flight_time

    @property
    def state(self):
        return self.sim.state

    def accept_segment(self, vec: MachineLanguageVector):
        if self.session.abort_requested.is_set():
            from .sim import SegmentResult

            return SegmentResult([], False, "Aborted")
        before = self.sim.flight_time
        result = self.sim.accept_segment(vec)
        factor = self.session.config.realtime_factor
        if factor > 0:
            time.sleep((self.sim.flight_time - before) * factor)
        self._emit_telemetry()
        self.session.emit(
            "executor",
            "segment",
            {
                "commands": [c.render() for c in vec.commands],
                "ok": result.ok,
                "cause": result.cause,
                "acks": [list(a) for a in result.acks],
            },
        )
        return result

    def _emit_telemetry(self):
        trajectory = self.sim.trajectory()
        fresh = trajectory[self._emitted_samples :: 1]
        if fresh.shape[0] == 0:
            return
        strided = fresh[::TELEMETRY_STRIDE]
        self._emitted_samples = trajectory.shape[0]
        self.session.emit(
            "executor",
            "telemetry",
            {
                "samples": [
                    {
                        "t": round(float(r[0]), 4),
                        "x": round(float(r[1]), 4),
                        "y": round(float(r[2]), 4),
                        "z": round(float(r[3]), 4),
                        "yaw": round(float(r[4]), 2),
                    }
                    for r in strided
                ]
            },
        )


def _run_utterance(session: Session, text: str) -> None:
    config = session.config.pipeline.with_style(session.style)
    backend = make_backend(session.backend_id)
    sim = SimulatorSession(session.world, config.sim)
    sink = _StreamingSink(session, sim)
    request = TaskRequest(text, session.world_id, _phrasing_of(text, session))
    try:
        run = run_task(
            request,
            session.world,
            config,
            backend=backend,
            memory=session.memory,
            session=sim,
            events=lambda kind, payload: (
                session.emit("planner", kind, payload),
                _enter_executing(session, kind),
            ),
            sink=sink,
            log=session.log_exchange,
        )
    except (NluError, PlanningError) as exc:
        session.emit("system", "error", {"message": str(exc)})
        session.state = "idle"
        return
    except Exception as exc:   # noqa: BLE001 - surfaced to the client
        session.emit("system", "error", {"message": f"{type(exc).__name__}: {exc}"})
        session.state = "idle"
        return

    aborted = session.abort_requested.is_set()
    if aborted and sim.state.airborne:
        result = step(sim.state, land(), session.world, config.sim)
        sim._samples.append(result.samples)
        sim._motors.append(result.motors)
        sim.state = result.state
        sink._emit_telemetry()
    if not run.report.success and run.report.failure:
        session.memory = record_failure(
            {
                "instruction": run.canonical.instruction,
                "plan": " / ".join(s.description for s in run.plan.steps),
                "rule": run.report.failure,
            },
            session.memory,
        )
    session.emit(
        "executor",
        "report",
        {
            "ok": run.report.success and not aborted,
            "aborted": aborted,
            "failure": run.report.failure,
            "flight_time_s": run.flight_time,
            "energy_j": run.energy,
            "photos": len(run.session.photos),
            "spr": [
                {"index": w.index, "spr": w.spr, "speed": w.speed, "energy": w.energy}
                for w in run.windows
            ],
            "efficiency": [
                {
                    "start": s.start,
                    "stop": s.stop,
                    "label": s.label,
                    "shades": list(s.window_shades),
                }
                for s in run.efficiency
            ],
        },
    )
    if aborted:
        session.emit("system", "aborted", {})
        session.state = "aborted"
    else:
        session.state = "idle"


def _enter_executing(session: Session, kind: str) -> None:
    if kind == "decision":
        session.state = "executing"


def _phrasing_of(text: str, session: Session) -> str:
    # explicit when the verb table can parse it; implicit otherwise
    from .nlu import parse_instruction

    try:
        parse_instruction(text, session.world)
        return "explicit"
    except NluError:
        return "implicit"


def create_app(config: GatewayConfig | None = None) -> FastAPI:
    config = config or GatewayConfig()
    app = FastAPI(title="dronelang gateway")
    sessions: dict[str, Session] = {}

    def _session(sid: str) -> Session:
        if sid not in sessions:
            raise HTTPException(404, "unknown session")
        return sessions[sid]

    @app.get("/healthz")
    def healthz():
        return {"ok": True}

    @app.get("/worlds")
    def worlds():
        return {"worlds": bundled_world_ids()}

    @app.post("/sessions", status_code=201)
    def open_session(payload: OpenPayload):
        if payload.world not in bundled_world_ids():
            raise HTTPException(404, f"unknown world {payload.world!r}")
        if payload.backend not in config.backends:
            raise HTTPException(400, f"unknown backend {payload.backend!r}")
        if payload.prompt_style not in ("RP", "CP", "EIP"):
            raise HTTPException(400, f"unknown prompt style {payload.prompt_style!r}")
        sid = uuid.uuid4().hex[:12]
        session = Session(sid, payload.world, payload.prompt_style, payload.backend, config)
        sessions[sid] = session
        from .sim import render_scene

        session.emit("system", "system", {"scene": render_scene(session.world)})
        return session.snapshot()

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        session = _session(sid)
        return {**session.snapshot(), "transcript": session.visible_events()}

    @app.post("/sessions/{sid}/utterances", status_code=202)
    def submit_utterance(sid: str, payload: UtterancePayload):
        session = _session(sid)
        text = payload.text.strip()
        if session.state == "closed":
            raise HTTPException(410, "session closed")
        if text in ("!quit", "!exit"):
            session.emit("system", "closed", {})
            session.state = "closed"
            return {"accepted": True, "closed": True}
        if text == "!clear":
            session.clear_from = len(session.events)
            session.emit("system", "clear", {})
            return {"accepted": True, "cleared": True}
        if session.state in ("planning", "executing"):
            raise HTTPException(409, "session busy")
        if not text:
            raise HTTPException(422, "empty utterance")
        session.abort_requested.clear()
        session.state = "planning"   # set before 202 so busy checks never race
        session.emit("user", "user", {"text": text})
        worker = threading.Thread(
            target=_run_utterance, args=(session, text), daemon=True
        )
        worker.start()
        return {"accepted": True}

    @app.post("/sessions/{sid}/abort")
    def abort(sid: str):
        session = _session(sid)
        if session.state not in ("planning", "executing"):
            raise HTTPException(409, "session is not executing")
        session.abort_requested.set()
        return {"accepted": True}

    @app.get("/sessions/{sid}/events")
    def events(sid: str, since: int = 0, follow: bool = False):
        session = _session(sid)

        def stream():
            cursor = max(since, 0)
            while True:
                with session.cv:
                    while follow and cursor >= len(session.events) and session.state not in (
                        "closed",
                    ):
                        session.cv.wait(timeout=0.5)
                    batch = session.events[cursor:]
                for event in batch:
                    yield f"data: {json.dumps(event, sort_keys=True)}\n\n"
                cursor += len(batch)
                if not follow:
                    return
                if session.state == "closed" and cursor >= len(session.events):
                    return

        return StreamingResponse(stream(), media_type="text/event-stream")

    app.state.sessions = sessions
    app.state.config = config
    return app
