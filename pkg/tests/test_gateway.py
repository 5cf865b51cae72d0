"""Session service: event ordering, control tokens, abort, replay."""

import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from dronelang.gateway import GatewayConfig, create_app

SI_TEXT = "Move forward 5 meters and take a picture"


@pytest.fixture()
def client(tmp_path):
    app = create_app(GatewayConfig(transcript_dir=str(tmp_path / "transcripts")))
    with TestClient(app) as c:
        c.transcript_dir = tmp_path / "transcripts"
        yield c


def open_session(client, world="apartment", **kw):
    response = client.post("/sessions", json={"world": world, **kw})
    assert response.status_code == 201, response.text
    return response.json()["id"]


def wait_idle(client, sid, timeout=30.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        state = client.get(f"/sessions/{sid}").json()["state"]
        if state in ("idle", "aborted", "closed"):
            return state
        time.sleep(0.05)
    raise AssertionError("session never settled")


def transcript(client, sid):
    return client.get(f"/sessions/{sid}").json()["transcript"]


def test_open_session_idle_with_system_prompt(client):
    sid = open_session(client)
    body = client.get(f"/sessions/{sid}").json()
    assert body["state"] == "idle"
    kinds = [e["kind"] for e in body["transcript"]]
    assert kinds == ["system"]
    assert "world apartment" in body["transcript"][0]["payload"]["scene"]


def test_unknown_world_rejected(client):
    assert client.post("/sessions", json={"world": "atlantis"}).status_code == 404


def test_unknown_backend_rejected(client):
    response = client.post(
        "/sessions", json={"world": "apartment", "backend": "gpt-12"}
    )
    assert response.status_code == 400


def test_two_sessions_are_independent(client):
    a = open_session(client)
    b = open_session(client)
    client.post(f"/sessions/{a}/utterances", json={"text": SI_TEXT})
    wait_idle(client, a)
    events_a = transcript(client, a)
    events_b = transcript(client, b)
    assert any(e["kind"] == "report" for e in events_a)
    assert all(e["kind"] == "system" for e in events_b)


def test_si_utterance_emits_ordered_events(client):
    sid = open_session(client)
    response = client.post(f"/sessions/{sid}/utterances", json={"text": SI_TEXT})
    assert response.status_code == 202
    assert wait_idle(client, sid) == "idle"
    kinds = [e["kind"] for e in transcript(client, sid)]
    # label precedes plan precedes the first execution event, report last
    assert kinds.index("label") < kinds.index("plan") < kinds.index("segment")
    assert kinds[-1] == "report"
    events = transcript(client, sid)
    label = next(e for e in events if e["kind"] == "label")
    assert label["payload"]["code"] == "SI"
    report = events[-1]
    assert report["payload"]["ok"] is True
    # timestamps monotone
    ts = [e["t"] for e in events]
    assert ts == sorted(ts)


def test_busy_session_rejects_second_utterance(client):
    sid = open_session(client, world="apartment")
    long_text = "go to the kitchen and take a picture, then go to bedroom one and take a picture, then go to bedroom two and take a picture"
    client.post(f"/sessions/{sid}/utterances", json={"text": long_text})
    busy_seen = False
    for _ in range(200):
        response = client.post(f"/sessions/{sid}/utterances", json={"text": SI_TEXT})
        if response.status_code == 409:
            busy_seen = True
            break
        time.sleep(0.005)
    assert busy_seen
    wait_idle(client, sid)


def test_clear_truncates_visible_transcript(client):
    sid = open_session(client)
    client.post(f"/sessions/{sid}/utterances", json={"text": SI_TEXT})
    wait_idle(client, sid)
    assert len(transcript(client, sid)) > 1
    response = client.post(f"/sessions/{sid}/utterances", json={"text": "!clear"})
    assert response.json().get("cleared")
    kinds = [e["kind"] for e in transcript(client, sid)]
    assert kinds == ["clear"]
    assert client.get(f"/sessions/{sid}").json()["state"] == "idle"


def test_quit_closes_session(client):
    sid = open_session(client)
    client.post(f"/sessions/{sid}/utterances", json={"text": "!quit"})
    assert client.get(f"/sessions/{sid}").json()["state"] == "closed"
    response = client.post(f"/sessions/{sid}/utterances", json={"text": SI_TEXT})
    assert response.status_code == 410


def test_abort_when_idle_rejected(client):
    sid = open_session(client)
    assert client.post(f"/sessions/{sid}/abort").status_code == 409


def test_abort_mid_flight_lands_and_marks_aborted(tmp_path):
    app = create_app(
        GatewayConfig(
            transcript_dir=str(tmp_path / "transcripts"), realtime_factor=0.02
        )
    )
    with TestClient(app) as client:
        _abort_mid_flight(client)


def _abort_mid_flight(client):
    sid = open_session(client)
    text = (
        "go to the kitchen and take a picture, then go to bedroom one and "
        "take a picture, then go to bedroom two and take a picture"
    )
    client.post(f"/sessions/{sid}/utterances", json={"text": text})
    # abort once the first segment has flown, so this is a mid-flight abort
    aborted = False
    for _ in range(800):
        body = client.get(f"/sessions/{sid}").json()
        kinds = [e["kind"] for e in body["transcript"]]
        if "segment" in kinds and body["state"] == "executing":
            response = client.post(f"/sessions/{sid}/abort")
            aborted = response.status_code == 200
            break
        if body["state"] in ("idle", "aborted"):
            break
        time.sleep(0.005)
    assert aborted, "never caught the session mid-flight"
    final = wait_idle(client, sid)
    assert final == "aborted"
    events = transcript(client, sid)
    report = next(e for e in events if e["kind"] == "report")
    assert report["payload"]["aborted"] is True
    # second abort is rejected
    assert client.post(f"/sessions/{sid}/abort").status_code == 409
    # trajectory ends landed: final telemetry sample near z = 0
    telemetry = [e for e in events if e["kind"] == "telemetry"]
    assert telemetry, "no telemetry emitted"
    last = telemetry[-1]["payload"]["samples"][-1]
    assert last["z"] <= 1.0


def test_event_stream_snapshot_mode(client):
    sid = open_session(client)
    client.post(f"/sessions/{sid}/utterances", json={"text": SI_TEXT})
    wait_idle(client, sid)
    with client.stream("GET", f"/sessions/{sid}/events") as response:
        body = "".join(chunk for chunk in response.iter_text())
    events = [json.loads(line[6:]) for line in body.splitlines() if line.startswith("data: ")]
    kinds = [e["kind"] for e in events]
    assert "label" in kinds and "report" in kinds
    assert [e["seq"] for e in events] == sorted(e["seq"] for e in events)


def test_prompts_and_responses_logged_per_session(client):
    sid = open_session(client)
    client.post(f"/sessions/{sid}/utterances", json={"text": SI_TEXT})
    wait_idle(client, sid)
    log = (client.transcript_dir / f"{sid}.prompts.log").read_text()
    assert "--- prompt ---" in log and "--- response ---" in log
    assert "## request" in log     # a planning prompt was captured
    assert "COMMANDS" in log       # a translation response was captured


def test_transcript_replay_reproduces_trajectory(client, tmp_path):
    sid = open_session(client)
    client.post(f"/sessions/{sid}/utterances", json={"text": SI_TEXT})
    wait_idle(client, sid)
    lines = (client.transcript_dir / f"{sid}.jsonl").read_text().splitlines()
    events = [json.loads(ln) for ln in lines]
    segments = [e["payload"]["commands"] for e in events if e["kind"] == "segment"]
    assert segments
    # replay the logged commands on a fresh identical world
    from dronelang.commands import MachineLanguageVector, parse_command
    from dronelang.sim import SimulatorSession, bundled_world

    replay = SimulatorSession(bundled_world("apartment"))
    for segment in segments:
        replay.accept_segment(
            MachineLanguageVector(tuple(parse_command(c) for c in segment))
        )
    telemetry = [
        s
        for e in events
        if e["kind"] == "telemetry"
        for s in e["payload"]["samples"]
    ]
    trajectory = replay.trajectory()
    for sample in telemetry:
        idx = int(round(sample["t"] / 0.02)) - 1
        assert 0 <= idx < trajectory.shape[0]
        row = trajectory[idx]
        assert np.allclose(
            [sample["x"], sample["y"], sample["z"]], row[1:4], atol=1e-3
        )
