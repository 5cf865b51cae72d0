"""Hardware codec golden files and stop-and-wait link behavior."""

import queue
import socket
from importlib import resources

import pytest

from dronelang.commands import (
    MachineLanguageVector,
    hover,
    land,
    mlv,
    move,
    parse_command,
    rotate,
    takeoff,
)
from dronelang.tello import (
    HandshakeFailed,
    LinkConfig,
    TelloLink,
    UnrepresentableCommand,
    decode_response,
    decode_state,
    encode,
    start_state_listener,
)

from .fake_tello import DROP, FakeTello


def golden_pairs():
    text = (
        resources.files("dronelang.data.golden").joinpath("tello_frames.txt").read_text()
    )
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        command, _, payload = line.partition(" -> ")
        yield command, payload


def test_codec_matches_golden_fixtures():
    pairs = list(golden_pairs())
    assert len(pairs) >= 25
    for command, payload in pairs:
        frame = encode(parse_command(command))
        assert frame.payload == payload, command
        assert frame.data == payload.encode()


def test_encode_unit_conversion_oracle():
    # whole centimeters: m -> cm is exactly x100 on the representable range
    for meters in (0.2, 0.37, 1.0, 2.34, 5.0):
        frame = encode(move("forward", meters))
        assert frame.payload == f"forward {round(meters * 100)}"


@pytest.mark.parametrize(
    "cmd",
    [
        move("forward", 6.0),     # 600 cm > 500
        move("forward", 0.1),     # 10 cm < 20
        rotate(0.2),              # rounds below 1 degree
    ],
)
def test_encode_unrepresentable(cmd):
    with pytest.raises(UnrepresentableCommand):
        encode(cmd)


def test_encode_rejects_software_only_commands():
    from dronelang.commands import capture, goto, invoke_tool

    for cmd in (capture(0), goto("kitchen"), invoke_tool("avoidance", target="x")):
        with pytest.raises(UnrepresentableCommand):
            encode(cmd)


def test_decode_response_verbatim():
    assert decode_response(b"ok").ok
    err = decode_response(b"error")
    assert not err.ok and err.text == "error"
    oor = decode_response(b"out of range")
    assert not oor.ok and oor.text == "out of range"


def test_decode_state_preserves_unknown_keys():
    frame = decode_state(b"pitch:0;roll:-2;yaw:57;bat:81;mystery:42;")
    assert frame.get("bat") == "81"
    assert frame.get("mystery") == "42"
    assert [k for k, _ in frame.fields] == ["pitch", "roll", "yaw", "bat", "mystery"]


def link_for(fake: FakeTello) -> TelloLink:
    host, port = fake.address
    link = TelloLink(LinkConfig(host=host, command_port=port, ack_timeout=0.5))
    link.open()
    return link


def test_send_mlv_all_ok():
    with FakeTello() as fake:
        link = link_for(fake)
        outcomes = link.send_mlv(mlv(takeoff(), hover(0.01), land()))
        link.close()
        assert [o for _, o in outcomes] == ["ok", "ok", "ok"]
        assert fake.received == ["command", "takeoff", "stop", "land"]
        assert link.failsafe_count == 0


def _wait_for(predicate, timeout=2.0):
    import time

    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(0.02)
    return predicate()


def test_second_command_timeout_triggers_single_failsafe():
    with FakeTello({"forward 100": DROP}) as fake:
        link = link_for(fake)
        outcomes = link.send_mlv(mlv(takeoff(), move("forward", 1), land()))
        assert outcomes == [("takeoff", "ok"), ("move forward 1", "timeout")]
        assert link.failsafe_count == 1
        # failsafe landing is the last datagram on the wire, exactly once
        assert _wait_for(lambda: "land" in fake.received)
        link.close()
        assert fake.received[-1] == "land"
        assert fake.received.count("land") == 1


def test_error_response_aborts_and_lands():
    with FakeTello({"ccw 90": "out of range"}) as fake:
        link = link_for(fake)
        outcomes = link.send_mlv(mlv(takeoff(), rotate(90), land()))
        assert outcomes[-1] == ("rotate 90", "error: out of range")
        assert link.failsafe_count == 1
        assert _wait_for(lambda: "land" in fake.received)
        link.close()
        assert fake.received.count("land") == 1


def test_unvalidated_mlv_rejected_before_any_send():
    with FakeTello() as fake:
        link = link_for(fake)
        too_long = MachineLanguageVector(tuple(hover(0.01) for _ in range(8)))
        with pytest.raises(ValueError):
            link.send_mlv(too_long)
        link.close()
        assert fake.received == ["command"]   # nothing after the handshake


def test_stop_and_wait_one_in_flight():
    # ordering proof: each payload only appears after the previous ack
    with FakeTello() as fake:
        link = link_for(fake)
        link.send_mlv(mlv(move("forward", 1), move("forward", 2), move("forward", 3)))
        link.close()
        assert fake.received == [
            "command", "forward 100", "forward 200", "forward 300",
        ]


def test_handshake_failure():
    with FakeTello({"command": DROP}) as fake:
        host, port = fake.address
        link = TelloLink(LinkConfig(host=host, command_port=port, ack_timeout=0.2))
        with pytest.raises(HandshakeFailed):
            link.open()


def test_accept_segment_sink_contract():
    with FakeTello() as fake:
        link = link_for(fake)
        result = link.accept_segment(mlv(takeoff(), hover(0.01), land()))
        link.close()
        assert result.ok and result.cause is None


def test_state_listener_delivers_frames():
    # reserve then release a port for the listener to bind
    probe = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]
    probe.close()
    frames, stop, thread = start_state_listener(LinkConfig(state_port=port))
    sender = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    try:
        frame = None
        for _ in range(20):   # resend until the listener thread is bound
            sender.sendto(b"bat:77;h:120;", ("127.0.0.1", port))
            try:
                frame = frames.get(timeout=0.2)
                break
            except queue.Empty:
                continue
        assert frame is not None and frame.get("bat") == "77"
    finally:
        stop.set()
        thread.join(timeout=2.0)
        sender.close()
