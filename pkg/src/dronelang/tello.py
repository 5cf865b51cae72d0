"""Text-datagram adapter for Tello-class hardware.

A pure codec plus stop-and-wait transport: commands encode to short
lowercase payloads (meters become whole centimeters), each datagram waits
for its acknowledgement before the next is sent, and any abnormal end of a
chain triggers exactly one failsafe landing. Telemetry datagrams on the
state port parse into key:value frames with unknown keys preserved.
"""

from __future__ import annotations

import queue
import socket
import threading
import time
from dataclasses import dataclass, field

from .commands import Command, MachineLanguageVector, MlvConstraints, validate_mlv
from .sim import SegmentResult

MAX_PAYLOAD_BYTES = 64
MIN_DISTANCE_CM = 20
MAX_DISTANCE_CM = 500
MIN_ANGLE = 1
MAX_ANGLE = 360


class LinkError(RuntimeError):
    pass


class UnrepresentableCommand(ValueError):
    pass


class HandshakeFailed(LinkError):
    pass


class LinkTimeout(LinkError):
    pass


@dataclass(frozen=True)
class CommandFrame:
    payload: str

    def __post_init__(self):
        if len(self.payload.encode()) > MAX_PAYLOAD_BYTES:
            raise UnrepresentableCommand("payload exceeds 64 bytes")

    @property
    def data(self) -> bytes:
        return self.payload.encode()


def encode(cmd: Command) -> CommandFrame:
    """Encode one command into its vendor text payload.

    Representable: takeoff, land, hover (maps to `stop` with a local
    dwell), moves of 0.2..5 m and whole-degree rotations. Longer moves are
    the executor's job to pre-split; goto/capture/tool never reach the
    link.
    """
    k = cmd.kind
    if k == "takeoff":
        return CommandFrame("takeoff")
    if k == "land":
        return CommandFrame("land")
    if k == "hover":
        return CommandFrame("stop")
    if k == "move":
        cm = int(round(cmd.distance * 100.0))
        if not MIN_DISTANCE_CM <= cm <= MAX_DISTANCE_CM:
            raise UnrepresentableCommand(
                f"move of {cmd.distance} m is outside {MIN_DISTANCE_CM}-"
                f"{MAX_DISTANCE_CM} cm"
            )
        verb = {"forward": "forward", "back": "back", "left": "left",
                "right": "right", "up": "up", "down": "down"}[cmd.direction]
        return CommandFrame(f"{verb} {cm}")
    if k == "rotate":
        degrees = int(round(abs(cmd.degrees)))
        if not MIN_ANGLE <= degrees <= MAX_ANGLE:
            raise UnrepresentableCommand(f"rotation of {cmd.degrees} deg unsupported")
        return CommandFrame(f"{'ccw' if cmd.degrees > 0 else 'cw'} {degrees}")
    raise UnrepresentableCommand(f"{k} has no hardware payload")


@dataclass(frozen=True)
class Response:
    ok: bool
    text: str


def decode_response(data: bytes) -> Response:
    """`ok` is success; anything else is an error carried verbatim."""
    text = data.decode(errors="replace").strip()
    return Response(text == "ok", text)


@dataclass(frozen=True)
class StateFrame:
    fields: tuple[tuple[str, str], ...]

    def get(self, key: str, default=None):
        for k, v in self.fields:
            if k == key:
                return v
        return default


def decode_state(data: bytes) -> StateFrame:
    text = data.decode(errors="replace").strip().rstrip(";")
    fields = []
    for item in text.split(";"):
        if not item:
            continue
        key, sep, value = item.partition(":")
        fields.append((key, value if sep else ""))
    return StateFrame(tuple(fields))


@dataclass(frozen=True)
class LinkConfig:
    host: str = "192.168.10.1"
    command_port: int = 8889
    state_port: int = 8890
    ack_timeout: float = 7.0
    max_chain: int = 7
    local_port: int = 0        # 0 = ephemeral

    def __post_init__(self):
        if self.ack_timeout <= 0 or self.max_chain < 1:
            raise ValueError("timeout must be > 0 and chain bound >= 1")


class TelloLink:
    """One exclusive stop-and-wait session over the command socket.

    Implements the command-sink contract: validated MLVs only, at most one
    unacknowledged datagram in flight, and exactly one failsafe landing on
    any abnormal termination.
    """

    def __init__(self, config: LinkConfig = LinkConfig()):
        self.config = config
        self.sock: socket.socket | None = None
        self.failsafe_count = 0
        self._open = False

    def open(self) -> None:
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sock.bind(("", self.config.local_port))
        self.sock.settimeout(self.config.ack_timeout)
        response = self._exchange("command")
        if response is None or not response.ok:
            self.close()
            raise HandshakeFailed(
                "no acknowledgement for the `command` handshake"
                if response is None
                else f"handshake rejected: {response.text}"
            )
        self._open = True

    def close(self) -> None:
        if self.sock is not None:
            self.sock.close()
            self.sock = None
        self._open = False

    def _exchange(self, payload: str) -> Response | None:
        """Send one datagram and wait for its acknowledgement (or None)."""
        assert self.sock is not None
        self.sock.sendto(payload.encode(), (self.config.host, self.config.command_port))
        try:
            data, _ = self.sock.recvfrom(1024)
        except socket.timeout:
            return None
        return decode_response(data)

    def _failsafe_land(self) -> None:
        # best effort, exactly once per abnormal run; no ack required
        self.failsafe_count += 1
        assert self.sock is not None
        self.sock.sendto(b"land", (self.config.host, self.config.command_port))

    def send_mlv(self, vec: MachineLanguageVector) -> list[tuple[str, str]]:
        """Dispatch a validated MLV stop-and-wait; returns per-command outcomes.

        Outcomes are `ok`, `timeout` or `error: <verbatim text>`. On the
        first failure the remaining commands are aborted and one landing
        command is issued.
        """
        if not self._open:
            raise LinkError("link session not open")
        constraints = MlvConstraints(1, self.config.max_chain)
        verdict = validate_mlv(vec, constraints)
        if not verdict.accepted:
            raise ValueError(f"refusing unvalidated MLV: {verdict.rule}")
        outcomes: list[tuple[str, str]] = []
        for cmd in vec.commands:
            frame = encode(cmd)
            response = self._exchange(frame.payload)
            if response is None:
                outcomes.append((cmd.render(), "timeout"))
                self._failsafe_land()
                return outcomes
            if not response.ok:
                outcomes.append((cmd.render(), f"error: {response.text}"))
                self._failsafe_land()
                return outcomes
            outcomes.append((cmd.render(), "ok"))
            if cmd.kind == "hover":
                time.sleep(cmd.seconds)   # `stop` hovers; enforce the dwell here
        return outcomes

    # command-sink contract
    def accept_segment(self, vec: MachineLanguageVector) -> SegmentResult:
        outcomes = self.send_mlv(vec)
        ok = len(outcomes) == vec.length and all(o == "ok" for _, o in outcomes)
        cause = None if ok else outcomes[-1][1]
        return SegmentResult(outcomes, ok, cause)


def start_state_listener(
    config: LinkConfig = LinkConfig(), frames: queue.Queue | None = None
) -> tuple[queue.Queue, "threading.Event", threading.Thread]:
    """Listen for periodic state datagrams; frames arrive on the queue.

    Returns (queue, stop event, thread); set the event and send any
    datagram (or wait out the poll timeout) to stop.
    """
    out: queue.Queue = frames if frames is not None else queue.Queue()
    stop = threading.Event()

    def _run():
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind(("", config.state_port))
        sock.settimeout(0.2)
        try:
            while not stop.is_set():
                try:
                    data, _ = sock.recvfrom(2048)
                except socket.timeout:
                    continue
                out.put(decode_state(data))
        finally:
            sock.close()

    thread = threading.Thread(target=_run, daemon=True)
    thread.start()
    return out, stop, thread
