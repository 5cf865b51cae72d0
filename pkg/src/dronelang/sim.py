"""Kinematic quadrotor simulator and the indoor/outdoor world model.

Worlds are 50x50x50 m boxes holding named rooms, obstacle boxes, danger
zones, monitoring points, photo targets and route waypoints, loaded from a
line-oriented text format (docs/file_formats.md). Flight is kinematic at a
fixed cruise speed: each command integrates in closed form, positions are
sampled every dt seconds, collisions are detected per sample against closed
boxes, and a four-motor mixer records normalized motor levels for the
energy model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .commands import (
    Command,
    MachineLanguageVector,
    WORKSPACE_SIZE,
)


class WorldError(ValueError):
    pass


class MalformedDocument(WorldError):
    pass


class GeometryOutOfBounds(WorldError):
    pass


class DuplicateRoomName(WorldError):
    pass


class UnknownTarget(KeyError):
    pass


class SimStateError(RuntimeError):
    """Command issued against an incompatible flight state."""


class NotAirborne(SimStateError):
    pass


@dataclass(frozen=True)
class Box:
    name: str
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise MalformedDocument(f"box {self.name!r} has lo > hi")

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.lo) + np.asarray(self.hi)) / 2.0

    def contains(self, point) -> bool:
        # closed-box convention: a point exactly on a face is inside
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.lo) and np.all(p <= self.hi))

    def contains_many(self, points: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.all(points >= lo, axis=1) & np.all(points <= hi, axis=1)


@dataclass
class WorldModel:
    """Static scene: geometry plus the named points tasks talk about.

    `obstacles` are structural (walls, sheds) and are exported to scene
    knowledge; `clutter` boxes collide and occupy the avoidance grid but do
    not appear in prompts, standing in for obstacles only the live sensing
    tool can react to.
    """

    name: str
    rooms: dict[str, Box] = field(default_factory=dict)
    obstacles: list[Box] = field(default_factory=list)
    clutter: list[Box] = field(default_factory=list)
    dangers: list[Box] = field(default_factory=list)
    monitor_points: dict[str, np.ndarray] = field(default_factory=dict)
    photo_targets: dict[str, np.ndarray] = field(default_factory=dict)
    waypoints: dict[str, np.ndarray] = field(default_factory=dict)
    start: np.ndarray = field(default_factory=lambda: np.zeros(3))
    start_yaw: float = 0.0

    @property
    def bounds(self) -> Box:
        return Box("bounds", (0.0, 0.0, 0.0), (WORKSPACE_SIZE,) * 3)

    def all_obstacles(self) -> list[Box]:
        return self.obstacles + self.clutter

    def known_names(self) -> dict[str, str]:
        """name -> category for every addressable scene entity."""
        names: dict[str, str] = {}
        for room in self.rooms:
            names[room] = "room"
        for cat, table in (
            ("monitor", self.monitor_points),
            ("photo", self.photo_targets),
            ("waypoint", self.waypoints),
        ):
            for name in table:
                names.setdefault(name, cat)
        names["home"] = "waypoint"
        return names

    def resolve_point(self, name: str, altitude: float = 1.0) -> np.ndarray:
        """Reference position for a named target."""
        if name == "home":
            return np.array([self.start[0], self.start[1], altitude])
        if name in self.monitor_points:
            return np.array(self.monitor_points[name], dtype=float)
        if name in self.photo_targets:
            return np.array(self.photo_targets[name], dtype=float)
        if name in self.waypoints:
            return np.array(self.waypoints[name], dtype=float)
        if name in self.rooms:
            c = self.rooms[name].center
            return np.array([c[0], c[1], altitude])
        raise UnknownTarget(name)

    def room_of(self, point) -> str | None:
        for name, box in self.rooms.items():
            if box.contains(point):
                return name
        return None


def _check_inside_bounds(box: Box):
    if any(c < 0.0 for c in box.lo) or any(c > WORKSPACE_SIZE for c in box.hi):
        raise GeometryOutOfBounds(f"{box.name!r} extends past the workspace")


def _check_point(name: str, point):
    if any(c < 0.0 or c > WORKSPACE_SIZE for c in point):
        raise GeometryOutOfBounds(f"point {name!r} lies outside the workspace")


def load_world(text: str) -> WorldModel:
    """Parse the world description format (one declaration per line)."""
    world = WorldModel(name="unnamed")
    seen_world_line = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        verb, args = tokens[0], tokens[1:]

        def nums(values, expect):
            if len(values) != expect:
                raise MalformedDocument(
                    f"line {lineno}: {verb} expects {expect} numbers"
                )
            try:
                return tuple(float(v) for v in values)
            except ValueError:
                raise MalformedDocument(f"line {lineno}: bad number in {raw!r}") from None

        if verb == "world":
            if len(args) != 1:
                raise MalformedDocument(f"line {lineno}: world expects a name")
            world.name = args[0]
            seen_world_line = True
        elif verb == "start":
            if len(args) == 5 and args[3] == "yaw":
                x, y, z = nums(args[:3], 3)
                world.start_yaw = float(args[4])
            else:
                x, y, z = nums(args, 3)
            world.start = np.array([x, y, z])
            _check_point("start", world.start)
        elif verb in ("room", "wall", "obstacle", "clutter", "danger"):
            if len(args) != 7:
                raise MalformedDocument(
                    f"line {lineno}: {verb} expects a name and 6 coordinates"
                )
            name = args[0]
            coords = nums(args[1:], 6)
            box = Box(name, coords[:3], coords[3:])
            _check_inside_bounds(box)
            if verb == "room":
                if name in world.rooms:
                    raise DuplicateRoomName(name)
                world.rooms[name] = box
            elif verb in ("wall", "obstacle"):
                world.obstacles.append(box)
            elif verb == "clutter":
                world.clutter.append(box)
            else:
                world.dangers.append(box)
        elif verb in ("monitor", "photo", "waypoint"):
            if len(args) != 4:
                raise MalformedDocument(
                    f"line {lineno}: {verb} expects a name and 3 coordinates"
                )
            name = args[0]
            point = np.array(nums(args[1:], 3))
            _check_point(name, point)
            table = {
                "monitor": world.monitor_points,
                "photo": world.photo_targets,
                "waypoint": world.waypoints,
            }[verb]
            table[name] = point
        else:
            raise MalformedDocument(f"line {lineno}: unknown declaration {verb!r}")
    if not seen_world_line and text.strip():
        raise MalformedDocument("missing 'world <name>' declaration")
    return world


def render_scene(world: WorldModel) -> str:
    """Serialize the static scene back to the world file format.

    This is the scene-knowledge text embedded in prompts: rooms, structural
    obstacles, dangers and named points. Clutter is deliberately excluded;
    only the live avoidance tool can see it.
    """
    lines = [f"world {world.name}"]
    start = world.start
    lines.append(
        f"start {_fmt_m(start[0])} {_fmt_m(start[1])} {_fmt_m(start[2])} "
        f"yaw {_fmt_m(world.start_yaw)}"
    )
    for name, box in sorted(world.rooms.items()):
        lines.append(_box_line("room", name, box))
    for box in world.obstacles:
        lines.append(_box_line("wall", box.name, box))
    for box in world.dangers:
        lines.append(_box_line("danger", box.name, box))
    for verb, table in (
        ("monitor", world.monitor_points),
        ("photo", world.photo_targets),
        ("waypoint", world.waypoints),
    ):
        for name, point in sorted(table.items()):
            coords = " ".join(_fmt_m(c) for c in point)
            lines.append(f"{verb} {name} {coords}")
    return "\n".join(lines) + "\n"


def _fmt_m(value: float) -> str:
    value = float(value)
    return str(int(value)) if value == int(value) else repr(value)


def _box_line(verb: str, name: str, box: Box) -> str:
    coords = " ".join(_fmt_m(c) for c in (*box.lo, *box.hi))
    return f"{verb} {name} {coords}"


def load_world_file(path) -> WorldModel:
    with open(path, encoding="utf-8") as fh:
        return load_world(fh.read())


def bundled_world(world_id: str) -> WorldModel:
    ref = resources.files("dronelang.data.worlds").joinpath(f"{world_id}.world")
    try:
        text = ref.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise WorldError(f"no bundled world {world_id!r}") from None
    return load_world(text)


def bundled_world_ids() -> list[str]:
    root = resources.files("dronelang.data.worlds")
    return sorted(
        entry.name[: -len(".world")]
        for entry in root.iterdir()
        if entry.name.endswith(".world")
    )


# -- flight ------------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.02
    cruise_speed: float = 1.0     # m/s, fixed for every translation
    max_speed: float = 2.0
    yaw_rate: float = 90.0        # deg/s
    takeoff_altitude: float = 1.0
    capture_seconds: float = 0.5
    hover_level: float = 0.5      # per-motor level while airborne
    boost_level: float = 0.1      # extra level, split across motors, in maneuver phases
    phase_seconds: float = 0.5    # nominal accel/decel window per command

    def __post_init__(self):
        if self.dt <= 0 or self.cruise_speed <= 0 or self.cruise_speed > self.max_speed:
            raise ValueError("bad simulator config")


@dataclass(frozen=True)
class UavState:
    position: tuple[float, float, float]
    yaw: float = 0.0
    airborne: bool = False
    clock: float = 0.0

    @property
    def pos(self) -> np.ndarray:
        return np.asarray(self.position, dtype=float)


def initial_state(world: WorldModel) -> UavState:
    return UavState(tuple(float(c) for c in world.start), world.start_yaw, False, 0.0)


def check_collision(position, world: WorldModel) -> bool:
    """True iff the point is inside any obstacle box or outside the bounds."""
    p = np.asarray(position, dtype=float)
    if not world.bounds.contains(p):
        return True
    return any(box.contains(p) for box in world.all_obstacles())


def _collisions_many(points: np.ndarray, world: WorldModel) -> np.ndarray:
    bad = ~world.bounds.contains_many(points)
    for box in world.all_obstacles():
        bad |= box.contains_many(points)
    return bad


def direction_vector(yaw_deg: float, direction: str) -> np.ndarray:
    yaw = math.radians(yaw_deg)
    fwd = np.array([math.cos(yaw), math.sin(yaw), 0.0])
    left = np.array([-math.sin(yaw), math.cos(yaw), 0.0])
    table = {
        "forward": fwd,
        "back": -fwd,
        "left": left,
        "right": -left,
        "up": np.array([0.0, 0.0, 1.0]),
        "down": np.array([0.0, 0.0, -1.0]),
    }
    return table[direction]


def los_clear(a, b, world: WorldModel, step: float = 0.05, margin: float = 0.0) -> bool:
    """Line-of-sight test: no static obstacle between a and b.

    `margin` inflates each obstacle box; routing uses it to reject grazing
    sight lines so flown legs keep real clearance.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    span = float(np.linalg.norm(b - a))
    n = max(2, int(span / step) + 1)
    ts = np.linspace(0.0, 1.0, n)[:, None]
    points = a[None, :] + ts * (b - a)[None, :]
    for box in world.obstacles:
        lo = np.asarray(box.lo) - margin
        hi = np.asarray(box.hi) + margin
        inside = np.all(points >= lo, axis=1) & np.all(points <= hi, axis=1)
        if bool(np.any(inside)):
            return False
    return True


@dataclass(frozen=True)
class CaptureEvent:
    time: float
    position: tuple[float, float, float]
    camera: int


@dataclass
class StepResult:
    state: UavState
    samples: np.ndarray      # (n, 5): t, x, y, z, yaw
    motors: np.ndarray       # (n, 4): normalized levels in [0, 1]
    outcome: str             # "ok" | "failed"
    cause: str | None = None
    photo: CaptureEvent | None = None


def _motor_levels(n: int, duration: float, cfg: SimConfig, profile: str) -> np.ndarray:
    """Mixer: hover baseline plus maneuver increments during motion phases.

    `profile` names the maneuver; the boost is split across the motor pair
    doing the work. Constants are configuration, tuned only so maneuvers
    cost visibly more than steady hover.
    """
    levels = np.full((n, 4), cfg.hover_level)
    if n == 0 or profile == "hover":
        return np.clip(levels, 0.0, 1.0)
    times = (np.arange(n) + 1) * cfg.dt
    window = min(cfg.phase_seconds, duration / 2.0)
    accel = times <= window
    decel = times >= duration - window
    half = cfg.boost_level / 2.0
    quarter = cfg.boost_level / 4.0
    if profile == "horizontal":
        levels[accel, 2] += half
        levels[accel, 3] += half
        levels[decel, 0] += half
        levels[decel, 1] += half
    elif profile == "climb":
        levels += quarter
    elif profile == "descend":
        levels -= quarter
    elif profile == "turn":
        levels[:, 0] += half
        levels[:, 2] += half
    return np.clip(levels, 0.0, 1.0)


def _linear_samples(state: UavState, displacement: np.ndarray, duration: float,
                    cfg: SimConfig, profile: str, yaw_to: float | None = None):
    n = int(round(duration / cfg.dt))
    start = state.pos
    if n == 0:
        samples = np.zeros((0, 5))
        motors = np.zeros((0, 4))
        end_pos = start + displacement
        return samples, motors, end_pos, state.yaw if yaw_to is None else yaw_to
    fractions = (np.arange(n) + 1) / n
    positions = start[None, :] + fractions[:, None] * displacement[None, :]
    times = state.clock + (np.arange(n) + 1) * cfg.dt
    if yaw_to is None:
        yaws = np.full(n, state.yaw)
    else:
        yaws = state.yaw + fractions * _yaw_delta(state.yaw, yaw_to)
    samples = np.column_stack([times, positions, yaws])
    motors = _motor_levels(n, duration, cfg, profile)
    return samples, motors, positions[-1], float(yaws[-1]) % 360.0


def _yaw_delta(a: float, b: float) -> float:
    return (b - a + 180.0) % 360.0 - 180.0


def step(state: UavState, cmd: Command, world: WorldModel,
         cfg: SimConfig = SimConfig()) -> StepResult:
    """Advance the vehicle through one command.

    Raises NotAirborne/SimStateError on flight-state precondition
    violations; a collision is a failed outcome, not an exception, with the
    trajectory truncated at the first penetrating sample.
    """
    k = cmd.kind
    if k == "takeoff":
        if state.airborne:
            raise SimStateError("takeoff while airborne")
        duration = cfg.takeoff_altitude / cfg.cruise_speed
        lifted = replace(state, airborne=True)
        samples, motors, end, yaw = _linear_samples(
            lifted, np.array([0.0, 0.0, cfg.takeoff_altitude]), duration, cfg, "climb"
        )
        new = UavState(tuple(end), yaw, True, state.clock + duration)
        return _collide_or_ok(samples, motors, new, world)
    if k == "hover" and not state.airborne:
        # grounded wait (tail padding after landing): clock advances, motors off
        new = replace(state, clock=state.clock + cmd.seconds)
        return StepResult(new, np.zeros((0, 5)), np.zeros((0, 4)), "ok")
    if not state.airborne:
        raise NotAirborne(f"{k} requires the vehicle to be airborne")

    if k == "land":
        duration = state.pos[2] / cfg.cruise_speed
        samples, motors, end, yaw = _linear_samples(
            state, np.array([0.0, 0.0, -state.pos[2]]), duration, cfg, "descend"
        )
        new = UavState((state.pos[0], state.pos[1], 0.0), yaw, False, state.clock + duration)
        return _collide_or_ok(samples, motors, new, world)
    if k == "hover":
        samples, motors, end, yaw = _linear_samples(
            state, np.zeros(3), cmd.seconds, cfg, "hover"
        )
        new = replace(state, clock=state.clock + cmd.seconds)
        return _collide_or_ok(samples, motors, new, world)
    if k == "capture":
        samples, motors, end, yaw = _linear_samples(
            state, np.zeros(3), cfg.capture_seconds, cfg, "hover"
        )
        new = replace(state, clock=state.clock + cfg.capture_seconds)
        result = _collide_or_ok(samples, motors, new, world)
        if result.outcome == "ok":
            result.photo = CaptureEvent(new.clock, tuple(state.pos), cmd.camera)
        return result
    if k == "move":
        disp = direction_vector(state.yaw, cmd.direction) * cmd.distance
        duration = cmd.distance / cfg.cruise_speed
        profile = {"up": "climb", "down": "descend"}.get(cmd.direction, "horizontal")
        samples, motors, end, yaw = _linear_samples(state, disp, duration, cfg, profile)
        new = UavState(tuple(end), yaw, True, state.clock + duration)
        return _collide_or_ok(samples, motors, new, world)
    if k == "rotate":
        duration = abs(cmd.degrees) / cfg.yaw_rate
        target_yaw = state.yaw + cmd.degrees
        samples, motors, end, yaw = _linear_samples(
            state, np.zeros(3), duration, cfg, "turn", yaw_to=target_yaw
        )
        new = UavState(tuple(state.pos), target_yaw % 360.0, True, state.clock + duration)
        return _collide_or_ok(samples, motors, new, world)
    if k == "goto":
        target = cmd.target
        point = world.resolve_point(target) if isinstance(target, str) else np.asarray(target)
        disp = point - state.pos
        distance = float(np.linalg.norm(disp))
        duration = distance / cfg.cruise_speed
        samples, motors, end, yaw = _linear_samples(state, disp, duration, cfg, "horizontal")
        new = UavState(tuple(point), state.yaw, True, state.clock + duration)
        return _collide_or_ok(samples, motors, new, world)
    if k == "tool":
        raise SimStateError("tool commands must be expanded before simulation")
    raise SimStateError(f"unsupported command kind {k!r}")


def _collide_or_ok(samples, motors, new_state, world) -> StepResult:
    if samples.shape[0]:
        bad = _collisions_many(samples[:, 1:4], world)
        if bool(np.any(bad)):
            first = int(np.argmax(bad))
            cut = samples[: first + 1]
            crash = cut[-1]
            crashed = UavState(
                (float(crash[1]), float(crash[2]), float(crash[3])),
                float(crash[4]) % 360.0,
                True,
                float(crash[0]),
            )
            return StepResult(crashed, cut, motors[: first + 1], "failed", "CollisionDetected")
    return StepResult(new_state, samples, motors, "ok")


def capture_achieved(position, target: str, world: WorldModel) -> bool:
    """Photo-success rule: in the room (or within 2 m) with clear sight."""
    refpoint = world.resolve_point(target)
    p = np.asarray(position, dtype=float)
    near = False
    if target in world.rooms and world.rooms[target].contains(p):
        near = True
    if float(np.linalg.norm(refpoint - p)) <= 2.0:
        near = True
    return near and los_clear(p, refpoint, world)


def capture(state: UavState, target: str, world: WorldModel) -> dict:
    """Evaluate a capture of `target` from the current state."""
    if not state.airborne:
        raise NotAirborne("capture requires the vehicle to be airborne")
    if target not in world.known_names():
        raise UnknownTarget(target)
    return {"target": target, "achieved": capture_achieved(state.pos, target, world)}


def replay_pose(commands, world: WorldModel, cfg: SimConfig = SimConfig(),
                state: UavState | None = None) -> UavState:
    """Closed-form endpoint of a command prefix (no sampling, no collision).

    Used by the executor to predict where the vehicle will be when a tool
    expansion starts. Matches `step` kinematics exactly.
    """
    st = state if state is not None else initial_state(world)
    pos = st.pos.copy()
    yaw = st.yaw
    airborne = st.airborne
    clock = st.clock
    for cmd in commands:
        k = cmd.kind
        if k == "takeoff":
            pos[2] += cfg.takeoff_altitude
            airborne = True
            clock += cfg.takeoff_altitude / cfg.cruise_speed
        elif k == "land":
            clock += pos[2] / cfg.cruise_speed
            pos[2] = 0.0
            airborne = False
        elif k == "hover":
            clock += cmd.seconds
        elif k == "capture":
            clock += cfg.capture_seconds
        elif k == "move":
            pos = pos + direction_vector(yaw, cmd.direction) * cmd.distance
            clock += cmd.distance / cfg.cruise_speed
        elif k == "rotate":
            yaw = (yaw + cmd.degrees) % 360.0
            clock += abs(cmd.degrees) / cfg.yaw_rate
        elif k == "goto":
            point = (
                world.resolve_point(cmd.target)
                if isinstance(cmd.target, str)
                else np.asarray(cmd.target, dtype=float)
            )
            clock += float(np.linalg.norm(point - pos)) / cfg.cruise_speed
            pos = point.copy()
        else:
            raise SimStateError(f"cannot replay command kind {k!r}")
    return UavState(tuple(float(c) for c in pos), yaw, airborne, clock)


@dataclass
class SegmentResult:
    acks: list[tuple[str, str]]   # (command text, "ok" | failure cause)
    ok: bool
    cause: str | None = None


class SimulatorSession:
    """Mutable flight session implementing the command-sink contract.

    One session owns one world instance's vehicle; accept_segment runs an
    MLV command by command, recording trajectory, motor samples and photo
    events, and stops the segment at the first failure.
    """

    def __init__(self, world: WorldModel, cfg: SimConfig = SimConfig()):
        self.world = world
        self.cfg = cfg
        self.state = initial_state(world)
        self._samples: list[np.ndarray] = []
        self._motors: list[np.ndarray] = []
        self.photos: list[CaptureEvent] = []
        self.segments: list[SegmentResult] = []

    def accept_segment(self, vec: MachineLanguageVector) -> SegmentResult:
        acks: list[tuple[str, str]] = []
        for cmd in vec.commands:
            try:
                result = step(self.state, cmd, self.world, self.cfg)
            except SimStateError as exc:
                acks.append((cmd.render(), f"rejected: {exc}"))
                seg = SegmentResult(acks, False, str(exc))
                self.segments.append(seg)
                return seg
            self._samples.append(result.samples)
            self._motors.append(result.motors)
            self.state = result.state
            if result.photo is not None:
                self.photos.append(result.photo)
            if result.outcome != "ok":
                acks.append((cmd.render(), result.cause))
                seg = SegmentResult(acks, False, result.cause)
                self.segments.append(seg)
                return seg
            acks.append((cmd.render(), "ok"))
        seg = SegmentResult(acks, True)
        self.segments.append(seg)
        return seg

    @property
    def flight_time(self) -> float:
        return self.state.clock

    def trajectory(self) -> np.ndarray:
        if not self._samples:
            return np.zeros((0, 5))
        return np.vstack(self._samples)

    def motor_samples(self) -> np.ndarray:
        if not self._motors:
            return np.zeros((0, 4))
        return np.vstack(self._motors)

    def pose(self) -> UavState:
        return self.state

    def export_records(self) -> str:
        """Delimited sample log: t x y z yaw n1 n2 n3 n4 per line."""
        traj = self.trajectory()
        motors = self.motor_samples()
        lines = ["t x y z yaw n1 n2 n3 n4"]
        for row, levels in zip(traj, motors):
            cells = [f"{v:.6f}" for v in row] + [f"{v:.4f}" for v in levels]
            lines.append(" ".join(cells))
        return "\n".join(lines) + "\n"
