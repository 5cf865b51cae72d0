"""Atomic UAV commands and bounded command vectors.

A flight is dispatched as machine-language vectors (MLVs): ordered runs of
atomic commands whose length stays inside [l_min, l_max] so a single run
never exceeds the vehicle's buffer, link or failsafe limits. This module
owns the canonical one-command-per-line text grammar (see
docs/command_grammar.md), MLV validation and the greedy segmentation that
splits long command lists into dispatchable runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

WORKSPACE_SIZE = 50.0
MAX_MOVE_METERS = 50.0
MOVE_DIRECTIONS = ("forward", "back", "left", "right", "up", "down")

DEFAULT_L_MIN = 3
DEFAULT_L_MAX = 7


class CommandError(ValueError):
    """Base class for grammar violations."""


class UnknownVerb(CommandError):
    pass


class BadParameter(CommandError):
    pass


class MalformedSyntax(CommandError):
    pass


class EmptyInput(ValueError):
    pass


def _fmt(value: float) -> str:
    # canonical decimal rendering: no trailing ".0" on whole numbers
    if float(value) == int(value):
        return str(int(value))
    return repr(float(value))


def _is_name(token: str) -> bool:
    return (
        bool(token)
        and token[0].isalpha()
        and all(ch.isalnum() or ch == "_" for ch in token)
        and token.islower()
    )


@dataclass(frozen=True)
class Command:
    """One atomic UAV action.

    Exactly the fields relevant to `kind` are set; the rest stay None.
    Instances are immutable and hashable, so plans and MLVs can be shared
    freely across threads.
    """

    kind: str
    direction: str | None = None
    distance: float | None = None
    seconds: float | None = None
    degrees: float | None = None
    camera: int | None = None
    target: str | tuple[float, float, float] | None = None
    tool: str | None = None
    tool_args: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        violation = command_violation(self)
        if violation is not None:
            raise BadParameter(violation)

    def render(self) -> str:
        """Canonical text form (grammar round-trip anchor)."""
        k = self.kind
        if k in ("takeoff", "land"):
            return k
        if k == "hover":
            return f"hover {_fmt(self.seconds)}"
        if k == "move":
            return f"move {self.direction} {_fmt(self.distance)}"
        if k == "rotate":
            return f"rotate {_fmt(self.degrees)}"
        if k == "capture":
            return f"capture {self.camera}"
        if k == "goto":
            if isinstance(self.target, str):
                return f"goto {self.target}"
            x, y, z = self.target
            return f"goto {_fmt(x)} {_fmt(y)} {_fmt(z)}"
        if k == "tool":
            parts = [f"tool {self.tool}"]
            parts += [f"{key}={value}" for key, value in self.tool_args]
            return " ".join(parts)
        raise AssertionError(f"unrenderable kind {k!r}")


def command_violation(cmd: Command) -> str | None:
    """Return the first violated per-command rule, or None when valid.

    Split out from the constructor so externally deserialized commands can
    be re-checked by validate_mlv.
    """
    k = cmd.kind
    if k in ("takeoff", "land"):
        return None
    if k == "hover":
        if cmd.seconds is None or not cmd.seconds > 0:
            return "hover duration must be > 0 s"
        return None
    if k == "move":
        if cmd.direction not in MOVE_DIRECTIONS:
            return f"move direction must be one of {MOVE_DIRECTIONS}"
        if cmd.distance is None or not 0 < cmd.distance <= MAX_MOVE_METERS:
            return f"move distance must be in (0, {MAX_MOVE_METERS}] m"
        return None
    if k == "rotate":
        if cmd.degrees is None or not -360.0 <= cmd.degrees <= 360.0:
            return "rotate degrees must be in [-360, 360]"
        return None
    if k == "capture":
        if cmd.camera is None or cmd.camera < 0:
            return "capture camera id must be >= 0"
        return None
    if k == "goto":
        if isinstance(cmd.target, str):
            if not _is_name(cmd.target):
                return "goto waypoint id must be a lowercase name"
            return None
        if isinstance(cmd.target, tuple) and len(cmd.target) == 3:
            if all(0.0 <= c <= WORKSPACE_SIZE for c in cmd.target):
                return None
            return f"goto point must lie inside the {WORKSPACE_SIZE:.0f} m workspace"
        return "goto needs a waypoint id or x y z point"
    if k == "tool":
        if not cmd.tool or not _is_name(cmd.tool):
            return "tool name must be a lowercase identifier"
        for key, value in cmd.tool_args:
            if not _is_name(key):
                return f"tool argument key {key!r} must be a lowercase identifier"
            if not value or any(ch.isspace() for ch in value):
                return f"tool argument {key!r} must be a non-empty token"
        return None
    return f"unknown command kind {k!r}"


# -- factories -------------------------------------------------------------

def takeoff() -> Command:
    return Command("takeoff")


def land() -> Command:
    return Command("land")


def hover(seconds: float) -> Command:
    return Command("hover", seconds=float(seconds))


def move(direction: str, meters: float) -> Command:
    return Command("move", direction=direction, distance=float(meters))


def rotate(degrees: float) -> Command:
    return Command("rotate", degrees=float(degrees))


def capture(camera: int = 0) -> Command:
    return Command("capture", camera=int(camera))


def goto(target) -> Command:
    if isinstance(target, str):
        return Command("goto", target=target)
    x, y, z = target
    return Command("goto", target=(float(x), float(y), float(z)))


def invoke_tool(name: str, **args: str) -> Command:
    pairs = tuple(sorted((k, str(v)) for k, v in args.items()))
    return Command("tool", tool=name, tool_args=pairs)


# -- parsing ---------------------------------------------------------------

def _num(token: str, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise MalformedSyntax(f"{what} must be a decimal number, got {token!r}") from None


def parse_command(text: str) -> Command:
    """Parse one canonical command line.

    Raises UnknownVerb for an unrecognized verb, MalformedSyntax for arity
    or number-format problems, BadParameter for out-of-range values.
    """
    tokens = text.strip().split()
    if not tokens:
        raise MalformedSyntax("empty command line")
    verb, args = tokens[0], tokens[1:]

    if verb in ("takeoff", "land"):
        if args:
            raise MalformedSyntax(f"{verb} takes no parameters")
        return Command(verb)
    if verb == "hover":
        if len(args) != 1:
            raise MalformedSyntax("hover takes exactly one duration")
        return hover(_num(args[0], "hover duration"))
    if verb == "move":
        if len(args) != 2:
            raise MalformedSyntax("move takes a direction and a distance")
        return move(args[0], _num(args[1], "move distance"))
    if verb == "rotate":
        if len(args) != 1:
            raise MalformedSyntax("rotate takes exactly one angle")
        return rotate(_num(args[0], "rotate angle"))
    if verb == "capture":
        if len(args) > 1:
            raise MalformedSyntax("capture takes at most a camera id")
        cam = 0
        if args:
            if not args[0].isdigit():
                raise MalformedSyntax("camera id must be a non-negative integer")
            cam = int(args[0])
        return capture(cam)
    if verb == "goto":
        if len(args) == 1:
            if not _is_name(args[0]):
                raise MalformedSyntax(f"bad waypoint id {args[0]!r}")
            return goto(args[0])
        if len(args) == 3:
            return goto(tuple(_num(a, "goto coordinate") for a in args))
        raise MalformedSyntax("goto takes a waypoint id or x y z")
    if verb == "tool":
        if not args:
            raise MalformedSyntax("tool takes a tool name")
        kwargs = {}
        for item in args[1:]:
            key, sep, value = item.partition("=")
            if not sep:
                raise MalformedSyntax(f"tool argument {item!r} must be key=value")
            kwargs[key] = value
        return invoke_tool(args[0], **kwargs)
    raise UnknownVerb(f"unknown verb {verb!r}")


# -- machine language vectors ----------------------------------------------

@dataclass(frozen=True)
class MlvConstraints:
    """Dispatch length bounds; defaults follow the vehicle/link limits."""

    l_min: int = DEFAULT_L_MIN
    l_max: int = DEFAULT_L_MAX

    def __post_init__(self):
        if not 1 <= self.l_min <= self.l_max:
            raise ValueError("constraints need 1 <= l_min <= l_max")


@dataclass(frozen=True)
class MachineLanguageVector:
    commands: tuple[Command, ...]

    @property
    def length(self) -> int:
        return len(self.commands)

    def to_text(self) -> str:
        return "\n".join(cmd.render() for cmd in self.commands)

    @classmethod
    def from_text(cls, block: str) -> "MachineLanguageVector":
        lines = [ln for ln in (raw.strip() for raw in block.splitlines()) if ln]
        return cls(tuple(parse_command(ln) for ln in lines))

    def to_record(self) -> dict:
        return {"length": self.length, "commands": [c.render() for c in self.commands]}

    @classmethod
    def from_record(cls, record: dict) -> "MachineLanguageVector":
        return cls(tuple(parse_command(line) for line in record["commands"]))


def mlv(*cmds: Command) -> MachineLanguageVector:
    return MachineLanguageVector(tuple(cmds))


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    rule: str | None = None

    def __bool__(self) -> bool:
        return self.accepted


def validate_mlv(vec: MachineLanguageVector, c: MlvConstraints = MlvConstraints()) -> Verdict:
    """Accept iff the length is within bounds and every command is valid.

    Rejection is a scored outcome (the run counts as failed), not an
    exception, so the verdict carries the first violated rule instead of
    raising.
    """
    if vec.length < c.l_min:
        return Verdict(False, "TooShort")
    if vec.length > c.l_max:
        return Verdict(False, "TooLong")
    for i, cmd in enumerate(vec.commands):
        violation = command_violation(cmd)
        if violation is not None:
            return Verdict(False, f"BadCommand[{i}]: {violation}")
    return Verdict(True)


PAD_COMMAND = hover(1.0)


def segment_plan(
    commands, c: MlvConstraints = MlvConstraints()
) -> list[MachineLanguageVector]:
    """Split a command list into dispatchable MLVs.

    Greedy fill to l_max; a final segment shorter than l_min is padded with
    1 s hovers so every emitted segment validates. Stripping the trailing
    pads and concatenating recovers the input exactly.
    """
    commands = tuple(commands)
    if not commands:
        raise EmptyInput("cannot segment an empty command list")
    segments = []
    for lo in range(0, len(commands), c.l_max):
        chunk = list(commands[lo : lo + c.l_max])
        while len(chunk) < c.l_min:
            chunk.append(PAD_COMMAND)
        segments.append(MachineLanguageVector(tuple(chunk)))
    return segments


def strip_padding(
    segments: list[MachineLanguageVector], original_length: int
) -> tuple[Command, ...]:
    """Undo segment_plan: concatenate and drop the trailing pad hovers."""
    flat = [cmd for seg in segments for cmd in seg.commands]
    pads = len(flat) - original_length
    for cmd in flat[original_length:]:
        if cmd != PAD_COMMAND:
            raise ValueError("trailing commands are not padding hovers")
    if pads < 0:
        raise ValueError("segments shorter than the original list")
    return tuple(flat[:original_length])
