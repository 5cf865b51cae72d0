"""Execution agent: tool dispatch decisions, translation and flight runs.

Independent tasks lower straight to commands; tool-assisted tasks bind the
plan's avoidance steps to registered tools, whose command output is
spliced into one uniform stream before segmentation, so energy and
success accounting see a single flight. Execution is fail-stop: the first
failed segment ends the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .avoidance import InvalidEndpoint, OccupancyGrid, Unreachable, plan_path, to_commands
from .classify import KnowledgeBase
from .commands import (
    Command,
    CommandError,
    MlvConstraints,
    goto as goto_cmd,
    land,
    parse_command,
    segment_plan,
    takeoff,
    validate_mlv,
)
from .planning import (
    EXECUTOR_ROLE,
    UnparseablePlan,
    render_plan_text,
)
from .sim import SimConfig, UavState, WorldModel, render_scene, replay_pose
from .tasks import INDEPENDENT, Plan, TaskLabel


class ExecutionError(RuntimeError):
    pass


class NoToolForKeyword(ExecutionError):
    pass


class UnparseableOutput(ExecutionError):
    pass


class UnresolvedStep(ExecutionError):
    pass


class ToolFailure(ExecutionError):
    pass


class SinkUnavailable(ExecutionError):
    pass


# -- tools ---------------------------------------------------------------------

@dataclass(frozen=True)
class ToolSpec:
    name: str
    capabilities: frozenset[str]     # keywords this tool serves
    arg_schema: tuple[str, ...]
    run: object                      # callable(world, state, args) -> list[Command]


@dataclass
class ToolRegistry:
    tools: dict[str, ToolSpec] = field(default_factory=dict)

    def register(self, spec: ToolSpec) -> None:
        if spec.name in self.tools:
            raise ValueError(f"duplicate tool {spec.name!r}")
        for other in self.tools.values():
            overlap = other.capabilities & spec.capabilities
            if overlap:
                raise ValueError(f"capability keywords {sorted(overlap)} already served")
        self.tools[spec.name] = spec

    def get(self, name: str) -> ToolSpec:
        if name not in self.tools:
            raise NoToolForKeyword(f"no tool named {name!r}")
        return self.tools[name]

    def for_keyword(self, keyword: str) -> ToolSpec | None:
        for spec in self.tools.values():
            if keyword in spec.capabilities:
                return spec
        return None


def _grid_for(world: WorldModel) -> OccupancyGrid:
    grid = getattr(world, "_occupancy_cache", None)
    if grid is None:
        grid = OccupancyGrid.from_world(world)
        world._occupancy_cache = grid
    return grid


def _avoidance_run(world: WorldModel, state: UavState, args: dict) -> list[Command]:
    """Live path planning on the full occupancy grid (clutter included)."""
    raw = args.get("target")
    if raw is None:
        raise ToolFailure("avoidance tool needs a target argument")
    if raw.startswith("point:"):
        goal = tuple(float(v) for v in raw[len("point:") :].split(","))
    else:
        goal = tuple(world.resolve_point(raw))
    grid = _grid_for(world)
    try:
        path = plan_path(grid, state.pos, goal)
    except Unreachable as exc:
        raise ToolFailure(f"no collision-free path to {raw!r}") from exc
    except InvalidEndpoint as exc:
        raise ToolFailure(f"endpoint for {raw!r} is not flyable: {exc}") from exc
    commands: list[Command] = []
    center = grid.center(path.cells[0])
    if float(np.linalg.norm(center - state.pos)) > 1e-9:
        # align to the start cell center so the hop sequence keeps the
        # planner's half-cell clearance (the alignment stays inside one cell)
        commands.append(goto_cmd(tuple(float(c) for c in center)))
    commands.extend(to_commands(path, initial_yaw=state.yaw))
    return commands


def default_registry() -> ToolRegistry:
    registry = ToolRegistry()
    registry.register(
        ToolSpec(
            name="avoidance",
            capabilities=frozenset({"avoid", "obstacle", "dodge"}),
            arg_schema=("target",),
            run=_avoidance_run,
        )
    )
    return registry


# -- decisions -------------------------------------------------------------------

@dataclass(frozen=True)
class StepBinding:
    step: int                 # 0-based plan step index
    tool: str
    args: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class ExecutionDecision:
    mode: str                               # "direct" | "tool_assisted"
    bindings: tuple[StepBinding, ...] = ()

    def __post_init__(self):
        if self.mode == "direct" and self.bindings:
            raise ValueError("direct mode carries no bindings")
        if self.mode == "tool_assisted" and not self.bindings:
            raise ValueError("tool-assisted mode needs at least one binding")


def match_tool_keywords(
    keywords: frozenset[str], kb: KnowledgeBase, registry: ToolRegistry
) -> dict[str, str]:
    """Map exactly the out-of-knowledge keywords onto registered tools."""
    unmatched = sorted(keywords - kb.total)
    mapping = {}
    for keyword in unmatched:
        spec = registry.for_keyword(keyword)
        if spec is None:
            raise NoToolForKeyword(f"keyword {keyword!r} has no registered tool")
        mapping[keyword] = spec.name
    return mapping


def decide_execution(
    label: TaskLabel,
    plan: Plan,
    registry: ToolRegistry,
    kb: KnowledgeBase,
    keywords: frozenset[str],
) -> ExecutionDecision:
    """Direct for independent labels; otherwise bind avoid steps to tools."""
    if label.autonomy == INDEPENDENT:
        return ExecutionDecision("direct")
    match_tool_keywords(keywords, kb, registry)   # raises when uncovered
    bindings = []
    for i, step in enumerate(plan.steps):
        if step.action and step.action not in (
            "move", "hover", "rotate", "takeoff", "land", "capture", "goto",
        ):
            spec = registry.for_keyword(step.action) or (
                registry.tools.get(step.action)
            )
            if spec is None:
                raise NoToolForKeyword(f"step hint {step.action!r} has no tool")
            args = (("target", step.target),) if step.target else ()
            bindings.append(StepBinding(i, spec.name, args))
    if not bindings:
        raise NoToolForKeyword("tool-assisted label but no step needs a tool")
    return ExecutionDecision("tool_assisted", tuple(bindings))


# -- translation -----------------------------------------------------------------

def build_translation_prompt(
    world: WorldModel,
    plan: Plan,
    decision: ExecutionDecision,
    state: UavState,
    cfg: SimConfig = SimConfig(),
) -> str:
    sections = [f"## role\n{EXECUTOR_ROLE}"]
    sections.append(f"## scene\n{render_scene(world).rstrip()}")
    sections.append("## plan\n" + render_plan_text(plan.steps))
    if decision.mode == "tool_assisted":
        lines = [f"step {b.step + 1} -> tool {b.tool}" for b in decision.bindings]
        sections.append("## bindings\n" + "\n".join(lines))
    pos = state.pos
    sections.append(
        "## state\n"
        f"position: {pos[0]} {pos[1]} {pos[2]}\n"
        f"yaw: {state.yaw}\n"
        f"airborne: {str(state.airborne).lower()}\n"
        f"flight_altitude: {cfg.takeoff_altitude}"
    )
    sections.append(
        "## output\nRespond with COMMANDS / '# step N' markers / one command "
        "per line / END."
    )
    return "\n\n".join(sections) + "\n"


def translate(
    plan: Plan,
    backend,
    world: WorldModel,
    decision: ExecutionDecision | None = None,
    state: UavState | None = None,
    cfg: SimConfig = SimConfig(),
    log=None,
) -> list[Command]:
    """Lower a plan to commands through the backend.

    Every plan step must map to at least one command; tool-bound steps must
    carry their tool invocation. Implicit takeoff/land framing is applied
    here so the dispatched stream always starts grounded and ends landed.
    """
    if decision is None:
        decision = ExecutionDecision("direct")
    if state is None:
        state = replay_pose([], world, cfg)
    prompt = build_translation_prompt(world, plan, decision, state, cfg)
    if log:
        log("prompt", prompt)
    raw = backend.complete(prompt)
    if log:
        log("response", raw)
    per_step, commands = _parse_command_block(raw)
    for i in range(len(plan.steps)):
        if not per_step.get(i):
            raise UnresolvedStep(f"plan step {i + 1} produced no commands")
    for binding in decision.bindings:
        owned = per_step.get(binding.step, [])
        if not any(c.kind == "tool" and c.tool == binding.tool for c in owned):
            raise UnresolvedStep(
                f"step {binding.step + 1} is bound to {binding.tool!r} "
                "but emitted no tool command"
            )
    if not commands:
        raise UnparseableOutput("backend emitted no commands")
    if commands[0].kind != "takeoff" and not state.airborne:
        commands.insert(0, takeoff())
    if commands[-1].kind != "land":
        commands.append(land())
    return commands


def _parse_command_block(raw: str):
    lines = raw.splitlines()
    try:
        lo = next(i for i, ln in enumerate(lines) if ln.strip() == "COMMANDS")
        hi = next(i for i, ln in enumerate(lines) if ln.strip() == "END" and i > lo)
    except StopIteration:
        raise UnparseableOutput("no COMMANDS/END block in backend response") from None
    per_step: dict[int, list[Command]] = {}
    commands: list[Command] = []
    current = None
    for rawline in lines[lo + 1 : hi]:
        line = rawline.strip()
        if not line:
            continue
        if line.startswith("# step "):
            try:
                current = int(line[len("# step ") :]) - 1
            except ValueError:
                raise UnparseableOutput(f"bad step marker {line!r}") from None
            continue
        if line.startswith("#"):
            continue
        try:
            cmd = parse_command(line)
        except CommandError as exc:
            raise UnparseableOutput(f"{line!r}: {exc}") from exc
        commands.append(cmd)
        if current is not None:
            per_step.setdefault(current, []).append(cmd)
    return per_step, commands


# -- execution -------------------------------------------------------------------

@dataclass(frozen=True)
class SegmentVerdict:
    commands: tuple[str, ...]
    ok: bool
    cause: str | None = None


@dataclass(frozen=True)
class ExecutionReport:
    segments: tuple[SegmentVerdict, ...]
    success: bool
    duration: float                  # flight seconds covered by the run
    failure: str | None = None


def expand_tools(
    commands: list[Command],
    world: WorldModel,
    registry: ToolRegistry,
    cfg: SimConfig = SimConfig(),
) -> list[Command]:
    """Splice tool invocations into the command stream.

    Each tool runs against the pose predicted by replaying the already
    expanded prefix, so its output lands exactly where the vehicle will be.
    """
    expanded: list[Command] = []
    for cmd in commands:
        if cmd.kind != "tool":
            expanded.append(cmd)
            continue
        spec = registry.get(cmd.tool)
        state = replay_pose(expanded, world, cfg)
        produced = spec.run(world, state, dict(cmd.tool_args))
        expanded.extend(produced)
    return expanded


def execute(
    commands: list[Command],
    decision: ExecutionDecision,
    sink,
    constraints: MlvConstraints = MlvConstraints(),
    world: WorldModel | None = None,
    registry: ToolRegistry | None = None,
    cfg: SimConfig = SimConfig(),
) -> ExecutionReport:
    """Segment, dispatch and score a command stream.

    Tool commands are expanded first (requires `world` and `registry`),
    segments are validated and dispatched in order, and the run stops at
    the first failed segment. An invalid segment is recorded as a failed
    run, never silently truncated or repaired.
    """
    if sink is None:
        raise SinkUnavailable("no command sink")
    has_tools = any(c.kind == "tool" for c in commands)
    if has_tools:
        if world is None or registry is None:
            raise ToolFailure("tool expansion needs a world and a registry")
        try:
            commands = expand_tools(commands, world, registry, cfg)
        except ToolFailure as exc:
            return ExecutionReport((), False, 0.0, failure=str(exc))
    start_clock = getattr(sink, "flight_time", 0.0)
    segments = segment_plan(commands, constraints)
    verdicts: list[SegmentVerdict] = []
    success = True
    failure = None
    for segment in segments:
        verdict = validate_mlv(segment, constraints)
        if not verdict.accepted:
            verdicts.append(
                SegmentVerdict(tuple(c.render() for c in segment.commands), False, verdict.rule)
            )
            success = False
            failure = verdict.rule
            break
        result = sink.accept_segment(segment)
        verdicts.append(
            SegmentVerdict(
                tuple(c.render() for c in segment.commands), result.ok, result.cause
            )
        )
        if not result.ok:
            success = False
            failure = result.cause
            break
    end_clock = getattr(sink, "flight_time", 0.0)
    return ExecutionReport(
        tuple(verdicts), success, float(end_clock - start_clock), failure=failure
    )
