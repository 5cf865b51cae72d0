"""Planning agent: prompt assembly, language-model backends and plans.

Three prompt styles feed the backend: RP carries the role text alone, CP
adds the scene snapshot and worked task templates, EIP additionally embeds
simplified past failures as negative templates. A rule-based reference
backend ships in-repo: it answers planning and translation prompts
deterministically from the same verb table the classifier uses, which
makes the whole pipeline testable offline and doubles as the oracle for
plan-shape properties. Remote models implement the same one-string-in,
one-string-out contract over HTTP.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass, field, replace

import numpy as np

from . import nlu
from .nlu import ActionItem, parse_instruction
from .sim import WorldModel, load_world, los_clear, render_scene, direction_vector
from .tasks import COMPLEX, Plan, PlanStep, TaskLabel, TaskRequest


class PlanningError(RuntimeError):
    pass


class UnparseablePlan(PlanningError):
    pass


class BackendUnavailable(PlanningError):
    pass


# -- prompt styles -----------------------------------------------------------

PLANNER_ROLE = (
    "You are the planning stage of a drone command console. Read the user "
    "request, keep the plan free of command syntax, and answer with a "
    "numbered step list between PLAN and END markers, one action or target "
    "per step, each step as 'N. description | action=<kind> [target=<name>]'."
)

EXECUTOR_ROLE = (
    "You are the execution stage of a drone command console. Convert the "
    "plan into flight commands, one per line between COMMANDS and END "
    "markers, prefixing each step's commands with '# step N'."
)


@dataclass(frozen=True)
class PromptStyle:
    style: str                      # RP | CP | EIP
    role_text: str = PLANNER_ROLE
    scene_knowledge: bool = False
    task_templates: bool = False
    failure_exemplars: bool = False

    def __post_init__(self):
        if self.style not in ("RP", "CP", "EIP"):
            raise ValueError(f"unknown prompt style {self.style!r}")
        wants = {
            "RP": (False, False, False),
            "CP": (True, True, False),
            "EIP": (True, True, True),
        }[self.style]
        got = (self.scene_knowledge, self.task_templates, self.failure_exemplars)
        if got != wants:
            raise ValueError(f"{self.style} blocks must be {wants}, got {got}")


def prompt_style(style: str) -> PromptStyle:
    return PromptStyle(
        style,
        scene_knowledge=style in ("CP", "EIP"),
        task_templates=style in ("CP", "EIP"),
        failure_exemplars=style == "EIP",
    )


# -- failure memory ----------------------------------------------------------

def request_digest(instruction: str) -> str:
    return hashlib.sha256(instruction.strip().lower().encode()).hexdigest()[:12]


@dataclass(frozen=True)
class FailureEntry:
    digest: str
    summary: str
    rule: str


@dataclass(frozen=True)
class FailureMemory:
    capacity: int = 32
    entries: tuple[FailureEntry, ...] = ()

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")


def record_failure(failure: dict, memory: FailureMemory) -> FailureMemory:
    """Fold a failed attempt into memory as a simplified negative template.

    `failure` carries instruction, plan summary and the violated rule.
    Duplicate digests are idempotent; past capacity the oldest entry falls
    out first.
    """
    entry = FailureEntry(
        digest=request_digest(failure["instruction"]),
        summary=_simplify(failure.get("plan", "")),
        rule=failure["rule"],
    )
    if any(e.digest == entry.digest for e in memory.entries):
        return memory
    entries = memory.entries + (entry,)
    if len(entries) > memory.capacity:
        entries = entries[len(entries) - memory.capacity :]
    return replace(memory, entries=entries)


def _simplify(plan_text: str) -> str:
    words = " ".join(plan_text.split())
    return words[:160]


def save_memory(memory: FailureMemory, path) -> None:
    payload = {
        "capacity": memory.capacity,
        "entries": [
            {"digest": e.digest, "summary": e.summary, "rule": e.rule}
            for e in memory.entries
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)


def bundled_failures() -> list[dict]:
    """The shipped failure corpus: instruction, plan summary, violated rule."""
    from importlib import resources

    text = resources.files("dronelang.data").joinpath("failures.txt").read_text()
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        instruction, plan_summary, rule = line.split("|")
        out.append({"instruction": instruction, "plan": plan_summary, "rule": rule})
    return out


def load_memory(path) -> FailureMemory:
    if not os.path.exists(path):
        return FailureMemory()
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return FailureMemory(
        capacity=payload["capacity"],
        entries=tuple(FailureEntry(**e) for e in payload["entries"]),
    )


# -- planning context ----------------------------------------------------------

@dataclass(frozen=True)
class PlanningContext:
    scene_keywords: frozenset[str]
    task_actions: tuple[str, ...]
    system_prompt: str


def extract_scene_and_actions(req: TaskRequest, world: WorldModel) -> PlanningContext:
    """Pull the scene keywords and ordered action verbs out of a request."""
    parsed = parse_instruction(req.instruction, world)
    keywords = nlu.extract_keywords(req.instruction)
    scene_vocab: set[str] = set()
    for name in world.known_names():
        for part in name.split("_"):
            if part.isalpha():
                scene_vocab.add(nlu.lemma(part))
    return PlanningContext(
        scene_keywords=frozenset(keywords & scene_vocab),
        task_actions=tuple(a.kind for a in parsed.actions),
        system_prompt=render_scene(world),
    )


# -- prompt assembly ---------------------------------------------------------

_TEMPLATES = (
    (
        "move forward 5 meters and take a picture",
        "PLAN\n1. move forward 5 meters | action=move\n"
        "2. take a picture | action=capture\nEND",
    ),
    (
        "go to the kitchen and take a photo",
        "PLAN\n1. fly to kitchen and photograph it | action=capture target=kitchen\nEND",
    ),
)


def build_prompt(
    style: PromptStyle,
    ctx: PlanningContext,
    req: TaskRequest,
    memory: FailureMemory = FailureMemory(),
    complexity: str | None = None,
) -> str:
    """Deterministic planning prompt; identical inputs give identical bytes."""
    sections = [f"## role\n{style.role_text}"]
    if style.scene_knowledge:
        sections.append(f"## scene\n{ctx.system_prompt.rstrip()}")
    if style.task_templates:
        blocks = [f"request: {q}\n{a}" for q, a in _TEMPLATES]
        sections.append("## templates\n" + "\n\n".join(blocks))
    if style.failure_exemplars:
        lines = [
            f"- request {e.digest}: {e.summary or '(no plan)'} violated rule {e.rule}"
            for e in memory.entries
        ]
        body = "\n".join(lines) if lines else "(none recorded)"
        sections.append("## failures\n" + body)
    request_lines = [
        f"scene: {req.scene}",
        f"phrasing: {req.phrasing}",
    ]
    if complexity is not None:
        request_lines.append(f"complexity: {complexity}")
    request_lines.append(f"instruction: {req.instruction}")
    sections.append("## request\n" + "\n".join(request_lines))
    sections.append("## output\nRespond with PLAN / numbered steps / END.")
    return "\n\n".join(sections) + "\n"


def split_sections(prompt: str) -> dict[str, str]:
    sections: dict[str, str] = {}
    current = None
    lines: list[str] = []
    for line in prompt.splitlines():
        if line.startswith("## "):
            if current is not None:
                sections[current] = "\n".join(lines).strip()
            current = line[3:].strip()
            lines = []
        else:
            lines.append(line)
    if current is not None:
        sections[current] = "\n".join(lines).strip()
    return sections


# -- plan text grammar ---------------------------------------------------------

_STEP_RE = re.compile(r"^(\d+)\.\s+(.*)$")


def render_plan_text(steps: tuple[PlanStep, ...]) -> str:
    lines = ["PLAN"]
    for i, step in enumerate(steps, start=1):
        attrs = []
        if step.action:
            attrs.append(f"action={step.action}")
        if step.target:
            attrs.append(f"target={step.target}")
        suffix = f" | {' '.join(attrs)}" if attrs else ""
        lines.append(f"{i}. {step.description}{suffix}")
    lines.append("END")
    return "\n".join(lines)


def parse_plan_text(text: str) -> tuple[PlanStep, ...]:
    lines = text.splitlines()
    try:
        lo = next(i for i, ln in enumerate(lines) if ln.strip() == "PLAN")
        hi = next(i for i, ln in enumerate(lines) if ln.strip() == "END" and i > lo)
    except StopIteration:
        raise UnparseablePlan("no PLAN/END block in backend response") from None
    steps = []
    for raw in lines[lo + 1 : hi]:
        raw = raw.strip()
        if not raw:
            continue
        match = _STEP_RE.match(raw)
        if not match:
            raise UnparseablePlan(f"unnumbered plan line: {raw!r}")
        number, rest = int(match.group(1)), match.group(2)
        if number != len(steps) + 1:
            raise UnparseablePlan(f"step numbering jumps at {raw!r}")
        description, _, attr_text = rest.partition(" | ")
        action = target = None
        if attr_text:
            for item in attr_text.split():
                key, sep, value = item.partition("=")
                if not sep:
                    raise UnparseablePlan(f"bad step attribute {item!r}")
                if key == "action":
                    action = value
                elif key == "target":
                    target = value
                else:
                    raise UnparseablePlan(f"unknown step attribute {key!r}")
        steps.append(PlanStep(description.strip(), action, target))
    if not steps:
        raise UnparseablePlan("empty plan")
    return tuple(steps)


# -- backends ----------------------------------------------------------------

class ScriptedBackend:
    """Test backend replaying canned responses in order."""

    def __init__(self, responses, name: str = "scripted", temperature: float = 0.0):
        self.name = name
        self.temperature = temperature
        self._responses = list(responses)
        self.prompts: list[str] = []

    def complete(self, prompt: str) -> str:
        self.prompts.append(prompt)
        if not self._responses:
            raise BackendUnavailable("scripted backend exhausted")
        response = self._responses.pop(0)
        return response(prompt) if callable(response) else response


class HttpBackend:
    """Remote model client over a plain request/response endpoint.

    Endpoint, model name and key come from DRONELANG_BACKEND_URL,
    DRONELANG_BACKEND_MODEL and DRONELANG_BACKEND_KEY unless passed
    explicitly. Expects a JSON response bearing a `text` field.
    """

    def __init__(self, endpoint: str | None = None, model: str | None = None,
                 key: str | None = None, temperature: float = 0.0):
        self.endpoint = endpoint or os.environ.get("DRONELANG_BACKEND_URL")
        self.model = model or os.environ.get("DRONELANG_BACKEND_MODEL", "default")
        self.key = key or os.environ.get("DRONELANG_BACKEND_KEY")
        self.temperature = temperature
        self.name = f"http:{self.model}"
        if not self.endpoint:
            raise BackendUnavailable("no backend endpoint configured")

    def complete(self, prompt: str) -> str:
        import httpx

        headers = {"authorization": f"Bearer {self.key}"} if self.key else {}
        try:
            response = httpx.post(
                self.endpoint,
                json={
                    "model": self.model,
                    "prompt": prompt,
                    "temperature": self.temperature,
                },
                headers=headers,
                timeout=60.0,
            )
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise BackendUnavailable(str(exc)) from exc
        return response.json()["text"]


class ReferenceBackend:
    """Deterministic rule-based stand-in for the language model.

    Answers planning prompts by running the shared verb table over the
    embedded request, and translation prompts by lowering plan steps to
    commands with waypoint routing over the scene snapshot. With the
    temperature knob at zero (the only supported value) identical prompts
    yield identical responses.
    """

    name = "reference"

    def __init__(self, temperature: float = 0.0):
        if temperature != 0.0:
            raise ValueError("reference backend is deterministic only")
        self.temperature = temperature
        self._route_cache: dict[str, "_SceneRouter"] = {}

    def complete(self, prompt: str) -> str:
        sections = split_sections(prompt)
        output = sections.get("output", "")
        if "PLAN" in output:
            return self._plan(sections)
        if "COMMANDS" in output:
            return self._translate(sections)
        raise BackendUnavailable("reference backend cannot answer this prompt")

    # planning ---------------------------------------------------------------
    def _plan(self, sections: dict[str, str]) -> str:
        request = _parse_kv(sections.get("request", ""))
        instruction = request.get("instruction", "")
        world = self._world_from(sections)
        parsed = parse_instruction(instruction, world)
        steps = reference_plan_steps(parsed)
        return render_plan_text(steps)

    # translation ------------------------------------------------------------
    def _translate(self, sections: dict[str, str]) -> str:
        world = self._world_from(sections)
        steps = parse_plan_text(sections.get("plan", ""))
        bound = _parse_bindings(sections.get("bindings", ""))
        state = _parse_kv(sections.get("state", ""))
        position = np.array([float(v) for v in state.get("position", "0 0 0").split()])
        yaw = float(state.get("yaw", "0"))
        if state.get("airborne", "true") == "false":
            # grounded now, but every emitted route flies at working altitude
            altitude = float(state.get("flight_altitude", "1"))
            position = np.array([position[0], position[1], max(position[2], altitude)])
        router = self._router_for(sections, world)
        lines = ["COMMANDS"]
        for i, step in enumerate(steps, start=1):
            lines.append(f"# step {i}")
            emitted, position, yaw = _lower_step(
                step, i in bound, world, router, position, yaw
            )
            lines.extend(emitted)
        lines.append("END")
        return "\n".join(lines)

    def _world_from(self, sections: dict[str, str]) -> WorldModel:
        scene = sections.get("scene")
        if scene:
            return load_world(scene)
        return WorldModel(name="blank")

    def _router_for(self, sections: dict[str, str], world: WorldModel) -> "_SceneRouter":
        key = hashlib.sha256(sections.get("scene", "").encode()).hexdigest()
        router = self._route_cache.get(key)
        if router is None:
            router = _SceneRouter(world)
            self._route_cache[key] = router
        return router


def _parse_kv(body: str) -> dict[str, str]:
    out = {}
    for line in body.splitlines():
        key, sep, value = line.partition(":")
        if sep:
            out[key.strip()] = value.strip()
    return out


def _parse_bindings(body: str) -> set[int]:
    bound = set()
    for line in body.splitlines():
        match = re.match(r"^step (\d+) -> tool ", line.strip())
        if match:
            bound.add(int(match.group(1)))
    return bound


def reference_plan_steps(parsed: nlu.ParsedInstruction) -> tuple[PlanStep, ...]:
    """Deterministic plan shape for a parsed instruction.

    Adjacent go-then-photograph pairs merge into one visit step; when the
    request needs the avoidance tool, travel-bearing steps carry the avoid
    hint instead of standalone tool steps. Each named target appears
    exactly once.
    """
    items: list[ActionItem] = [a for a in parsed.actions if a.kind != "avoid"]
    merged: list[tuple[str, ActionItem]] = []
    skip = False
    for idx, item in enumerate(items):
        if skip:
            skip = False
            continue
        nxt = items[idx + 1] if idx + 1 < len(items) else None
        if (
            item.kind == "goto"
            and nxt is not None
            and nxt.kind == "capture"
            and nxt.target in (None, item.target)
        ):
            merged.append(("visit_photo", replace(item, kind="goto")))
            skip = True
        else:
            merged.append((item.kind, item))
    steps: list[PlanStep] = []
    visited: set[str] = set()
    tool = parsed.uses_tool
    for kind, item in merged:
        target = item.target
        if target and target != "home":
            if target in visited:
                continue
            visited.add(target)
        phrase = (target or "").replace("_", " ")
        if kind == "move":
            desc = f"move {item.direction} {_n(item.magnitude)} meters"
            if tool:
                steps.append(PlanStep(desc + " avoiding obstacles", "avoid"))
            else:
                steps.append(PlanStep(desc, "move"))
        elif kind == "hover":
            steps.append(PlanStep(f"hover for {_n(item.magnitude)} seconds", "hover"))
        elif kind == "rotate":
            way = "left" if item.magnitude >= 0 else "right"
            steps.append(
                PlanStep(f"turn {way} {_n(abs(item.magnitude))} degrees", "rotate")
            )
        elif kind == "takeoff":
            steps.append(PlanStep("take off", "takeoff"))
        elif kind == "land":
            steps.append(PlanStep("set down where you are", "land"))
        elif kind == "capture" and target is None:
            steps.append(PlanStep("take a picture", "capture"))
        elif kind in ("capture", "visit_photo"):
            if tool:
                steps.append(
                    PlanStep(
                        f"reach {phrase} avoiding obstacles and photograph it",
                        "avoid",
                        target,
                    )
                )
            else:
                steps.append(
                    PlanStep(f"fly to {phrase} and photograph it", "capture", target)
                )
        elif kind == "goto":
            if tool:
                steps.append(
                    PlanStep(f"reach {phrase} avoiding obstacles", "avoid", target)
                )
            else:
                steps.append(PlanStep(f"fly to {phrase}", "goto", target))
        else:  # pragma: no cover
            raise AssertionError(kind)
    if not steps:
        steps.append(PlanStep("hold position", "hover"))
    return tuple(steps)


def _n(value: float) -> str:
    return str(int(value)) if value == int(value) else repr(float(value))


class _SceneRouter:
    """Hop-count routing over named points with clear static sight lines.

    Sight lines are checked with a clearance margin so chosen legs never
    graze wall corners.
    """

    MARGIN = 0.2

    def __init__(self, world: WorldModel):
        self.world = world
        self.nodes: dict[str, np.ndarray] = {}
        for table in (world.waypoints, world.monitor_points, world.photo_targets):
            for name, point in table.items():
                self.nodes.setdefault(name, np.asarray(point, dtype=float))
        self.nodes["home"] = world.resolve_point("home")
        names = sorted(self.nodes)
        self.edges: dict[str, list[str]] = {n: [] for n in names}
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                if los_clear(self.nodes[a], self.nodes[b], world, margin=self.MARGIN):
                    self.edges[a].append(b)
                    self.edges[b].append(a)
        for neighbors in self.edges.values():
            neighbors.sort()

    def route(self, position: np.ndarray, target: str) -> list[str]:
        """Waypoint names to pass through, ending at `target`."""
        goal_point = self.world.resolve_point(target)
        if los_clear(position, goal_point, self.world, margin=self.MARGIN):
            return [target]
        start_names = [
            n
            for n in sorted(self.nodes)
            if los_clear(position, self.nodes[n], self.world, margin=self.MARGIN)
        ]
        goal_name = target if target in self.nodes else None
        if goal_name is None:
            return [target]
        parents: dict[str, str | None] = {n: None for n in start_names}
        queue = list(start_names)
        seen = set(start_names)
        while queue:
            node = queue.pop(0)
            if node == goal_name:
                chain = [node]
                while parents[chain[-1]] is not None:
                    chain.append(parents[chain[-1]])
                chain.reverse()
                if chain[-1] != target:
                    chain.append(target)
                return chain
            for nxt in self.edges[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    parents[nxt] = node
                    queue.append(nxt)
        return [target]   # no known route: fly direct and let execution judge


def _lower_step(
    step: PlanStep,
    tool_bound: bool,
    world: WorldModel,
    router: _SceneRouter,
    position: np.ndarray,
    yaw: float,
):
    """Emit command lines for one plan step; returns (lines, position, yaw)."""
    lines: list[str] = []
    wants_photo = "photograph" in step.description or step.action == "capture"
    desc_parsed = None
    try:
        desc_parsed = parse_instruction(step.description, world)
    except nlu.NluError:
        pass

    def arrive(point):
        return np.asarray(point, dtype=float)

    if tool_bound:
        if step.target:
            lines.append(f"tool avoidance target={step.target}")
            position = arrive(world.resolve_point(step.target))
        else:
            # relative move under avoidance: compute the absolute endpoint
            item = _first_move(desc_parsed)
            if item is None:
                raise UnparseablePlan(f"tool step without route: {step.description!r}")
            end = position + direction_vector(yaw, item.direction) * item.magnitude
            coords = ",".join(_n(float(c)) for c in end)
            lines.append(f"tool avoidance target=point:{coords}")
            position = end
        if wants_photo:
            lines.append("capture 0")
        return lines, position, yaw

    action = step.action
    if action == "move":
        item = _first_move(desc_parsed)
        if item is None:
            raise UnparseablePlan(f"unreadable move step {step.description!r}")
        lines.append(f"move {item.direction} {_n(item.magnitude)}")
        position = position + direction_vector(yaw, item.direction) * item.magnitude
    elif action == "hover":
        item = _first(desc_parsed, "hover")
        seconds = item.magnitude if item is not None else 2.0
        lines.append(f"hover {_n(seconds)}")
    elif action == "rotate":
        item = _first(desc_parsed, "rotate")
        degrees = item.magnitude if item is not None else 90.0
        lines.append(f"rotate {_n(degrees)}")
        yaw = (yaw + degrees) % 360.0
    elif action == "takeoff":
        lines.append("takeoff")
    elif action == "land":
        lines.append("land")
    elif action in ("goto", "capture") and step.target:
        for waypoint in router.route(position, step.target):
            lines.append(f"goto {waypoint}")
        position = arrive(world.resolve_point(step.target))
        if wants_photo:
            lines.append("capture 0")
    elif action == "capture":
        lines.append("capture 0")
    elif action == "avoid":
        # avoidance step without a tool binding (tools prohibited):
        # execute direct, flying the straight line and taking the outcome
        if step.target:
            lines.append(f"goto {step.target}")
            position = arrive(world.resolve_point(step.target))
        else:
            item = _first_move(desc_parsed)
            if item is None:
                raise UnparseablePlan(f"unreadable avoid step {step.description!r}")
            lines.append(f"move {item.direction} {_n(item.magnitude)}")
            position = position + direction_vector(yaw, item.direction) * item.magnitude
        if wants_photo:
            lines.append("capture 0")
    else:
        raise UnparseablePlan(f"cannot lower step {step.description!r} ({action})")
    return lines, position, yaw


def _first_move(parsed) -> ActionItem | None:
    return _first(parsed, "move")


def _first(parsed, kind: str) -> ActionItem | None:
    if parsed is None:
        return None
    for action in parsed.actions:
        if action.kind == kind:
            return action
    return None


# -- the planning operation ----------------------------------------------------

def plan(
    req: TaskRequest,
    label: TaskLabel,
    backend,
    style: PromptStyle,
    world: WorldModel,
    memory: FailureMemory = FailureMemory(),
    log=None,
) -> Plan:
    """Run the backend over a planning prompt and parse the result.

    The complexity verdict must already be computed (it is part of the
    prompt). For complex tasks the returned plan must visit every named
    target exactly once; anything else is UnparseablePlan.
    """
    ctx = extract_scene_and_actions(req, world)
    prompt = build_prompt(style, ctx, req, memory, complexity=label.complexity)
    if log:
        log("prompt", prompt)
    raw = backend.complete(prompt)
    if log:
        log("response", raw)
    steps = parse_plan_text(raw)
    result = Plan(steps, label)
    for step in steps:
        _reject_command_syntax(step)
    if label.complexity == COMPLEX:
        wanted = parse_instruction(req.instruction, world).targets
        got = [s.target for s in steps if s.target and s.target != "home"]
        if sorted(got) != sorted(set(got)) or set(got) != set(wanted):
            raise UnparseablePlan(
                f"complex plan must cover {wanted} exactly once, got {tuple(got)}"
            )
    return result


def _reject_command_syntax(step: PlanStep) -> None:
    """Planner/executor role split: plans never embed command-level code."""
    from .commands import CommandError, parse_command

    try:
        parse_command(step.description)
    except CommandError:
        return
    raise UnparseablePlan(
        f"plan step is verbatim command syntax: {step.description!r}"
    )
