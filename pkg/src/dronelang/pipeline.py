"""End-to-end task run: classify, plan, translate, fly, account energy.

One function drives a single request through every stage against a
simulator session; the bench harness and the gateway both call it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import planning
from .classify import (
    ComplexityScore,
    TaskFeatures,
    bundled_knowledge,
    classify_complexity,
    classify_independence,
    complexity_score,
    extract_features,
)
from .config import PipelineConfig
from .energy import (
    EfficiencySegment,
    SprWindow,
    classify_efficiency,
    integrate_energy,
    spr_windows,
    total_power,
)
from .execution import (
    ExecutionDecision,
    ExecutionReport,
    ToolRegistry,
    decide_execution,
    default_registry,
    execute,
    translate,
)
from .nlu import canonical_instruction, extract_keywords
from .planning import FailureMemory, PromptStyle, ReferenceBackend, prompt_style
from .sim import SimulatorSession, WorldModel
from .tasks import Plan, TaskLabel, TaskRequest

_REFERENCE = ReferenceBackend()


def make_backend(name: str):
    if name == "reference":
        return _REFERENCE
    if name.startswith("http"):
        return planning.HttpBackend()
    raise ValueError(f"unknown backend {name!r}")


@dataclass
class TaskRun:
    request: TaskRequest
    canonical: TaskRequest
    features: TaskFeatures
    score: ComplexityScore
    label: TaskLabel
    plan: Plan
    decision: ExecutionDecision
    commands: tuple[str, ...]
    report: ExecutionReport
    session: SimulatorSession
    flight_time: float
    energy: float
    windows: list[SprWindow] = field(default_factory=list)
    efficiency: list[EfficiencySegment] = field(default_factory=list)


def classify_request(
    req: TaskRequest, world: WorldModel, config: PipelineConfig
) -> tuple[TaskRequest, TaskFeatures, ComplexityScore, TaskLabel]:
    """Rewrite (implicit requests), extract features, produce the 2-D label."""
    canonical_text = canonical_instruction(req.instruction, req.phrasing, world)
    canonical = TaskRequest(canonical_text, req.scene, "explicit")
    features = extract_features(canonical, world)
    score = complexity_score(features, config.complexity)
    complexity = classify_complexity(score, config.complexity)
    kb = bundled_knowledge().with_scene(world)
    keywords = extract_keywords(canonical.instruction)
    autonomy = classify_independence(keywords, kb)
    return canonical, features, score, TaskLabel(complexity, autonomy)


def run_task(
    req: TaskRequest,
    world: WorldModel,
    config: PipelineConfig,
    backend=None,
    registry: ToolRegistry | None = None,
    memory: FailureMemory | None = None,
    style: PromptStyle | None = None,
    session: SimulatorSession | None = None,
    sink=None,
    log=None,
    events=None,
) -> TaskRun:
    """Drive one request through the full pipeline on a fresh sim session.

    `events`, when given, receives (kind, payload) pairs as stages finish,
    in pipeline order: label, plan, decision, then per-segment outcomes via
    the report. Tools can be disabled via config.tools_enabled (the
    ablation's prohibited mode): the label is still computed, execution
    goes direct.
    """
    backend = backend or make_backend(config.backend)
    registry = registry if registry is not None else default_registry()
    memory = memory or FailureMemory(capacity=config.memory_capacity)
    style = style or prompt_style(config.prompt_style)
    session = session or SimulatorSession(world, config.sim)

    canonical, features, score, label = classify_request(req, world, config)
    if events:
        events(
            "label",
            {
                "code": label.code,
                "complexity": label.complexity,
                "autonomy": label.autonomy,
                "features": {
                    "monitor_points": features.monitor_points,
                    "danger_regions": features.danger_regions,
                    "action_count": features.action_count,
                },
                "score": {
                    "state": score.state,
                    "motion": score.motion,
                    "total": score.total,
                },
                "threshold": config.complexity.threshold,
                "instruction": canonical.instruction,
            },
        )

    plan = planning.plan(canonical, label, backend, style, world, memory, log=log)
    if events:
        events(
            "plan",
            {
                "steps": [
                    {"description": s.description, "action": s.action, "target": s.target}
                    for s in plan.steps
                ],
            },
        )

    kb = bundled_knowledge().with_scene(world)
    keywords = extract_keywords(canonical.instruction)
    if config.tools_enabled:
        decision = decide_execution(label, plan, registry, kb, keywords)
    else:
        decision = ExecutionDecision("direct")
    if events:
        events(
            "decision",
            {
                "mode": decision.mode,
                "bindings": [
                    {"step": b.step + 1, "tool": b.tool, "args": dict(b.args)}
                    for b in decision.bindings
                ],
            },
        )

    commands = translate(
        plan, backend, world, decision, state=session.state, cfg=config.sim, log=log
    )
    report = execute(
        commands,
        decision,
        sink if sink is not None else session,
        config.constraints,
        world=world,
        registry=registry,
        cfg=config.sim,
    )

    motors = session.motor_samples()
    trajectory = session.trajectory()
    power = total_power(motors, config.power) if motors.size else np.zeros(0)
    energy = integrate_energy(power, config.sim.dt)
    windows = (
        spr_windows(trajectory, power, config.sim.dt) if trajectory.shape[0] else []
    )
    efficiency = classify_efficiency(windows) if windows else []

    return TaskRun(
        request=req,
        canonical=canonical,
        features=features,
        score=score,
        label=label,
        plan=plan,
        decision=decision,
        commands=tuple(c.render() for c in commands),
        report=report,
        session=session,
        flight_time=session.flight_time,
        energy=energy,
        windows=windows,
        efficiency=efficiency,
    )
