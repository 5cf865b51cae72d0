"""Two-axis task classification.

Complexity: a task scores state-space complexity from the monitoring
points and danger regions its corridor touches, motion-space complexity
from its action count, combines them linearly and thresholds the sum.
Autonomy: the task is independent exactly when every extracted keyword is
covered by the system + internet knowledge bases; anything unknown implies
an external tool.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources
from itertools import product

import numpy as np

from .nlu import (
    ActionItem,
    AutonomousInstruction,
    extract_keywords,
    parse_instruction,
)
from .sim import WorldModel
from .tasks import COMPLEX, INDEPENDENT, SIMPLE, TOOL_ASSISTED, TaskRequest

CORRIDOR_RADIUS = 1.0


class DegenerateLabels(ValueError):
    pass


@dataclass(frozen=True)
class TaskFeatures:
    """The (monitoring points, danger regions, action count) triple."""

    monitor_points: int
    danger_regions: int
    action_count: int

    def __post_init__(self):
        if min(self.monitor_points, self.danger_regions, self.action_count) < 0:
            raise ValueError("features must be non-negative")


@dataclass(frozen=True)
class ComplexityConfig:
    state_weight: float = 0.5     # balance coefficient on state-space complexity
    motion_weight: float = 0.5    # balance coefficient on motion-space complexity
    point_scale: float = 1.0
    danger_scale: float = 1.0
    action_scale: float = 1.0
    threshold: float = 4.0

    def __post_init__(self):
        values = (
            self.state_weight, self.motion_weight,
            self.point_scale, self.danger_scale, self.action_scale,
        )
        if any(v < 0 for v in values) or self.threshold <= 0:
            raise ValueError("coefficients must be >= 0 and threshold > 0")


@dataclass(frozen=True)
class ComplexityScore:
    state: float
    motion: float
    total: float


def complexity_score(f: TaskFeatures, cfg: ComplexityConfig) -> ComplexityScore:
    state = cfg.point_scale * f.monitor_points + cfg.danger_scale * f.danger_regions
    motion = cfg.action_scale * f.action_count
    total = cfg.state_weight * state + cfg.motion_weight * motion
    return ComplexityScore(state, motion, total)


def classify_complexity(score: ComplexityScore, cfg: ComplexityConfig) -> str:
    return SIMPLE if score.total <= cfg.threshold else COMPLEX


# -- knowledge bases ---------------------------------------------------------

@dataclass(frozen=True)
class KnowledgeBase:
    system: frozenset[str]     # scene-specific tokens, loaded per interaction
    internet: frozenset[str]   # general preloaded vocabulary

    @property
    def total(self) -> frozenset[str]:
        return self.system | self.internet

    def with_scene(self, world: WorldModel) -> "KnowledgeBase":
        """Fold the scene's name vocabulary into the system side."""
        scene: set[str] = set()
        for name in world.known_names():
            for part in name.split("_"):
                if part.isalpha():
                    scene.add(part)
        scene.add(world.name)
        return KnowledgeBase(self.system | frozenset(scene), self.internet)


def parse_knowledge(text: str) -> KnowledgeBase:
    """Parse the two-list knowledge file ([system] / [internet] sections)."""
    section = None
    system: set[str] = set()
    internet: set[str] = set()
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip().lower()
        if not line:
            continue
        if line == "[system]":
            section = system
        elif line == "[internet]":
            section = internet
        elif line.startswith("["):
            raise ValueError(f"unknown knowledge section {line!r}")
        else:
            if section is None:
                raise ValueError("token before any [section] header")
            section.add(line)
    return KnowledgeBase(frozenset(system), frozenset(internet))


def bundled_knowledge() -> KnowledgeBase:
    text = resources.files("dronelang.data").joinpath("knowledge.txt").read_text()
    return parse_knowledge(text)


def classify_independence(keywords: frozenset[str], kb: KnowledgeBase) -> str:
    return INDEPENDENT if keywords <= kb.total else TOOL_ASSISTED


# -- feature extraction ------------------------------------------------------

def corridor_waypoints(
    actions: tuple[ActionItem, ...], world: WorldModel, altitude: float = 1.0
) -> np.ndarray:
    """Straight-line corridor implied by the instruction's actions.

    A virtual pose walks the actions from the scene start: relative moves
    displace it, named targets jump to their reference points. Returns the
    polyline vertices, shape (k, 3).
    """
    pos = np.array([world.start[0], world.start[1], altitude])
    yaw = world.start_yaw
    points = [pos.copy()]
    for action in actions:
        if action.kind == "move":
            from .sim import direction_vector

            pos = pos + direction_vector(yaw, action.direction) * action.magnitude
            points.append(pos.copy())
        elif action.kind == "rotate":
            yaw = (yaw + action.magnitude) % 360.0
        elif action.target is not None:
            nxt = world.resolve_point(action.target, altitude)
            if not np.allclose(nxt, pos):
                pos = nxt.copy()
                points.append(pos.copy())
    return np.vstack(points)


def _point_box_distance(points: np.ndarray, lo, hi) -> np.ndarray:
    lo = np.asarray(lo)
    hi = np.asarray(hi)
    delta = np.maximum(np.maximum(lo - points, 0.0), points - hi)
    return np.linalg.norm(delta, axis=1)


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(p - a))
    t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def _corridor_samples(points: np.ndarray, step: float = 0.02) -> np.ndarray:
    chunks = [points[:1]]
    for a, b in zip(points[:-1], points[1:]):
        span = float(np.linalg.norm(b - a))
        n = max(1, int(np.ceil(span / step)))
        ts = np.linspace(0.0, 1.0, n + 1)[1:, None]
        chunks.append(a[None, :] + ts * (b - a)[None, :])
    return np.vstack(chunks)


def extract_features(req: TaskRequest, world: WorldModel) -> TaskFeatures:
    """Compute the feature triple for an explicit instruction.

    Monitoring points count when named or lying within 1 m of the corridor;
    danger regions count when the 1 m-radius corridor tube touches them;
    the action count is the parsed atomic sequence length.
    """
    parsed = parse_instruction(req.instruction, world)
    if not parsed.targets and all(
        a.kind in ("avoid",) for a in parsed.actions
    ):
        raise AutonomousInstruction(
            f"no computable targets or motion in {req.instruction!r}"
        )
    corridor = corridor_waypoints(parsed.actions, world)

    named = {t for t in parsed.targets if t in world.monitor_points}
    nearby = set()
    for name, point in world.monitor_points.items():
        p = np.asarray(point, dtype=float)
        for a, b in zip(corridor[:-1], corridor[1:]):
            if _point_segment_distance(p, a, b) <= CORRIDOR_RADIUS:
                nearby.add(name)
                break

    samples = _corridor_samples(corridor)
    dangers = 0
    for box in world.dangers:
        if bool(
            np.any(_point_box_distance(samples, box.lo, box.hi) <= CORRIDOR_RADIUS)
        ):
            dangers += 1

    return TaskFeatures(
        monitor_points=len(named | nearby),
        danger_regions=dangers,
        action_count=parsed.action_count,
    )


# -- calibration -------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationExample:
    features: TaskFeatures
    gold: str   # "simple" | "complex"


def parse_calibration(text: str) -> list[CalibrationExample]:
    """One record per line: `p d l label`."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4 or parts[3] not in (SIMPLE, COMPLEX):
            raise ValueError(f"line {lineno}: expected 'p d l simple|complex'")
        out.append(
            CalibrationExample(
                TaskFeatures(int(parts[0]), int(parts[1]), int(parts[2])), parts[3]
            )
        )
    return out


def bundled_calibration() -> list[CalibrationExample]:
    text = resources.files("dronelang.data").joinpath("calibration.txt").read_text()
    return parse_calibration(text)


# Documented search lattice: integer unit scales and integer thresholds.
SCALE_LATTICE = (1.0, 2.0, 3.0, 4.0)
THRESHOLD_LATTICE = tuple(float(t) for t in range(1, 13))


def calibrate(
    examples: list[CalibrationExample], base: ComplexityConfig = ComplexityConfig()
) -> ComplexityConfig:
    """Exhaustive grid search for the unit scales and threshold.

    Balance weights stay at their `base` values. Minimizes misclassification
    count over the lattice; ties break toward the lexicographically smallest
    (point_scale, danger_scale, action_scale, threshold).
    """
    golds = {ex.gold for ex in examples}
    if golds != {SIMPLE, COMPLEX}:
        raise DegenerateLabels("calibration needs both gold labels present")
    best = None
    best_errors = None
    for gp, gd, ga, theta in product(
        SCALE_LATTICE, SCALE_LATTICE, SCALE_LATTICE, THRESHOLD_LATTICE
    ):
        cfg = replace(
            base,
            point_scale=gp,
            danger_scale=gd,
            action_scale=ga,
            threshold=theta,
        )
        errors = sum(
            1
            for ex in examples
            if classify_complexity(complexity_score(ex.features, cfg), cfg) != ex.gold
        )
        key = (gp, gd, ga, theta)
        if best_errors is None or errors < best_errors or (
            errors == best_errors and key < best
        ):
            best_errors = errors
            best = key
    gp, gd, ga, theta = best
    return replace(
        base, point_scale=gp, danger_scale=gd, action_scale=ga, threshold=theta
    )
