"""Shared task vocabulary: requests, two-axis labels and plans."""

from __future__ import annotations

from dataclasses import dataclass

SIMPLE = "simple"
COMPLEX = "complex"
INDEPENDENT = "independent"
TOOL_ASSISTED = "tool_assisted"

_COMPLEXITIES = (SIMPLE, COMPLEX)
_AUTONOMIES = (INDEPENDENT, TOOL_ASSISTED)

LABEL_CODES = ("SI", "ST", "CI", "CT")


@dataclass(frozen=True)
class TaskLabel:
    """The 2-D verdict: Simple|Complex x Independent|ToolAssisted."""

    complexity: str
    autonomy: str

    def __post_init__(self):
        if self.complexity not in _COMPLEXITIES:
            raise ValueError(f"bad complexity {self.complexity!r}")
        if self.autonomy not in _AUTONOMIES:
            raise ValueError(f"bad autonomy {self.autonomy!r}")

    @property
    def code(self) -> str:
        return ("S" if self.complexity == SIMPLE else "C") + (
            "I" if self.autonomy == INDEPENDENT else "T"
        )

    @classmethod
    def from_code(cls, code: str) -> "TaskLabel":
        if code not in LABEL_CODES:
            raise ValueError(f"bad label code {code!r}")
        return cls(
            SIMPLE if code[0] == "S" else COMPLEX,
            INDEPENDENT if code[1] == "I" else TOOL_ASSISTED,
        )


@dataclass(frozen=True)
class TaskRequest:
    """One user utterance plus the scene it applies to."""

    instruction: str
    scene: str
    phrasing: str = "explicit"   # explicit | implicit

    def __post_init__(self):
        if not self.instruction.strip():
            raise ValueError("instruction must be non-empty")
        if self.phrasing not in ("explicit", "implicit"):
            raise ValueError(f"bad phrasing {self.phrasing!r}")


@dataclass(frozen=True)
class PlanStep:
    description: str
    action: str | None = None    # command kind or tool capability hint
    target: str | None = None


@dataclass(frozen=True)
class Plan:
    steps: tuple[PlanStep, ...]
    label: TaskLabel

    def __post_init__(self):
        if not self.steps:
            raise ValueError("a plan needs at least one step")

    @property
    def targets(self) -> tuple[str, ...]:
        seen: list[str] = []
        for step in self.steps:
            if step.target and step.target not in seen:
                seen.append(step.target)
        return tuple(seen)
