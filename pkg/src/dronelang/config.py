"""Pipeline configuration: one frozen bundle with a reproducibility digest."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace

from .classify import ComplexityConfig
from .commands import MlvConstraints
from .energy import PowerModel
from .sim import SimConfig


@dataclass(frozen=True)
class PipelineConfig:
    backend: str = "reference"
    prompt_style: str = "EIP"
    tools_enabled: bool = True
    memory_capacity: int = 32
    complexity: ComplexityConfig = field(default_factory=ComplexityConfig)
    constraints: MlvConstraints = field(default_factory=MlvConstraints)
    sim: SimConfig = field(default_factory=SimConfig)
    power: PowerModel = field(default_factory=PowerModel)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        kwargs = dict(data)
        for name, sub in (
            ("complexity", ComplexityConfig),
            ("constraints", MlvConstraints),
            ("sim", SimConfig),
            ("power", PowerModel),
        ):
            if name in kwargs and isinstance(kwargs[name], dict):
                kwargs[name] = sub(**kwargs[name])
        known = {f.name for f in fields(cls)}
        unknown = set(kwargs) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def with_style(self, style: str | None) -> "PipelineConfig":
        return self if style is None else replace(self, prompt_style=style)
