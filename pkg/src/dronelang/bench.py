"""Benchmark harness over the bundled task set.

Loads the 160-task dataset, drives the full pipeline per record, and
reports intent recognition accuracy (IRA), execution success rate (ESR),
energy consumption (UEC) and the tool-ablation comparison, all as
deterministic machine-readable documents.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from .commands import MachineLanguageVector, parse_command, validate_mlv
from .config import PipelineConfig
from .pipeline import TaskRun, classify_request, run_task
from .sim import WorldModel, bundled_world, bundled_world_ids, capture_achieved
from .tasks import LABEL_CODES, TaskLabel, TaskRequest


class DatasetError(ValueError):
    pass


class BadLabel(DatasetError):
    pass


class UnknownWorld(DatasetError):
    pass


class CountMismatch(DatasetError):
    pass


class UnsupportedFormat(ValueError):
    pass


KNOWN_CRITERIA = ("no_collision", "segments_valid", "photo_any")


@dataclass(frozen=True)
class TaskRecord:
    id: str
    world: str
    phrasing: str
    label: TaskLabel
    instruction: str
    criteria: tuple[str, ...]

    def request(self) -> TaskRequest:
        return TaskRequest(self.instruction, self.world, self.phrasing)


@dataclass(frozen=True)
class Dataset:
    records: tuple[TaskRecord, ...]

    def __len__(self) -> int:
        return len(self.records)

    def counts(self) -> dict[str, int]:
        out = {code: 0 for code in LABEL_CODES}
        for record in self.records:
            out[record.label.code] += 1
        return out

    def subset(self, ids) -> "Dataset":
        wanted = set(ids)
        return Dataset(tuple(r for r in self.records if r.id in wanted))


def load_dataset(text: str, bundled: bool = False) -> Dataset:
    """Parse the line-oriented dataset format (docs/file_formats.md).

    With `bundled=True` the 160-records / 40-per-label invariant of the
    shipped fixture is enforced.
    """
    known_worlds = set(bundled_world_ids())
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("|")
        if len(parts) != 6:
            raise DatasetError(f"line {lineno}: expected 6 |-separated fields")
        rid, world, phrasing, code, instruction, criteria = parts
        try:
            label = TaskLabel.from_code(code)
        except ValueError as exc:
            raise BadLabel(f"line {lineno}: {exc}") from None
        if world not in known_worlds:
            raise UnknownWorld(f"line {lineno}: world {world!r} is not bundled")
        tokens = tuple(t for t in criteria.split(";") if t)
        if not tokens:
            raise DatasetError(f"line {lineno}: empty completion criteria")
        for token in tokens:
            base = token.split(":", 1)[0]
            if token not in KNOWN_CRITERIA and base not in ("photo", "visit"):
                raise DatasetError(f"line {lineno}: unknown criterion {token!r}")
        records.append(TaskRecord(rid, world, phrasing, label, instruction, tokens))
    ds = Dataset(tuple(records))
    if bundled:
        if len(ds) != 160 or set(ds.counts().values()) != {40}:
            raise CountMismatch(f"bundled set must be 160 = 4 x 40, got {ds.counts()}")
    return ds


def bundled_dataset() -> Dataset:
    text = resources.files("dronelang.data").joinpath("tasks.txt").read_text()
    return load_dataset(text, bundled=True)


def bundled_ablation_ids() -> list[str]:
    text = resources.files("dronelang.data").joinpath("ablation_st.txt").read_text()
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


# -- completion criteria -------------------------------------------------------

def visited(trajectory: np.ndarray, target: str, world: WorldModel) -> bool:
    if trajectory.shape[0] == 0:
        return False
    points = trajectory[:, 1:4]
    if target in world.rooms:
        return bool(np.any(world.rooms[target].contains_many(points)))
    ref = world.resolve_point(target)
    return bool(np.any(np.linalg.norm(points - ref[None, :], axis=1) <= 2.0))


def evaluate_criteria(run: TaskRun, record: TaskRecord, world: WorldModel,
                      config: PipelineConfig) -> tuple[bool, list[str]]:
    """Check every completion criterion; returns (all met, failed tokens)."""
    trajectory = run.session.trajectory()
    failed = []
    for token in record.criteria:
        if token == "no_collision":
            ok = all(s.cause != "CollisionDetected" for s in run.report.segments)
        elif token == "segments_valid":
            ok = all(
                validate_mlv(
                    MachineLanguageVector(tuple(parse_command(c) for c in s.commands)),
                    config.constraints,
                ).accepted
                for s in run.report.segments
            )
        elif token == "photo_any":
            ok = bool(run.session.photos)
        elif token.startswith("photo:"):
            target = token[len("photo:"):]
            ok = any(
                capture_achieved(p.position, target, world) for p in run.session.photos
            )
        elif token.startswith("visit:"):
            ok = visited(trajectory, token[len("visit:"):], world)
        else:
            raise DatasetError(f"unknown criterion {token!r}")
        if not ok:
            failed.append(token)
    return not failed, failed


def record_success(run: TaskRun, record: TaskRecord, world: WorldModel,
                   config: PipelineConfig) -> tuple[bool, list[str]]:
    met, failed = evaluate_criteria(run, record, world, config)
    if not run.report.success:
        failed = [f"execution:{run.report.failure}"] + failed
    return run.report.success and met, failed


# -- metric runs ----------------------------------------------------------------

def _world_cache(ds: Dataset) -> dict[str, WorldModel]:
    return {w: bundled_world(w) for w in sorted({r.world for r in ds.records})}


def run_ira(ds: Dataset, config: PipelineConfig) -> dict:
    """Fraction of records whose predicted 2-D label equals gold."""
    if not len(ds):
        raise DatasetError("empty dataset")
    worlds = _world_cache(ds)
    confusion = {g: {p: 0 for p in LABEL_CODES} for g in LABEL_CODES}
    rows = []
    hits = 0
    for record in ds.records:
        world = worlds[record.world]
        *_, label = classify_request(record.request(), world, config)
        confusion[record.label.code][label.code] += 1
        match = label.code == record.label.code
        hits += match
        rows.append({"id": record.id, "gold": record.label.code, "predicted": label.code})
    return {
        "metric": "IRA",
        "accuracy": hits / len(ds),
        "total": len(ds),
        "confusion": confusion,
        "records": rows,
    }


def _run_all(ds: Dataset, config: PipelineConfig) -> list[tuple[TaskRecord, TaskRun, bool, list[str]]]:
    worlds = _world_cache(ds)
    out = []
    for record in ds.records:
        world = worlds[record.world]
        run = run_task(record.request(), world, config)
        ok, failed = record_success(run, record, world, config)
        out.append((record, run, ok, failed))
    return out


def _esr_from_runs(runs) -> dict:
    per_label = {code: {"ok": 0, "total": 0} for code in LABEL_CODES}
    rows = []
    for record, run, ok, failed in runs:
        per_label[record.label.code]["total"] += 1
        per_label[record.label.code]["ok"] += ok
        rows.append({"id": record.id, "label": record.label.code, "ok": ok,
                     "failed": failed})
    total = sum(v["total"] for v in per_label.values())
    oks = sum(v["ok"] for v in per_label.values())
    rates = {
        code: (v["ok"] / v["total"] if v["total"] else None)
        for code, v in per_label.items()
    }
    return {
        "metric": "ESR",
        "overall": oks / total if total else None,
        "per_label": per_label,
        "per_label_rate": rates,
        "records": rows,
    }


def run_esr(ds: Dataset, config: PipelineConfig) -> dict:
    """Success = every completion criterion met and every segment valid."""
    if not len(ds):
        raise DatasetError("empty dataset")
    return _esr_from_runs(_run_all(ds, config))


def run_uec(ds: Dataset, config: PipelineConfig) -> dict:
    """Flight time and integrated energy per successful task."""
    if not len(ds):
        raise DatasetError("empty dataset")
    runs = _run_all(ds, config)
    rows = []
    excluded = []
    sums: dict[str, list[float]] = {}
    for record, run, ok, failed in runs:
        if not ok:
            excluded.append({"id": record.id, "failed": failed})
            continue
        rows.append(
            {
                "id": record.id,
                "label": record.label.code,
                "flight_time_s": run.flight_time,
                "energy_j": run.energy,
            }
        )
        sums.setdefault(record.label.code, []).append(run.energy)
    means = {
        code: {
            "energy_j": float(np.mean(values)),
            "count": len(values),
        }
        for code, values in sorted(sums.items())
    }
    return {
        "metric": "UEC",
        "rows": rows,
        "excluded": excluded,
        "per_label_mean": means,
    }


def run_tool_ablation(ds: Dataset, config: PipelineConfig) -> dict:
    """Paired ESR with tools enabled vs artificially prohibited.

    Prohibited mode still classifies the task (the label is unchanged) but
    executes direct. The subset must be all-ST.
    """
    if not len(ds):
        raise DatasetError("empty dataset")
    for record in ds.records:
        if record.label.code != "ST":
            raise DatasetError(f"{record.id} is {record.label.code}, ablation needs ST")
    enabled = _esr_from_runs(_run_all(ds, config))
    prohibited_cfg = replace(config, tools_enabled=False)
    prohibited = _esr_from_runs(_run_all(ds, prohibited_cfg))
    rows = []
    for e_row, p_row in zip(enabled["records"], prohibited["records"]):
        rows.append(
            {
                "id": e_row["id"],
                "enabled_ok": e_row["ok"],
                "prohibited_ok": p_row["ok"],
            }
        )
    return {
        "metric": "tool_ablation",
        "enabled_esr": enabled["overall"],
        "prohibited_esr": prohibited["overall"],
        "records": rows,
    }


def full_bench(config: PipelineConfig, ds: Dataset | None = None) -> dict:
    """IRA + ESR + UEC in one pass, with run metadata for reproducibility."""
    ds = ds or bundled_dataset()
    ira = run_ira(ds, config)
    runs = _run_all(ds, config)
    esr = _esr_from_runs(runs)
    uec_rows = []
    excluded = []
    sums: dict[str, list[float]] = {}
    for record, run, ok, failed in runs:
        if not ok:
            excluded.append({"id": record.id, "failed": failed})
            continue
        uec_rows.append(
            {
                "id": record.id,
                "label": record.label.code,
                "flight_time_s": run.flight_time,
                "energy_j": run.energy,
            }
        )
        sums.setdefault(record.label.code, []).append(run.energy)
    uec = {
        "metric": "UEC",
        "rows": uec_rows,
        "excluded": excluded,
        "per_label_mean": {
            code: {"energy_j": float(np.mean(v)), "count": len(v)}
            for code, v in sorted(sums.items())
        },
    }
    return {
        "metadata": {
            "backend": config.backend,
            "prompt_style": config.prompt_style,
            "config_digest": config.digest(),
            "dataset_size": len(ds),
        },
        "ira": ira,
        "esr": esr,
        "uec": uec,
    }


# -- report emission -------------------------------------------------------------

def emit_report(report: dict, fmt: str = "json") -> str:
    """Serialize a report deterministically.

    JSON is canonical (sorted keys); csv flattens the per-record rows of
    whichever metric the report carries. Fractions use repr round-trip
    formatting in both formats.
    """
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=1) + "\n"
    if fmt == "csv":
        return _emit_csv(report)
    raise UnsupportedFormat(f"unknown report format {fmt!r}")


def _emit_csv(report: dict) -> str:
    rows = report.get("records") or report.get("rows")
    if rows is None:
        # composite report: concatenate each metric section
        chunks = []
        for key in sorted(report):
            section = report[key]
            if isinstance(section, dict) and (
                section.get("records") or section.get("rows")
            ):
                chunks.append(f"# {key}")
                chunks.append(_emit_csv(section).rstrip("\n"))
        return "\n".join(chunks) + "\n"
    columns = sorted({key for row in rows for key in row})
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for column in columns:
            value = row.get(column, "")
            if isinstance(value, float):
                cells.append(repr(value))
            elif isinstance(value, bool):
                cells.append(str(int(value)))
            elif isinstance(value, (list, tuple)):
                cells.append("+".join(str(v) for v in value))
            else:
                cells.append(str(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
