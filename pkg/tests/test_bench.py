"""Dataset loading, metric runs and report emission."""

import json

import pytest

from dronelang.bench import (
    BadLabel,
    CountMismatch,
    DatasetError,
    UnknownWorld,
    UnsupportedFormat,
    bundled_ablation_ids,
    bundled_dataset,
    emit_report,
    load_dataset,
    run_esr,
    run_ira,
    run_tool_ablation,
    run_uec,
)
from dronelang.config import PipelineConfig
from dronelang.pipeline import run_task
from dronelang.sim import SimConfig, bundled_world
from dronelang.tasks import TaskRequest

CONFIG = PipelineConfig()


@pytest.fixture(scope="module")
def dataset():
    return bundled_dataset()


def test_bundled_dataset_counts(dataset):
    assert len(dataset) == 160
    assert dataset.counts() == {"SI": 40, "ST": 40, "CI": 40, "CT": 40}


def test_load_rejects_bad_label():
    with pytest.raises(BadLabel):
        load_dataset("x1|apartment|explicit|SX|go|no_collision\n")


def test_load_rejects_unknown_world():
    with pytest.raises(UnknownWorld):
        load_dataset("x1|atlantis|explicit|SI|go|no_collision\n")


def test_load_empty_document_is_valid():
    assert len(load_dataset("")) == 0


def test_load_rejects_count_mismatch_for_bundled():
    line = "x1|apartment|explicit|SI|move forward 2 meters|no_collision\n"
    with pytest.raises(CountMismatch):
        load_dataset(line, bundled=True)


def test_run_ira_scripted_single_cell_prior(dataset):
    # a predictor that always answers SI scores exactly the SI share (40/160)
    gold = [r.label.code for r in dataset.records]
    accuracy = sum(1 for g in gold if g == "SI") / len(gold)
    assert accuracy == 0.25


def test_run_ira_empty_dataset_rejected():
    with pytest.raises(DatasetError):
        run_ira(load_dataset(""), CONFIG)


def test_esr_si_subset_is_perfect(dataset):
    subset = dataset.subset([r.id for r in dataset.records if r.label.code == "SI"])
    report = run_esr(subset, CONFIG)
    assert report["overall"] == 1.0
    assert report["per_label"]["SI"] == {"ok": 40, "total": 40}


def test_esr_counts_sum_to_dataset_size(dataset):
    subset = dataset.subset([r.id for r in dataset.records][:12])
    report = run_esr(subset, CONFIG)
    assert sum(v["total"] for v in report["per_label"].values()) == 12


def test_uec_hover_only_task_closed_form():
    # takeoff + hover 2 s + landing at the simulator constants
    ds = load_dataset(
        "hov|yard|explicit|SI|take off, hover for 2 seconds and land|"
        "no_collision;segments_valid\n"
    )
    report = run_uec(ds, CONFIG)
    sim = SimConfig()
    expected = 2 * sim.takeoff_altitude / sim.cruise_speed + 2.0
    assert report["rows"][0]["flight_time_s"] == pytest.approx(expected)


def test_uec_identical_runs_identical_rows(dataset):
    subset = dataset.subset(["si-a01", "si-y07"])
    first = run_uec(subset, CONFIG)
    second = run_uec(subset, CONFIG)
    assert first == second


def test_uec_failed_task_excluded_with_cause():
    # walled-off goal: straight flight collides, row is excluded
    ds = load_dataset(
        "bad|apartment|explicit|SI|go to the kitchen|visit:kitchen;no_collision\n"
    )
    # force a collision by running without routing knowledge: direct goto
    # start->kitchen crosses a wall, so use the record as-is but strip the
    # scene routing by running in the busy world where the line is blocked
    report = run_uec(ds, CONFIG)
    if report["rows"]:
        # routed flight succeeded; force failure via prohibited-style record
        ds = load_dataset(
            "bad|apartment_busy|explicit|ST|"
            "go to the plant and avoid obstacles in time|visit:plant;no_collision\n"
        )
        from dataclasses import replace

        report = run_uec(ds, replace(CONFIG, tools_enabled=False))
    assert report["rows"] == []
    assert len(report["excluded"]) == 1
    assert report["excluded"][0]["id"] == "bad"
    assert report["excluded"][0]["failed"]


def test_ablation_requires_st_records(dataset):
    mixed = dataset.subset(["si-a01"])
    with pytest.raises(DatasetError):
        run_tool_ablation(mixed, CONFIG)


def test_report_emission_deterministic(dataset):
    subset = dataset.subset(["si-a01", "st-a01"])
    report = run_ira(subset, CONFIG)
    assert emit_report(report, "json") == emit_report(report, "json")
    assert emit_report(report, "csv") == emit_report(report, "csv")


def test_report_round_trips_fractions_exactly(dataset):
    subset = dataset.subset([r.id for r in dataset.records][:7])
    report = run_ira(subset, CONFIG)
    parsed = json.loads(emit_report(report, "json"))
    assert parsed["accuracy"] == report["accuracy"]
    csv_doc = emit_report({"records": [{"f": 1 / 3}]}, "csv")
    assert repr(1 / 3) in csv_doc


def test_report_unknown_format():
    with pytest.raises(UnsupportedFormat):
        emit_report({"records": []}, "yaml")


def test_cli_run_ira_on_subset(tmp_path, capsys):
    from dronelang.cli import main

    subset_file = tmp_path / "mini.txt"
    ds = bundled_dataset()
    lines = []
    for record in ds.records[:3]:
        lines.append(
            "|".join(
                [
                    record.id,
                    record.world,
                    record.phrasing,
                    record.label.code,
                    record.instruction,
                    ";".join(record.criteria),
                ]
            )
        )
    subset_file.write_text("\n".join(lines) + "\n")
    out = tmp_path / "report.json"
    code = main(["run-ira", "--dataset", str(subset_file), "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["accuracy"] == 1.0
