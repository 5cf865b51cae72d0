#!/usr/bin/env python3
"""Author and verify the bundled 160-task dataset.

Every record is checked against the live pipeline before being written:
the classified cell must equal the intended cell, the record must execute
successfully with tools enabled, and the ablation subset's prohibited-mode
outcomes must match the straight-corridor occupancy oracle exactly.

Run from the repo root:  python3 tools/make_dataset.py
"""

from __future__ import annotations

import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from dronelang.avoidance import OccupancyGrid
from dronelang.config import PipelineConfig
from dronelang.pipeline import classify_request, run_task
from dronelang.sim import bundled_world
from dronelang.tasks import TaskRequest

CONFIG = PipelineConfig()

# (id, world, phrasing, cell, instruction, criteria)
RECORDS: list[tuple[str, str, str, str, str, str]] = []


def rec(rid, world, phrasing, cell, instruction, criteria):
    RECORDS.append((rid, world, phrasing, cell, instruction, criteria))


BASE = "no_collision;segments_valid"


def photo(*names):
    return ";".join(f"photo:{n}" for n in names) + ";" + BASE


def visit(*names):
    return ";".join(f"visit:{n}" for n in names) + ";" + BASE


# ---- SI: simple independent ------------------------------------------------
for i, n in enumerate((2, 4, 6, 8, 9), start=1):
    rec(f"si-a{i:02d}", "apartment", "explicit", "SI",
        f"move forward {n} meters", BASE)
rec("si-a06", "apartment", "explicit", "SI",
    "take off, move forward 6 meters and land", BASE)
rec("si-a07", "apartment", "explicit", "SI",
    "move up 1 meter then move forward 4 meters", BASE)
rec("si-a08", "apartment", "explicit", "SI",
    "turn left 90 degrees and move forward 1 meter", BASE)
rec("si-a09", "apartment", "explicit", "SI",
    "hover for 3 seconds and take a picture", "photo_any;" + BASE)
rec("si-a10", "apartment", "explicit", "SI",
    "go to the sofa and take a picture", photo("sofa"))
rec("si-a11", "apartment", "explicit", "SI",
    "go to the plant and take a picture", photo("plant"))
rec("si-a12", "apartment", "explicit", "SI",
    "find the watermelon", photo("watermelon"))
rec("si-a13", "apartment", "explicit", "SI",
    "visit the kitchen", visit("kitchen"))
rec("si-a14", "apartment", "explicit", "SI",
    "go to bathroom two and take a picture", photo("bathroom_2"))
rec("si-a15", "apartment", "implicit", "SI",
    "I want to eat watermelon, but I don't know where it is", photo("watermelon"))
rec("si-a16", "apartment", "implicit", "SI",
    "show me the sofa", photo("sofa"))
rec("si-a17", "apartment", "implicit", "SI",
    "I wonder what the desk looks like", photo("desk"))
rec("si-a18", "apartment", "implicit", "SI",
    "I would like to see the tv", photo("tv"))
rec("si-a19", "apartment", "implicit", "SI",
    "find out where the mirror is", photo("mirror"))
rec("si-a20", "apartment", "implicit", "SI",
    "I need a look at the laptop", photo("laptop"))
for i, n in enumerate((5, 10, 15, 20), start=1):
    rec(f"si-y{i:02d}", "yard", "explicit", "SI",
        f"move forward {n} meters", BASE)
rec("si-y05", "yard", "explicit", "SI",
    "take off, move forward 8 meters and land", BASE)
rec("si-y06", "yard", "explicit", "SI",
    "ascend 2 meters and move forward 10 meters", BASE)
rec("si-y07", "yard", "explicit", "SI",
    "inspect the solar panel", photo("solar_panel"))
rec("si-y08", "yard", "explicit", "SI",
    "go to the gate and take a picture of the sign", visit("gate") + ";photo:sign")
rec("si-y09", "yard", "explicit", "SI",
    "visit the water pump", visit("water_pump"))
rec("si-y10", "yard", "explicit", "SI",
    "examine the valve", photo("valve"))
rec("si-y11", "yard", "explicit", "SI",
    "go to the beacon and take a photo", photo("beacon"))
rec("si-y12", "yard", "explicit", "SI",
    "inspect the mast", photo("mast"))
rec("si-y13", "yard", "explicit", "SI",
    "move forward 12 meters and take a picture", "photo_any;" + BASE)
rec("si-y14", "yard", "explicit", "SI",
    "take off, hover for 2 seconds and land", BASE)
rec("si-y15", "yard", "implicit", "SI",
    "show me the antenna", photo("antenna"))
rec("si-y16", "yard", "implicit", "SI",
    "I want to check on the beacon", photo("beacon"))
rec("si-y17", "yard", "implicit", "SI",
    "where is the nest, show me", photo("nest"))
rec("si-y18", "yard", "implicit", "SI",
    "I would love a photo of the gate", photo("gate"))
rec("si-y19", "yard", "implicit", "SI",
    "find the sign for me", photo("sign"))
rec("si-y20", "yard", "implicit", "SI",
    "show me the water pump", photo("water_pump"))

# ---- ST: simple tool-assisted (busy worlds) ---------------------------------
rec("st-a01", "apartment_busy", "explicit", "ST",
    "Move forward 5 meters and avoid obstacles in time", BASE)
rec("st-a02", "apartment_busy", "explicit", "ST",
    "move forward 2 meters and avoid obstacles in time", BASE)
rec("st-a03", "apartment_busy", "explicit", "ST",
    "go to the plant and avoid obstacles in time", visit("plant"))
rec("st-a04", "apartment_busy", "explicit", "ST",
    "go to the poster and avoid obstacles in time", visit("poster"))
rec("st-a05", "apartment_busy", "explicit", "ST",
    "go to the shelf and dodge the obstacles", visit("shelf"))
rec("st-a06", "apartment_busy", "explicit", "ST",
    "go to the switch and avoid obstacles in time", visit("switch"))
rec("st-a07", "apartment_busy", "explicit", "ST",
    "find the vase and avoid obstacles in time", photo("vase"))
rec("st-a08", "apartment_busy", "explicit", "ST",
    "go to the lamp and avoid obstacles in time", visit("lamp"))
rec("st-a09", "apartment_busy", "explicit", "ST",
    "move back 2 meters and avoid obstacles in time", BASE)
rec("st-a10", "apartment_busy", "explicit", "ST",
    "take a picture of the plant and avoid obstacles in time", photo("plant"))
rec("st-a11", "apartment_busy", "explicit", "ST",
    "move forward 8 meters and avoid obstacles in time", BASE)
rec("st-a12", "apartment_busy", "explicit", "ST",
    "move up 1 meter and avoid obstacles in time", BASE)
rec("st-a13", "apartment_busy", "explicit", "ST",
    "visit the poster and avoid obstacles in time", visit("poster"))
rec("st-a14", "apartment_busy", "explicit", "ST",
    "take a photo of the switch and avoid obstacles in time", photo("switch"))
rec("st-a15", "apartment_busy", "implicit", "ST",
    "show me the plant, the hallway is cluttered", photo("plant"))
rec("st-a16", "apartment_busy", "implicit", "ST",
    "show me the shelf, watch out for the mess", photo("shelf"))
rec("st-a17", "apartment_busy", "implicit", "ST",
    "I want to see the poster, the place is messy", photo("poster"))
rec("st-a18", "apartment_busy", "implicit", "ST",
    "show me the switch, be careful of clutter", photo("switch"))
rec("st-a19", "apartment_busy", "implicit", "ST",
    "I want a look at the vase, things are blocked up everywhere", photo("vase"))
rec("st-a20", "apartment_busy", "implicit", "ST",
    "show me the lamp, mind the clutter", photo("lamp"))
rec("st-y01", "yard_busy", "explicit", "ST",
    "go to the gate and avoid obstacles in time", visit("gate"))
rec("st-y02", "yard_busy", "explicit", "ST",
    "move forward 10 meters and avoid obstacles in time", BASE)
rec("st-y03", "yard_busy", "explicit", "ST",
    "go to the beacon and avoid obstacles in time", visit("beacon"))
rec("st-y04", "yard_busy", "explicit", "ST",
    "inspect the antenna and avoid obstacles in time", photo("antenna"))
rec("st-y05", "yard_busy", "explicit", "ST",
    "go to the water pump and dodge the obstacles", visit("water_pump"))
rec("st-y06", "yard_busy", "explicit", "ST",
    "go to the flag and avoid obstacles in time", visit("flag"))
rec("st-y07", "yard_busy", "explicit", "ST",
    "go to the rock and watch out for obstacles", visit("rock"))
rec("st-y08", "yard_busy", "explicit", "ST",
    "take a picture of the nest and avoid obstacles in time", photo("nest"))
rec("st-y09", "yard_busy", "explicit", "ST",
    "move forward 18 meters and avoid obstacles in time", BASE)
rec("st-y10", "yard_busy", "explicit", "ST",
    "examine the solar panel and avoid obstacles in time", photo("solar_panel"))
rec("st-y11", "yard_busy", "explicit", "ST",
    "move up 2 meters and avoid obstacles in time", BASE)
rec("st-y12", "yard_busy", "explicit", "ST",
    "find the sign and avoid obstacles in time", photo("sign"))
rec("st-y13", "yard_busy", "explicit", "ST",
    "go to the mast and avoid obstacles in time", visit("mast"))
rec("st-y14", "yard_busy", "explicit", "ST",
    "take a photo of the valve and avoid obstacles in time", photo("valve"))
rec("st-y15", "yard_busy", "implicit", "ST",
    "show me the beacon, the field is littered", photo("beacon"))
rec("st-y16", "yard_busy", "implicit", "ST",
    "show me the flag, there is mess around", photo("flag"))
rec("st-y17", "yard_busy", "implicit", "ST",
    "I want to see the antenna, the yard is cluttered", photo("antenna"))
rec("st-y18", "yard_busy", "implicit", "ST",
    "show me the gate, watch for the mess", photo("gate"))
rec("st-y19", "yard_busy", "implicit", "ST",
    "I want a photo of the rock, things look blocked", photo("rock"))
rec("st-y20", "yard_busy", "implicit", "ST",
    "show me the valve, the area is crowded", photo("valve"))

# ---- CI: complex independent -------------------------------------------------
for i, n in enumerate((5, 3, 4, 6, 7), start=1):
    rec(f"ci-a{i:02d}", "apartment", "explicit", "CI",
        f"Move forward {n} meters then take pictures for kitchen and two bedrooms",
        photo("kitchen", "bedroom_1", "bedroom_2"))
rec("ci-a06", "apartment", "explicit", "CI",
    "take pictures for the kitchen and all bedrooms, then return home",
    photo("kitchen", "bedroom_1", "bedroom_2", "bedroom_3"))
rec("ci-a07", "apartment", "explicit", "CI",
    "go to the kitchen and take a picture, then go to bedroom one and take a "
    "picture, then go to bedroom two and take a picture",
    photo("kitchen", "bedroom_1", "bedroom_2"))
rec("ci-a08", "apartment", "explicit", "CI",
    "visit the kitchen, both living rooms and bedroom three and take pictures",
    visit("kitchen", "living_room_1", "living_room_2", "bedroom_3"))
rec("ci-a09", "apartment", "explicit", "CI",
    "take pictures for both living rooms and both bathrooms, then return home",
    photo("living_room_1", "living_room_2", "bathroom_1", "bathroom_2"))
rec("ci-a10", "apartment", "explicit", "CI",
    "move forward 4 meters, then take pictures for bedroom two, bedroom three "
    "and the kitchen",
    photo("bedroom_2", "bedroom_3", "kitchen"))
rec("ci-a11", "apartment", "explicit", "CI",
    "go to all bedrooms and take pictures, then return home",
    visit("bedroom_1", "bedroom_2", "bedroom_3"))
rec("ci-a12", "apartment", "explicit", "CI",
    "Move forward 5 meters then take pictures for the kitchen and both "
    "bedrooms and hover for 2 seconds",
    photo("kitchen", "bedroom_1", "bedroom_2"))
rec("ci-a13", "apartment", "explicit", "CI",
    "Move forward 6 meters then take pictures for kitchen, bedroom one and "
    "bedroom three",
    photo("kitchen", "bedroom_1", "bedroom_3"))
rec("ci-a14", "apartment", "explicit", "CI",
    "take pictures for the kitchen and two bedrooms, then return home",
    photo("kitchen", "bedroom_1", "bedroom_2"))
rec("ci-a15", "apartment", "implicit", "CI",
    "show me the kitchen and both bedrooms",
    photo("kitchen", "bedroom_1", "bedroom_2"))
rec("ci-a16", "apartment", "implicit", "CI",
    "I want to see the kitchen and all bedrooms",
    photo("kitchen", "bedroom_1", "bedroom_2", "bedroom_3"))
rec("ci-a17", "apartment", "implicit", "CI",
    "I want pictures of the kitchen, bedroom one and bedroom two",
    photo("kitchen", "bedroom_1", "bedroom_2"))
rec("ci-a18", "apartment", "implicit", "CI",
    "show me both living rooms and the kitchen",
    photo("living_room_1", "living_room_2", "kitchen"))
rec("ci-a19", "apartment", "implicit", "CI",
    "show me bedroom one, bedroom two and bedroom three",
    photo("bedroom_1", "bedroom_2", "bedroom_3"))
rec("ci-a20", "apartment", "implicit", "CI",
    "I would like to see the kitchen, the sofa and both bedrooms",
    photo("kitchen", "sofa", "bedroom_1", "bedroom_2"))
rec("ci-y01", "yard", "explicit", "CI",
    "inspect the antenna, the water pump and the beacon",
    photo("antenna", "water_pump", "beacon"))
rec("ci-y02", "yard", "explicit", "CI",
    "inspect the gate, the mast and the antenna",
    photo("gate", "mast", "antenna"))
rec("ci-y03", "yard", "explicit", "CI",
    "visit the gate, the mast, the antenna and the beacon and take pictures",
    visit("gate", "mast", "antenna", "beacon"))
rec("ci-y04", "yard", "explicit", "CI",
    "inspect the solar panel, the gate and the antenna",
    photo("solar_panel", "gate", "antenna"))
rec("ci-y05", "yard", "explicit", "CI",
    "take photos of the antenna, the beacon, the water pump and the mast, "
    "then return home",
    photo("antenna", "beacon", "water_pump", "mast"))
rec("ci-y06", "yard", "explicit", "CI",
    "inspect the beacon, the water pump and the antenna",
    photo("beacon", "water_pump", "antenna"))
rec("ci-y07", "yard", "explicit", "CI",
    "inspect the mast, the gate and the solar panel",
    photo("mast", "gate", "solar_panel"))
rec("ci-y08", "yard", "explicit", "CI",
    "inspect the water pump, the beacon and the mast",
    photo("water_pump", "beacon", "mast"))
rec("ci-y09", "yard", "explicit", "CI",
    "Move forward 10 meters then inspect the beacon, the water pump and the antenna",
    photo("beacon", "water_pump", "antenna"))
rec("ci-y10", "yard", "explicit", "CI",
    "inspect the antenna, the mast and the gate",
    photo("antenna", "mast", "gate"))
rec("ci-y11", "yard", "explicit", "CI",
    "inspect the beacon, the mast and the water pump",
    photo("beacon", "mast", "water_pump"))
rec("ci-y12", "yard", "explicit", "CI",
    "visit the solar panel, the gate, the mast and the antenna and take pictures",
    visit("solar_panel", "gate", "mast", "antenna"))
rec("ci-y13", "yard", "explicit", "CI",
    "inspect the gate, the antenna and the beacon",
    photo("gate", "antenna", "beacon"))
rec("ci-y14", "yard", "explicit", "CI",
    "Move forward 8 meters then inspect the gate, the mast and the antenna",
    photo("gate", "mast", "antenna"))
rec("ci-y15", "yard", "implicit", "CI",
    "show me the antenna, the water pump and the beacon",
    photo("antenna", "water_pump", "beacon"))
rec("ci-y16", "yard", "implicit", "CI",
    "I want to see the gate, the mast and the antenna",
    photo("gate", "mast", "antenna"))
rec("ci-y17", "yard", "implicit", "CI",
    "show me the beacon, the mast and the water pump",
    photo("beacon", "mast", "water_pump"))
rec("ci-y18", "yard", "implicit", "CI",
    "I want pictures of the solar panel, the gate and the mast",
    photo("solar_panel", "gate", "mast"))
rec("ci-y19", "yard", "implicit", "CI",
    "show me the water pump, the antenna and the gate",
    photo("water_pump", "antenna", "gate"))
rec("ci-y20", "yard", "implicit", "CI",
    "I would like to see the mast, the antenna and the beacon",
    photo("mast", "antenna", "beacon"))

# ---- CT: complex tool-assisted (busy worlds) ----------------------------------
for i, n in enumerate((5, 2, 4, 6, 7), start=1):
    rec(f"ct-a{i:02d}", "apartment_busy", "explicit", "CT",
        f"Move forward {n} meters then take pictures for the kitchen and two "
        "bedrooms and avoid obstacles in time",
        photo("kitchen", "bedroom_1", "bedroom_2"))
rec("ct-a06", "apartment_busy", "explicit", "CT",
    "take pictures for the kitchen and all bedrooms and avoid obstacles in time",
    photo("kitchen", "bedroom_1", "bedroom_2", "bedroom_3"))
rec("ct-a07", "apartment_busy", "explicit", "CT",
    "go to the kitchen and take a picture, then go to bedroom one and take a "
    "picture, then go to bedroom two and take a picture, avoiding obstacles in time",
    photo("kitchen", "bedroom_1", "bedroom_2"))
rec("ct-a08", "apartment_busy", "explicit", "CT",
    "visit the kitchen, both living rooms and bedroom three and take pictures "
    "and avoid obstacles in time",
    visit("kitchen", "living_room_1", "living_room_2", "bedroom_3"))
rec("ct-a09", "apartment_busy", "explicit", "CT",
    "take pictures for both living rooms and both bathrooms and dodge the obstacles",
    photo("living_room_1", "living_room_2", "bathroom_1", "bathroom_2"))
rec("ct-a10", "apartment_busy", "explicit", "CT",
    "move forward 4 meters, then take pictures for bedroom two, bedroom three "
    "and the kitchen and avoid obstacles in time",
    photo("bedroom_2", "bedroom_3", "kitchen"))
rec("ct-a11", "apartment_busy", "explicit", "CT",
    "go to all bedrooms and take pictures and avoid obstacles in time",
    visit("bedroom_1", "bedroom_2", "bedroom_3"))
rec("ct-a12", "apartment_busy", "explicit", "CT",
    "Move forward 5 meters then take pictures for the kitchen and both "
    "bedrooms and hover for 2 seconds and avoid obstacles in time",
    photo("kitchen", "bedroom_1", "bedroom_2"))
rec("ct-a13", "apartment_busy", "explicit", "CT",
    "Move forward 6 meters then take pictures for kitchen, bedroom one and "
    "bedroom three and avoid obstacles in time",
    photo("kitchen", "bedroom_1", "bedroom_3"))
rec("ct-a14", "apartment_busy", "explicit", "CT",
    "take pictures for the kitchen and two bedrooms, then return home, "
    "avoiding obstacles in time",
    photo("kitchen", "bedroom_1", "bedroom_2"))
rec("ct-a15", "apartment_busy", "implicit", "CT",
    "show me the kitchen and both bedrooms, the hallway is cluttered",
    photo("kitchen", "bedroom_1", "bedroom_2"))
rec("ct-a16", "apartment_busy", "implicit", "CT",
    "I want to see the kitchen and all bedrooms, the place is messy",
    photo("kitchen", "bedroom_1", "bedroom_2", "bedroom_3"))
rec("ct-a17", "apartment_busy", "implicit", "CT",
    "I want pictures of the kitchen, bedroom one and bedroom two, watch out "
    "for the clutter",
    photo("kitchen", "bedroom_1", "bedroom_2"))
rec("ct-a18", "apartment_busy", "implicit", "CT",
    "show me both living rooms and the kitchen, the corridor is blocked up",
    photo("living_room_1", "living_room_2", "kitchen"))
rec("ct-a19", "apartment_busy", "implicit", "CT",
    "show me bedroom one, bedroom two and bedroom three, mind the mess",
    photo("bedroom_1", "bedroom_2", "bedroom_3"))
rec("ct-a20", "apartment_busy", "implicit", "CT",
    "I would like to see the kitchen, the sofa and both bedrooms, everything "
    "is littered",
    photo("kitchen", "sofa", "bedroom_1", "bedroom_2"))
rec("ct-y01", "yard_busy", "explicit", "CT",
    "inspect the antenna, the water pump and the beacon and avoid obstacles in time",
    photo("antenna", "water_pump", "beacon"))
rec("ct-y02", "yard_busy", "explicit", "CT",
    "inspect the gate, the mast and the antenna and avoid obstacles in time",
    photo("gate", "mast", "antenna"))
rec("ct-y03", "yard_busy", "explicit", "CT",
    "visit the gate, the mast, the antenna and the beacon and take pictures "
    "and avoid obstacles in time",
    visit("gate", "mast", "antenna", "beacon"))
rec("ct-y04", "yard_busy", "explicit", "CT",
    "inspect the solar panel, the gate and the antenna and dodge the obstacles",
    photo("solar_panel", "gate", "antenna"))
rec("ct-y05", "yard_busy", "explicit", "CT",
    "take photos of the antenna, the beacon, the water pump and the mast and "
    "avoid obstacles in time",
    photo("antenna", "beacon", "water_pump", "mast"))
rec("ct-y06", "yard_busy", "explicit", "CT",
    "inspect the beacon, the water pump and the antenna and avoid obstacles in time",
    photo("beacon", "water_pump", "antenna"))
rec("ct-y07", "yard_busy", "explicit", "CT",
    "inspect the mast, the gate and the solar panel and avoid obstacles in time",
    photo("mast", "gate", "solar_panel"))
rec("ct-y08", "yard_busy", "explicit", "CT",
    "inspect the water pump, the beacon and the nest and avoid obstacles in time",
    photo("water_pump", "beacon", "nest"))
rec("ct-y09", "yard_busy", "explicit", "CT",
    "Move forward 10 meters then inspect the beacon, the water pump and the "
    "antenna and avoid obstacles in time",
    photo("beacon", "water_pump", "antenna"))
rec("ct-y10", "yard_busy", "explicit", "CT",
    "inspect the antenna, the mast and the gate and avoid obstacles in time",
    photo("antenna", "mast", "gate"))
rec("ct-y11", "yard_busy", "explicit", "CT",
    "inspect the beacon, the nest and the water pump and avoid obstacles in time",
    photo("beacon", "nest", "water_pump"))
rec("ct-y12", "yard_busy", "explicit", "CT",
    "visit the solar panel, the gate, the mast and the antenna and take "
    "pictures and avoid obstacles in time",
    visit("solar_panel", "gate", "mast", "antenna"))
rec("ct-y13", "yard_busy", "explicit", "CT",
    "inspect the gate, the antenna and the beacon and avoid obstacles in time",
    photo("gate", "antenna", "beacon"))
rec("ct-y14", "yard_busy", "explicit", "CT",
    "Move forward 8 meters then inspect the gate, the mast and the antenna "
    "and avoid obstacles in time",
    photo("gate", "mast", "antenna"))
rec("ct-y15", "yard_busy", "implicit", "CT",
    "show me the antenna, the water pump and the beacon, the field is littered",
    photo("antenna", "water_pump", "beacon"))
rec("ct-y16", "yard_busy", "implicit", "CT",
    "I want to see the gate, the mast and the antenna, the yard is cluttered",
    photo("gate", "mast", "antenna"))
rec("ct-y17", "yard_busy", "implicit", "CT",
    "show me the beacon, the nest and the water pump, watch out for the mess",
    photo("beacon", "nest", "water_pump"))
rec("ct-y18", "yard_busy", "implicit", "CT",
    "I want pictures of the solar panel, the gate and the mast, the area is crowded",
    photo("solar_panel", "gate", "mast"))
rec("ct-y19", "yard_busy", "implicit", "CT",
    "show me the water pump, the antenna and the gate, things look blocked",
    photo("water_pump", "antenna", "gate"))
rec("ct-y20", "yard_busy", "implicit", "CT",
    "I would like to see the mast, the antenna and the beacon, mind the clutter",
    photo("mast", "antenna", "beacon"))

ABLATION = [
    "st-a01", "st-a02", "st-a03", "st-a04", "st-a05", "st-a06", "st-a09",
    "st-a12", "st-y01", "st-y02", "st-y03", "st-y04", "st-y05", "st-y06",
    "st-y07", "st-y08", "st-y10", "st-y11", "st-y13", "st-y14",
]


def straight_corridor_blocked(world, instruction) -> bool:
    """Oracle: does the straight-line flight cross any occupied grid cell?"""
    from dronelang.nlu import parse_instruction
    from dronelang.classify import corridor_waypoints

    grid = OccupancyGrid.from_world(world)
    parsed = parse_instruction(instruction, world)
    corridor = corridor_waypoints(parsed.actions, world)
    for a, b in zip(corridor[:-1], corridor[1:]):
        span = float(np.linalg.norm(b - a))
        n = max(2, int(span / 0.02) + 1)
        for t in np.linspace(0.0, 1.0, n):
            p = a + t * (b - a)
            if grid.occupied[grid.cell_of(p)]:
                return True
    return False


def main():
    assert len(RECORDS) == 160, len(RECORDS)
    ids = [r[0] for r in RECORDS]
    assert len(set(ids)) == 160, "duplicate record ids"
    worlds = {w: bundled_world(w) for w in
              ("apartment", "apartment_busy", "yard", "yard_busy")}
    per_cell: dict[str, int] = {}
    failures = []
    blocked_marks: dict[str, bool] = {}
    for rid, world_id, phrasing, cell, instruction, criteria in RECORDS:
        world = worlds[world_id]
        req = TaskRequest(instruction, world_id, phrasing)
        canonical, features, score, label = classify_request(req, world, CONFIG)
        if label.code != cell:
            failures.append(
                f"{rid}: wanted {cell}, got {label.code} "
                f"f=({features.monitor_points},{features.danger_regions},"
                f"{features.action_count}) C={score.total}"
            )
            continue
        per_cell[cell] = per_cell.get(cell, 0) + 1
        run = run_task(req, world, CONFIG)
        if not run.report.success:
            failures.append(f"{rid}: enabled-mode execution failed: {run.report.failure}")
            continue
        ok, missing = evaluate(run, criteria, world)
        if not ok:
            failures.append(f"{rid}: criteria not met: {missing}")
        if rid in ABLATION:
            blocked_marks[rid] = straight_corridor_blocked(world, canonical.instruction)

    if failures:
        print("DATASET PROBLEMS:")
        for f in failures:
            print(" ", f)
        sys.exit(1)
    assert per_cell == {"SI": 40, "ST": 40, "CI": 40, "CT": 40}, per_cell

    # ablation: prohibited mode must fail exactly the blocked records
    prohibited = replace(CONFIG, tools_enabled=False)
    mism = []
    for rid in ABLATION:
        rec_row = next(r for r in RECORDS if r[0] == rid)
        _, world_id, phrasing, _, instruction, criteria = rec_row
        world = worlds[world_id]
        run = run_task(TaskRequest(instruction, world_id, phrasing), world, prohibited)
        ok = run.report.success and evaluate(run, criteria, world)[0]
        if ok == blocked_marks[rid]:
            mism.append(f"{rid}: prohibited ok={ok} but oracle blocked={blocked_marks[rid]}")
    if mism:
        print("ABLATION MISMATCHES:")
        for m in mism:
            print(" ", m)
        sys.exit(1)
    n_blocked = sum(blocked_marks.values())
    print(f"ablation subset: {n_blocked} blocked / {len(ABLATION)}")
    assert 0 < n_blocked < len(ABLATION)

    out = ROOT / "src" / "dronelang" / "data" / "tasks.txt"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("# id|world|phrasing|label|instruction|criteria\n")
        for row in RECORDS:
            fh.write("|".join(row) + "\n")
    abl = ROOT / "src" / "dronelang" / "data" / "ablation_st.txt"
    with open(abl, "w", encoding="utf-8") as fh:
        fh.write("# ST ablation fixture: record ids, one per line\n")
        for rid in ABLATION:
            fh.write(rid + "\n")
    print(f"wrote {out} ({len(RECORDS)} records) and {abl} ({len(ABLATION)} ids)")


def evaluate(run, criteria, world):
    """Delegate to the bench criteria checker (single source of truth)."""
    from dronelang.bench import TaskRecord, record_success
    from dronelang.tasks import TaskLabel

    record = TaskRecord(
        "tmp", world.name, "explicit", TaskLabel.from_code("SI"),
        "unused", tuple(criteria.split(";")),
    )
    return record_success(run, record, world, CONFIG)


if __name__ == "__main__":
    main()
