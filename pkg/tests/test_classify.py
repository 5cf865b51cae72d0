"""Complexity scoring, independence verdicts and calibration."""

import random

import numpy as np
import pytest

from dronelang.classify import (
    CalibrationExample,
    ComplexityConfig,
    DegenerateLabels,
    KnowledgeBase,
    TaskFeatures,
    bundled_calibration,
    bundled_knowledge,
    calibrate,
    classify_complexity,
    classify_independence,
    complexity_score,
    extract_features,
)
from dronelang.nlu import AutonomousInstruction, extract_keywords
from dronelang.sim import bundled_world, load_world
from dronelang.tasks import COMPLEX, INDEPENDENT, SIMPLE, TOOL_ASSISTED, TaskRequest

EMPTY_WORLD = "world empty\nstart 10 10 0 yaw 0\n"

# two monitoring points on a straight east line, one danger ditch between
TWO_POINT_WORLD = """
world twopoint
start 5 5 0 yaw 0
monitor alpha 15 5 1
monitor beta  25 5 1
danger ditch 18 4 0 20 6 3
"""


def test_features_takeoff_move_in_empty_world():
    world = load_world(EMPTY_WORLD)
    req = TaskRequest("take off and move forward 5 meters", "empty")
    f = extract_features(req, world)
    assert (f.monitor_points, f.danger_regions, f.action_count) == (0, 0, 2)


def test_features_two_points_one_danger_four_actions():
    world = load_world(TWO_POINT_WORLD)
    req = TaskRequest("take off, go to alpha, go to beta, then land", "twopoint")
    f = extract_features(req, world)
    assert (f.monitor_points, f.danger_regions, f.action_count) == (2, 1, 4)


def test_features_corridor_intersection_matches_sampling_oracle():
    # brute-force oracle: sample the corridor every 5 mm and count danger
    # boxes that come within 1 m of any sample
    world = load_world(TWO_POINT_WORLD)
    start = np.array([5.0, 5.0, 1.0])
    a = np.array([15.0, 5.0, 1.0])
    b = np.array([25.0, 5.0, 1.0])
    points = []
    for p, q in [(start, a), (a, b)]:
        n = int(np.linalg.norm(q - p) / 0.005)
        for t in np.linspace(0.0, 1.0, n):
            points.append(p + t * (q - p))
    points = np.array(points)
    hit = 0
    for box in world.dangers:
        lo, hi = np.array(box.lo), np.array(box.hi)
        d = np.linalg.norm(
            np.maximum(np.maximum(lo - points, 0.0), points - hi), axis=1
        )
        if np.any(d <= 1.0):
            hit += 1
    req = TaskRequest("take off, go to alpha, go to beta, then land", "twopoint")
    assert extract_features(req, world).danger_regions == hit == 1


def test_features_open_search_is_autonomous():
    world = load_world(EMPTY_WORLD)
    req = TaskRequest("search for a specific location", "empty")
    with pytest.raises(AutonomousInstruction):
        extract_features(req, world)


def test_complexity_zero_case():
    score = complexity_score(TaskFeatures(0, 0, 0), ComplexityConfig())
    assert score.total == 0.0
    assert classify_complexity(score, ComplexityConfig()) == SIMPLE


def test_complexity_hand_evaluation():
    cfg = ComplexityConfig()
    score = complexity_score(TaskFeatures(2, 1, 4), cfg)
    assert score.state == 3.0
    assert score.motion == 4.0
    assert score.total == 3.5


def test_complexity_scale_doubling():
    f = TaskFeatures(2, 1, 4)
    base = ComplexityConfig()
    doubled = ComplexityConfig(point_scale=2, danger_scale=2, action_scale=2)
    assert complexity_score(f, doubled).total == 2 * complexity_score(f, base).total


def test_threshold_boundary_is_simple():
    cfg = ComplexityConfig(threshold=4.0)
    # C_task == theta stays Simple
    score = complexity_score(TaskFeatures(4, 0, 4), cfg)
    assert score.total == cfg.threshold
    assert classify_complexity(score, cfg) == SIMPLE


def test_monotonicity_in_every_feature():
    rng = random.Random(7)
    for _ in range(500):
        cfg = ComplexityConfig(
            state_weight=rng.uniform(0, 2),
            motion_weight=rng.uniform(0, 2),
            point_scale=rng.uniform(0, 3),
            danger_scale=rng.uniform(0, 3),
            action_scale=rng.uniform(0, 3),
            threshold=rng.uniform(0.1, 10),
        )
        f = TaskFeatures(rng.randrange(8), rng.randrange(8), rng.randrange(8))
        base = complexity_score(f, cfg).total
        for bump in (
            TaskFeatures(f.monitor_points + 1, f.danger_regions, f.action_count),
            TaskFeatures(f.monitor_points, f.danger_regions + 1, f.action_count),
            TaskFeatures(f.monitor_points, f.danger_regions, f.action_count + 1),
        ):
            assert complexity_score(bump, cfg).total >= base


def test_verdict_invariant_under_uniform_scaling():
    rng = random.Random(11)
    for _ in range(500):
        cfg = ComplexityConfig(
            point_scale=rng.uniform(0.1, 3),
            danger_scale=rng.uniform(0.1, 3),
            action_scale=rng.uniform(0.1, 3),
            threshold=rng.uniform(0.5, 8),
        )
        c = rng.uniform(0.1, 10)
        scaled = ComplexityConfig(
            state_weight=cfg.state_weight * c,
            motion_weight=cfg.motion_weight * c,
            point_scale=cfg.point_scale,
            danger_scale=cfg.danger_scale,
            action_scale=cfg.action_scale,
            threshold=cfg.threshold * c,
        )
        f = TaskFeatures(rng.randrange(10), rng.randrange(10), rng.randrange(10))
        assert classify_complexity(
            complexity_score(f, cfg), cfg
        ) == classify_complexity(complexity_score(f, scaled), scaled)


def test_independence_vacuous_empty_set():
    kb = KnowledgeBase(frozenset(), frozenset())
    assert classify_independence(frozenset(), kb) == INDEPENDENT


def test_independence_avoidance_words_flag_tool():
    kb = bundled_knowledge()
    keywords = extract_keywords("Move forward 5 meters and avoid obstacles in time")
    assert classify_independence(keywords, kb) == TOOL_ASSISTED
    assert "avoid" not in kb.total and "obstacle" not in kb.total


def test_independence_subset_brute_force_equivalence():
    # oracle: per-keyword membership scan over every subset of a 6-token set
    kb = KnowledgeBase(frozenset({"kitchen", "sofa"}), frozenset({"move", "go"}))
    universe = ["kitchen", "sofa", "move", "go", "avoid", "track"]
    for mask in range(64):
        keywords = frozenset(t for i, t in enumerate(universe) if mask & (1 << i))
        brute = all(any(k == known for known in kb.total) for k in keywords)
        verdict = classify_independence(keywords, kb)
        assert verdict == (INDEPENDENT if brute else TOOL_ASSISTED)


def test_independence_monotone_in_system_knowledge():
    rng = random.Random(3)
    vocab = [f"tok{i}" for i in range(12)]
    for _ in range(200):
        system = frozenset(t for t in vocab if rng.random() < 0.4)
        internet = frozenset(t for t in vocab if rng.random() < 0.3)
        kb = KnowledgeBase(system, internet)
        keywords = frozenset(t for t in vocab if rng.random() < 0.4)
        extra = rng.choice(vocab)
        bigger = KnowledgeBase(system | {extra}, internet)
        if classify_independence(keywords, kb) == INDEPENDENT:
            assert classify_independence(keywords, bigger) == INDEPENDENT


def test_calibrate_separable_toy_set():
    # gold = complex iff action count >= 5; a zero-error config must exist
    examples = [
        CalibrationExample(TaskFeatures(0, 0, n), COMPLEX if n >= 5 else SIMPLE)
        for n in range(1, 10)
    ]
    cfg = calibrate(examples)
    errors = sum(
        1
        for ex in examples
        if classify_complexity(complexity_score(ex.features, cfg), cfg) != ex.gold
    )
    assert errors == 0


def test_calibrate_rejects_single_class():
    examples = [
        CalibrationExample(TaskFeatures(0, 0, n), SIMPLE) for n in range(1, 5)
    ]
    with pytest.raises(DegenerateLabels):
        calibrate(examples)


def test_calibrate_bundled_returns_default_config():
    cfg = calibrate(bundled_calibration())
    assert (
        cfg.point_scale,
        cfg.danger_scale,
        cfg.action_scale,
        cfg.threshold,
    ) == (1.0, 1.0, 1.0, 4.0)
    errors = sum(
        1
        for ex in bundled_calibration()
        if classify_complexity(complexity_score(ex.features, cfg), cfg) != ex.gold
    )
    assert errors == 0


def test_calibrated_defaults_classify_table_exemplars():
    cfg = calibrate(bundled_calibration())
    kb = bundled_knowledge()
    cells = {
        "Move forward 5 meters and take a picture": ("SI", "apartment"),
        "Move forward 5 meters and avoid obstacles in time": ("ST", "apartment_busy"),
        "Move forward 5 meters then take pictures for kitchen and two bedrooms": (
            "CI", "apartment",
        ),
        "Move forward 5 meters then take pictures for the kitchen and two "
        "bedrooms and avoid obstacles in time": ("CT", "apartment_busy"),
    }
    for text, (code, world_id) in cells.items():
        world = bundled_world(world_id)
        f = extract_features(TaskRequest(text, world_id), world)
        comp = classify_complexity(complexity_score(f, cfg), cfg)
        auto = classify_independence(extract_keywords(text), kb.with_scene(world))
        got = ("S" if comp == SIMPLE else "C") + ("I" if auto == INDEPENDENT else "T")
        assert got == code, (text, got, code)
