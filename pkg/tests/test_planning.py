"""Prompt styles, failure memory, backends and plan parsing."""

import pytest

from dronelang.planning import (
    FailureMemory,
    PlanningContext,
    ReferenceBackend,
    ScriptedBackend,
    UnparseablePlan,
    build_prompt,
    extract_scene_and_actions,
    load_memory,
    parse_plan_text,
    plan,
    prompt_style,
    record_failure,
    render_plan_text,
    save_memory,
)
from dronelang.commands import CommandError, parse_command
from dronelang.nlu import NoActionFound
from dronelang.sim import bundled_world, load_world
from dronelang.tasks import COMPLEX, INDEPENDENT, SIMPLE, TaskLabel, TaskRequest

REFERENCE = ReferenceBackend()
SI_LABEL = TaskLabel(SIMPLE, INDEPENDENT)
CI_LABEL = TaskLabel(COMPLEX, INDEPENDENT)


@pytest.fixture(scope="module")
def apartment():
    return bundled_world("apartment")


def ctx_for(text, world, scene="apartment"):
    return extract_scene_and_actions(TaskRequest(text, scene), world)


def test_prompt_style_invariants():
    rp = prompt_style("RP")
    cp = prompt_style("CP")
    eip = prompt_style("EIP")
    assert not rp.scene_knowledge and not rp.task_templates and not rp.failure_exemplars
    assert cp.scene_knowledge and cp.task_templates and not cp.failure_exemplars
    assert eip.scene_knowledge and eip.task_templates and eip.failure_exemplars
    with pytest.raises(ValueError):
        prompt_style("XP")


def test_extract_scene_and_actions(apartment):
    ctx = ctx_for("go to the kitchen and take a photo", apartment)
    assert ctx.scene_keywords == {"kitchen"}
    assert ctx.task_actions == ("goto", "capture")


def test_extract_scene_no_action(apartment):
    with pytest.raises(NoActionFound):
        ctx_for("hello", apartment)


def test_extract_scene_table_ct_actions(apartment):
    ctx = ctx_for(
        "Move forward 5 meters then take pictures for the kitchen and two "
        "bedrooms and avoid obstacles in time",
        apartment,
    )
    assert ctx.task_actions == ("move", "capture", "capture", "capture", "avoid")


def test_rp_prompt_is_role_only(apartment):
    req = TaskRequest("move forward 5 meters", "apartment")
    ctx = ctx_for(req.instruction, apartment)
    prompt = build_prompt(prompt_style("RP"), ctx, req)
    assert "## role" in prompt and "## request" in prompt
    assert "## scene" not in prompt
    assert "## templates" not in prompt
    assert "## failures" not in prompt


def test_cp_prompt_embeds_every_object_coordinate():
    world = load_world(
        "world tiny\nstart 1 1 0\n"
        "photo cup 5 5 1\nphoto plate 6 5 1\nmonitor desk 7 7 1\n"
    )
    req = TaskRequest("go to the desk and take a photo", "tiny")
    ctx = extract_scene_and_actions(req, world)
    prompt = build_prompt(prompt_style("CP"), ctx, req)
    # the scene block carries one line per named object, coordinates included
    assert "photo cup 5 5 1" in prompt
    assert "photo plate 6 5 1" in prompt
    assert "monitor desk 7 7 1" in prompt


def test_eip_prompt_embeds_every_failure(apartment):
    req = TaskRequest("go to the kitchen and take a photo", "apartment")
    ctx = ctx_for(req.instruction, apartment)
    memory = FailureMemory(capacity=8)
    memory = record_failure(
        {"instruction": "fly somewhere", "plan": "1. teleport", "rule": "unknown_verb"},
        memory,
    )
    memory = record_failure(
        {"instruction": "do a lap", "plan": "1. move forward 999", "rule": "too_long"},
        memory,
    )
    prompt = build_prompt(prompt_style("EIP"), ctx, req, memory)
    assert "unknown_verb" in prompt
    assert "too_long" in prompt
    assert prompt.count("- request ") == 2


def test_prompts_are_byte_identical(apartment):
    req = TaskRequest("go to the kitchen and take a photo", "apartment")
    ctx = ctx_for(req.instruction, apartment)
    memory = record_failure(
        {"instruction": "x", "plan": "1. y", "rule": "too_long"}, FailureMemory()
    )
    first = build_prompt(prompt_style("EIP"), ctx, req, memory, complexity="simple")
    for _ in range(5):
        again = build_prompt(prompt_style("EIP"), ctx, req, memory, complexity="simple")
        assert again == first


def test_record_failure_dedup_and_eviction():
    memory = FailureMemory(capacity=8)
    failure = {"instruction": "task a", "plan": "1. bad", "rule": "too_long"}
    memory = record_failure(failure, memory)
    assert len(memory.entries) == 1
    memory = record_failure(failure, memory)
    assert len(memory.entries) == 1
    # sequence-replay oracle: push 9 distinct, expect the first one evicted
    memory = FailureMemory(capacity=8)
    for i in range(9):
        memory = record_failure(
            {"instruction": f"task {i}", "plan": f"1. bad {i}", "rule": "too_long"},
            memory,
        )
    assert len(memory.entries) == 8
    digests = [e.digest for e in memory.entries]
    from dronelang.planning import request_digest

    assert request_digest("task 0") not in digests
    assert request_digest("task 8") in digests


def test_memory_save_load_round_trip(tmp_path):
    memory = FailureMemory(capacity=4)
    memory = record_failure(
        {"instruction": "task a", "plan": "1. bad", "rule": "code_in_plan"}, memory
    )
    path = tmp_path / "memory.json"
    save_memory(memory, path)
    assert load_memory(path) == memory
    assert load_memory(tmp_path / "missing.json") == FailureMemory()


def test_plan_simple_two_steps(apartment):
    req = TaskRequest("move forward 5 meters and take a picture", "apartment")
    result = plan(req, SI_LABEL, REFERENCE, prompt_style("EIP"), apartment)
    assert len(result.steps) == 2
    assert result.steps[0].action == "move"
    assert result.steps[1].action == "capture"


def test_plan_complex_covers_each_target_once(apartment):
    req = TaskRequest(
        "Move forward 5 meters then take pictures for kitchen and two bedrooms",
        "apartment",
    )
    result = plan(req, CI_LABEL, REFERENCE, prompt_style("EIP"), apartment)
    targets = [s.target for s in result.steps if s.target]
    # permutation-coverage oracle: every named target exactly once
    assert sorted(targets) == ["bedroom_1", "bedroom_2", "kitchen"]


def test_plan_rejects_free_prose(apartment):
    req = TaskRequest("move forward 5 meters", "apartment")
    prose = ScriptedBackend(["sure, I will fly forward five meters now"])
    with pytest.raises(UnparseablePlan):
        plan(req, SI_LABEL, prose, prompt_style("EIP"), apartment)


def test_plan_rejects_command_syntax_in_steps(apartment):
    req = TaskRequest("move forward 5 meters", "apartment")
    coded = ScriptedBackend(["PLAN\n1. move forward 5 | action=move\nEND"])
    with pytest.raises(UnparseablePlan):
        plan(req, SI_LABEL, coded, prompt_style("EIP"), apartment)


def test_plan_steps_never_parse_as_commands(apartment):
    req = TaskRequest(
        "Move forward 5 meters then take pictures for kitchen and two bedrooms",
        "apartment",
    )
    result = plan(req, CI_LABEL, REFERENCE, prompt_style("EIP"), apartment)
    for step in result.steps:
        with pytest.raises(CommandError):
            parse_command(step.description)


def test_plan_deterministic(apartment):
    req = TaskRequest("go to the kitchen and take a photo", "apartment")
    first = plan(req, SI_LABEL, REFERENCE, prompt_style("EIP"), apartment)
    for _ in range(3):
        assert plan(req, SI_LABEL, REFERENCE, prompt_style("EIP"), apartment) == first


def test_plan_text_round_trip():
    text = (
        "PLAN\n1. move forward 5 meters | action=move\n"
        "2. fly to kitchen and photograph it | action=capture target=kitchen\nEND"
    )
    steps = parse_plan_text(text)
    assert render_plan_text(steps) == text


@pytest.mark.parametrize(
    "bad",
    [
        "no markers at all",
        "PLAN\nEND",
        "PLAN\n2. wrong start | action=move\nEND",
        "PLAN\n1. fine | action=move\n3. jump | action=move\nEND",
        "PLAN\n1. odd attrs | wat\nEND",
    ],
)
def test_plan_text_rejects_malformed(bad):
    with pytest.raises(UnparseablePlan):
        parse_plan_text(bad)


def test_eip_replans_never_repeat_recorded_violations():
    # every corpus failure, re-planned under EIP with that failure in
    # memory and the reference backend, is clean of the recorded rule
    from dronelang.bench import bundled_dataset
    from dronelang.commands import parse_command as parse_cmd
    from dronelang.commands import segment_plan, validate_mlv
    from dronelang.config import PipelineConfig
    from dronelang.execution import ExecutionDecision, translate
    from dronelang.pipeline import classify_request, run_task
    from dronelang.planning import bundled_failures
    from dronelang.sim import bundled_world
    from dronelang.tasks import TaskRequest

    config = PipelineConfig()
    corpus = bundled_failures()
    assert len(corpus) >= 5
    for failure in corpus:
        memory = record_failure(failure, FailureMemory())
        # pick the world that can resolve the instruction's names
        world_id = "apartment_busy" if "plant" in failure["instruction"] else "apartment"
        world = bundled_world(world_id)
        from dronelang.nlu import NluError, parse_instruction

        try:
            parse_instruction(failure["instruction"], world)
            phrasing = "explicit"
        except NluError:
            phrasing = "implicit"
        req = TaskRequest(failure["instruction"], world_id, phrasing)
        canonical, *_, label = classify_request(req, world, config)
        new_plan = plan(
            TaskRequest(canonical.instruction, world_id),
            label,
            REFERENCE,
            prompt_style("EIP"),
            world,
            memory,
        )
        rule = failure["rule"]
        if rule == "code_in_plan":
            for step in new_plan.steps:
                with pytest.raises(CommandError):
                    parse_cmd(step.description)
        elif rule in ("too_long", "unknown_verb"):
            commands = translate(new_plan, REFERENCE, world, ExecutionDecision("direct"))
            for segment in segment_plan(commands, config.constraints):
                assert validate_mlv(segment, config.constraints).accepted
        elif rule == "collision":
            run = run_task(req, world, config)
            assert run.report.success, run.report.failure
        elif rule == "unparseable_plan":
            assert new_plan.steps   # parsed into a well-formed plan
        else:
            raise AssertionError(f"unhandled corpus rule {rule!r}")
