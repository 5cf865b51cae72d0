"""Language front: keywords, clause parsing, target resolution, rewriting."""

import pytest

from dronelang import nlu
from dronelang.nlu import (
    AutonomousInstruction,
    NoActionFound,
    UnresolvableTarget,
    extract_keywords,
    find_scene_names,
    parse_instruction,
    rewrite_implicit,
)
from dronelang.sim import bundled_world, load_world


@pytest.fixture(scope="module")
def apartment():
    return bundled_world("apartment")


def kinds(parsed):
    return [a.kind for a in parsed.actions]


def test_keywords_drop_stopwords_units_and_numbers():
    # hand application of the normalization table
    assert extract_keywords("Move forward 5 meters and take a picture") == {
        "move", "forward", "take", "picture",
    }


def test_keywords_single_stopword_is_empty():
    assert extract_keywords("the") == frozenset()


def test_keywords_lemmatize_plurals():
    assert extract_keywords("avoid obstacles in time") == {"avoid", "obstacle", "time"}


def test_keywords_deterministic():
    text = "Move forward 5 meters then take pictures for kitchen and two bedrooms"
    assert extract_keywords(text) == extract_keywords(text)


def test_parse_goto_and_photo(apartment):
    parsed = parse_instruction("go to the kitchen and take a photo", apartment)
    assert kinds(parsed) == ["goto", "capture"]
    assert parsed.targets == ("kitchen",)


def test_parse_no_action(apartment):
    with pytest.raises(NoActionFound):
        parse_instruction("hello", apartment)


def test_parse_table_action_expansion(apartment):
    text = (
        "Move forward 5 meters then take pictures for the kitchen "
        "and two bedrooms and avoid obstacles in time"
    )
    parsed = parse_instruction(text, apartment)
    assert kinds(parsed) == ["move", "capture", "capture", "capture", "avoid"]
    assert parsed.targets == ("kitchen", "bedroom_1", "bedroom_2")
    assert parsed.uses_tool


def test_parse_open_search_is_autonomous(apartment):
    with pytest.raises(AutonomousInstruction):
        parse_instruction("search for a specific location", apartment)


def test_parse_unknown_room_is_unresolvable(apartment):
    with pytest.raises(UnresolvableTarget):
        parse_instruction("go to the balcony", apartment)


def test_parse_known_object_search_resolves(apartment):
    parsed = parse_instruction("find the watermelon", apartment)
    assert kinds(parsed) == ["goto", "capture"]
    assert parsed.targets == ("watermelon",)


def test_parse_move_magnitudes(apartment):
    parsed = parse_instruction(
        "take off, move forward 5 meters, ascend 2 meters and land", apartment
    )
    assert kinds(parsed) == ["takeoff", "move", "move", "land"]
    assert parsed.actions[1].direction == "forward"
    assert parsed.actions[1].magnitude == 5.0
    assert parsed.actions[2].direction == "up"
    assert parsed.actions[2].magnitude == 2.0


def test_parse_rotation_signs(apartment):
    left = parse_instruction("turn left 90 degrees", apartment)
    right = parse_instruction("turn right 45 degrees", apartment)
    around = parse_instruction("turn around", apartment)
    assert left.actions[0].magnitude == 90.0
    assert right.actions[0].magnitude == -45.0
    assert around.actions[0].magnitude == 180.0


@pytest.mark.parametrize(
    "phrase,expect",
    [
        ("bedroom two", ["bedroom_2"]),
        ("the second bedroom", ["bedroom_2"]),
        ("two bedrooms", ["bedroom_1", "bedroom_2"]),
        ("both bedrooms", ["bedroom_1", "bedroom_2"]),
        ("all bedrooms", ["bedroom_1", "bedroom_2", "bedroom_3"]),
        ("the bedrooms", ["bedroom_1", "bedroom_2", "bedroom_3"]),
        ("living room one", ["living_room_1"]),
        ("the living rooms", ["living_room_1", "living_room_2"]),
        ("kitchen and the plant", ["kitchen", "plant"]),
    ],
)
def test_scene_name_resolution(apartment, phrase, expect):
    assert find_scene_names(phrase, apartment) == expect


def test_rewrite_implicit_object(apartment):
    text = "I want to eat watermelon, but I don't know where it is"
    assert (
        rewrite_implicit(text, apartment)
        == "go to watermelon and take a picture"
    )


def test_rewrite_implicit_hazard_appends_avoidance(apartment):
    text = "show me the sofa, the hallway is cluttered"
    rewritten = rewrite_implicit(text, apartment)
    assert rewritten.endswith("avoid obstacles in time")
    parsed = parse_instruction(rewritten, apartment)
    assert parsed.uses_tool


def test_rewrite_implicit_unknown_raises(apartment):
    with pytest.raises(AutonomousInstruction):
        rewrite_implicit("I would like some fresh air", apartment)


def test_rewrite_round_trips_through_parser(apartment):
    text = "show me the kitchen and both bedrooms"
    rewritten = rewrite_implicit(text, apartment)
    parsed = parse_instruction(rewritten, apartment)
    assert parsed.targets == ("kitchen", "bedroom_1", "bedroom_2")
    assert kinds(parsed) == ["goto", "capture"] * 3


def test_parser_is_deterministic(apartment):
    text = "go to the kitchen, the plant and bedroom three and take pictures"
    first = parse_instruction(text, apartment)
    for _ in range(5):
        assert parse_instruction(text, apartment) == first
