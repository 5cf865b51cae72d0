"""Deterministic language front shared by the classifier, planner and executor.

Everything here is table-driven: a fixed stopword list and lemma table
(data/stopwords.txt, data/lemmas.txt), an ordered verb-phrase table, and a
scene-name matcher built from the world's registry. No statistics, no
embeddings; the same text always parses the same way.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .sim import WorldModel


class NluError(ValueError):
    pass


class NoActionFound(NluError):
    pass


class UnresolvableTarget(NluError):
    pass


class AutonomousInstruction(NluError):
    """Open-ended request with no computable targets (e.g. free search)."""


_TOKEN_RE = re.compile(r"[a-z0-9]+")
_ALPHA_RE = re.compile(r"[a-z]+")

_ARTICLES = frozenset({"a", "an", "the"})

_NUMBER_WORDS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
}
_ORDINAL_WORDS = {"first": 1, "second": 2, "third": 3, "fourth": 4, "fifth": 5}
_COUNT_ALL = frozenset({"all", "every"})
_COUNT_BOTH = frozenset({"both"})

HAZARD_CUES = frozenset(
    {"clutter", "cluttered", "messy", "mess", "blocked", "crowded",
     "litter", "littered", "careful", "carefully", "bumping", "hazard"}
)


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    text = resources.files("dronelang.data").joinpath("stopwords.txt").read_text()
    return frozenset(
        line.strip() for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


@lru_cache(maxsize=1)
def lemma_table() -> dict[str, str]:
    text = resources.files("dronelang.data").joinpath("lemmas.txt").read_text()
    table = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        surface, lemma = line.split()
        table[surface] = lemma
    return table


def lemma(token: str) -> str:
    return lemma_table().get(token, token)


def extract_keywords(instruction: str) -> frozenset[str]:
    """Lowercase, stopword-free, lemmatized content tokens."""
    if not instruction.strip():
        raise NluError("instruction must be non-empty")
    stops = stopwords()
    out = set()
    for token in _ALPHA_RE.findall(instruction.lower()):
        if token in stops:
            continue
        out.add(lemma(token))
    return frozenset(out)


@dataclass(frozen=True)
class Token:
    raw: str
    lemma: str

    @property
    def plural(self) -> bool:
        return self.raw != self.lemma and self.raw == self.lemma + "s"


def _tokenize(text: str) -> list[Token]:
    tokens = []
    for raw in _TOKEN_RE.findall(text.lower()):
        tokens.append(Token(raw, lemma(raw)))
    return tokens


# -- scene-name matching -----------------------------------------------------

@dataclass(frozen=True)
class _NameEntry:
    name: str            # canonical registry name, e.g. bedroom_2
    base: tuple[str, ...]  # lemma tokens, e.g. ("bedroom",)
    index: int | None    # trailing numeric suffix, e.g. 2


def _name_entries(world: WorldModel) -> list[_NameEntry]:
    entries = []
    for name in world.known_names():
        parts = name.split("_")
        index = None
        if parts[-1].isdigit():
            index = int(parts[-1])
            parts = parts[:-1]
        entries.append(_NameEntry(name, tuple(lemma(p) for p in parts), index))
    return entries


@dataclass
class _Matcher:
    """Greedy longest-match scene-name recognizer over a token span."""

    entries: list[_NameEntry]

    def groups(self) -> dict[tuple[str, ...], list[_NameEntry]]:
        by_base: dict[tuple[str, ...], list[_NameEntry]] = {}
        for entry in self.entries:
            by_base.setdefault(entry.base, []).append(entry)
        for members in by_base.values():
            members.sort(key=lambda e: (e.index is None, e.index or 0, e.name))
        return by_base

    def match(self, tokens: list[Token]) -> list[str]:
        by_base = self.groups()
        bases = sorted(by_base, key=lambda b: (-len(b), b))
        found: list[str] = []
        i = 0
        pending_count: int | None = None
        pending_ordinal: int | None = None
        while i < len(tokens):
            tok = tokens[i]
            matched = False
            for base in bases:
                n = len(base)
                span = tokens[i : i + n]
                if len(span) < n or tuple(t.lemma for t in span) != base:
                    continue
                members = by_base[base]
                j = i + n
                index = None
                # trailing index: "bedroom two" / "living room 1"
                if j < len(tokens):
                    nxt = tokens[j]
                    if nxt.raw.isdigit():
                        index = int(nxt.raw)
                        j += 1
                    elif nxt.raw in _NUMBER_WORDS and any(
                        e.index == _NUMBER_WORDS[nxt.raw] for e in members
                    ):
                        index = _NUMBER_WORDS[nxt.raw]
                        j += 1
                if index is None and pending_ordinal is not None:
                    index = pending_ordinal
                plural = tokens[i + n - 1].plural
                if index is not None:
                    for entry in members:
                        if entry.index == index:
                            found.append(entry.name)
                            break
                    else:
                        raise UnresolvableTarget(
                            f"no {'_'.join(base)} numbered {index}"
                        )
                elif pending_count is not None:
                    for entry in members[:pending_count]:
                        found.append(entry.name)
                elif plural:
                    found.extend(entry.name for entry in members)
                else:
                    found.append(members[0].name)
                pending_count = None
                pending_ordinal = None
                i = j
                matched = True
                break
            if matched:
                continue
            if tok.raw in _COUNT_ALL:
                pending_count = len(self.entries)
            elif tok.raw in _COUNT_BOTH:
                pending_count = 2
            elif tok.raw in _NUMBER_WORDS:
                pending_count = _NUMBER_WORDS[tok.raw]
            elif tok.raw in _ORDINAL_WORDS:
                pending_ordinal = _ORDINAL_WORDS[tok.raw]
            elif tok.raw not in _ARTICLES and tok.raw not in stopwords():
                # a fresh content word breaks any count/ordinal attachment
                pending_count = None
                pending_ordinal = None
            i += 1
        deduped: list[str] = []
        for name in found:
            if name not in deduped:
                deduped.append(name)
        return deduped


def find_scene_names(text: str, world: WorldModel) -> list[str]:
    """Known scene names mentioned in `text`, in mention order."""
    return _Matcher(_name_entries(world)).match(_tokenize(text))


# -- clause segmentation -----------------------------------------------------

# (pattern over lemma tokens with articles removed) -> clause kind.
# Longest-first match at each position; each hit opens a new clause.
_ACTION_PHRASES: list[tuple[tuple[str, ...], str]] = [
    (("take", "off"), "takeoff"),
    (("takeoff",), "takeoff"),
    (("lift", "off"), "takeoff"),
    (("launch",), "takeoff"),
    (("land",), "land"),
    (("hold", "position"), "hover"),
    (("hover",), "hover"),
    (("wait",), "hover"),
    (("go", "back", "home"), "return"),
    (("go", "back"), "return"),
    (("come", "back"), "return"),
    (("fly", "back"), "return"),
    (("return", "home"), "return"),
    (("return",), "return"),
    (("go", "to"), "goto"),
    (("goto",), "goto"),
    (("fly", "to"), "goto"),
    (("navigate", "to"), "goto"),
    (("head", "to"), "goto"),
    (("move", "to"), "goto"),
    (("visit",), "goto"),
    (("take", "picture"), "capture"),
    (("take", "photo"), "capture"),
    (("snap", "picture"), "capture"),
    (("snap", "photo"), "capture"),
    (("photo",), "capture"),
    (("picture",), "capture"),
    (("capture",), "capture"),
    (("avoid",), "avoid"),
    (("dodge",), "avoid"),
    (("watch", "out"), "avoid"),
    (("search", "for"), "find"),
    (("look", "for"), "find"),
    (("find",), "find"),
    (("locate",), "find"),
    (("inspect",), "inspect"),
    (("examine",), "inspect"),
    (("check", "on"), "inspect"),
    (("check",), "inspect"),
    (("turn", "around"), "turnaround"),
    (("rotate",), "rotate"),
    (("turn",), "rotate"),
    (("spin",), "rotate"),
    (("ascend",), "ascend"),
    (("rise",), "ascend"),
    (("climb",), "ascend"),
    (("descend",), "descend"),
    (("move",), "move"),
    (("fly",), "move"),
]


@dataclass
class Clause:
    kind: str
    span: list[Token] = field(default_factory=list)


def _clauses(text: str) -> list[Clause]:
    tokens = [t for t in _tokenize(text) if t.raw not in _ARTICLES]
    clauses: list[Clause] = []
    i = 0
    while i < len(tokens):
        hit = None
        for pattern, kind in _ACTION_PHRASES:
            n = len(pattern)
            if tuple(t.lemma for t in tokens[i : i + n]) == pattern:
                hit = (kind, n)
                break
        if hit is not None:
            clauses.append(Clause(hit[0]))
            i += hit[1]
            continue
        if clauses:
            clauses[-1].span.append(tokens[i])
        i += 1
    return clauses


def _first_number(span: list[Token]) -> float | None:
    for tok in span:
        if tok.raw.isdigit():
            return float(tok.raw)
        if tok.raw in _NUMBER_WORDS:
            return float(_NUMBER_WORDS[tok.raw])
        try:
            return float(tok.raw)
        except ValueError:
            continue
    return None


_DIRECTION_WORDS = {
    "forward": "forward", "forwards": "forward", "ahead": "forward",
    "back": "back", "backward": "back", "backwards": "back",
    "left": "left", "right": "right", "up": "up", "down": "down",
}


@dataclass(frozen=True)
class ActionItem:
    """One atomic action implied by the instruction."""

    kind: str                    # takeoff|land|hover|move|rotate|capture|goto|avoid
    target: str | None = None
    direction: str | None = None
    magnitude: float | None = None   # meters / seconds / degrees per kind


@dataclass(frozen=True)
class ParsedInstruction:
    text: str
    actions: tuple[ActionItem, ...]
    targets: tuple[str, ...]       # ordered, deduplicated scene names
    uses_tool: bool

    @property
    def action_count(self) -> int:
        return len(self.actions)


def _span_targets(clause: Clause, matcher: _Matcher) -> list[str]:
    return matcher.match(clause.span)


def parse_instruction(text: str, world: WorldModel) -> ParsedInstruction:
    """Expand an explicit instruction into its atomic action sequence.

    Raises NoActionFound when no verb matches, UnresolvableTarget when a
    navigation verb names nothing known, AutonomousInstruction for
    open-ended searches with no computable target.
    """
    clauses = _clauses(text)
    if not clauses:
        raise NoActionFound(f"no recognizable action in {text!r}")
    matcher = _Matcher(_name_entries(world))
    actions: list[ActionItem] = []
    for clause in clauses:
        kind = clause.kind
        if kind in ("takeoff", "land"):
            actions.append(ActionItem(kind))
        elif kind == "hover":
            seconds = _first_number(clause.span)
            actions.append(ActionItem("hover", magnitude=seconds if seconds else 2.0))
        elif kind == "move":
            direction = None
            for tok in clause.span:
                if tok.raw in _DIRECTION_WORDS:
                    direction = _DIRECTION_WORDS[tok.raw]
                    break
            if direction is None:
                # "move to X" without the particle reaching the pattern table
                names = _span_targets(clause, matcher)
                if names:
                    actions.extend(ActionItem("goto", target=n) for n in names)
                    continue
                raise NoActionFound(f"move without a direction in {text!r}")
            meters = _first_number(clause.span)
            actions.append(
                ActionItem("move", direction=direction, magnitude=meters if meters else 1.0)
            )
        elif kind == "ascend":
            meters = _first_number(clause.span)
            actions.append(ActionItem("move", direction="up", magnitude=meters if meters else 1.0))
        elif kind == "descend":
            meters = _first_number(clause.span)
            actions.append(ActionItem("move", direction="down", magnitude=meters if meters else 1.0))
        elif kind == "turnaround":
            actions.append(ActionItem("rotate", magnitude=180.0))
        elif kind == "rotate":
            degrees = _first_number(clause.span) or 90.0
            sign = 1.0
            words = {t.raw for t in clause.span}
            if {"right", "clockwise"} & words:
                sign = -1.0
            if {"left", "counterclockwise", "anticlockwise"} & words:
                sign = 1.0
            actions.append(ActionItem("rotate", magnitude=sign * degrees))
        elif kind == "capture":
            names = _span_targets(clause, matcher)
            if names:
                actions.extend(ActionItem("capture", target=n) for n in names)
            elif _content_tokens(clause.span):
                raise UnresolvableTarget(
                    f"cannot resolve photo target in {_span_text(clause.span)!r}"
                )
            else:
                actions.append(ActionItem("capture"))
        elif kind == "goto":
            names = _span_targets(clause, matcher)
            if not names:
                raise UnresolvableTarget(
                    f"cannot resolve destination in {_span_text(clause.span)!r}"
                )
            actions.extend(ActionItem("goto", target=n) for n in names)
        elif kind == "return":
            actions.append(ActionItem("goto", target="home"))
        elif kind == "find":
            names = _span_targets(clause, matcher)
            if not names:
                raise AutonomousInstruction(
                    f"open-ended search: {_span_text(clause.span)!r} names nothing known"
                )
            for name in names:
                actions.append(ActionItem("goto", target=name))
                actions.append(ActionItem("capture", target=name))
        elif kind == "inspect":
            names = _span_targets(clause, matcher)
            if not names:
                raise UnresolvableTarget(
                    f"cannot resolve inspection target in {_span_text(clause.span)!r}"
                )
            for name in names:
                actions.append(ActionItem("goto", target=name))
                actions.append(ActionItem("capture", target=name))
        elif kind == "avoid":
            actions.append(ActionItem("avoid"))
        else:  # pragma: no cover
            raise AssertionError(kind)
    targets: list[str] = []
    for action in actions:
        if action.target and action.target != "home" and action.target not in targets:
            targets.append(action.target)
    return ParsedInstruction(
        text=text,
        actions=tuple(actions),
        targets=tuple(targets),
        uses_tool=any(a.kind == "avoid" for a in actions),
    )


def _content_tokens(span: list[Token]) -> list[Token]:
    stops = stopwords()
    return [t for t in span if t.raw not in stops and not t.raw.isdigit()]


def _span_text(span: list[Token]) -> str:
    return " ".join(t.raw for t in span)


def rewrite_implicit(text: str, world: WorldModel) -> str:
    """Rewrite an implicit request into canonical explicit form.

    Every known scene name mentioned becomes a go-and-photograph leg;
    hazard cues append an avoidance clause. Raises AutonomousInstruction
    when nothing in the text resolves against the scene.
    """
    names = find_scene_names(text, world)
    if not names:
        raise AutonomousInstruction(
            f"implicit request names nothing known in scene: {text!r}"
        )
    tokens = {t.raw for t in _tokenize(text)} | {t.lemma for t in _tokenize(text)}
    legs = [f"go to {name.replace('_', ' ')} and take a picture" for name in names]
    rewritten = ", then ".join(legs)
    if tokens & HAZARD_CUES or "obstacle" in tokens:
        rewritten += " and avoid obstacles in time"
    return rewritten


def canonical_instruction(text: str, phrasing: str, world: WorldModel) -> str:
    if phrasing == "implicit":
        return rewrite_implicit(text, world)
    return text
