"""Story plan document model: hierarchy types, parsing, and constraint checks.

A plan is a single JSON document (``plan_version: 1``) holding the story spec,
chapter list, location library, scenes, and shot directives. ``parse_plan``
turns text into a :class:`StoryPlan` or reports every schema error at once;
``validate_plan`` runs the cross-object constraint checks and returns a report
keyed by stable violation codes.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from enum import Enum
from typing import Annotated, Callable, Iterable, Iterator, Optional

from pydantic import (
    BaseModel,
    Field,
    PlainSerializer,
    ValidationError,
    field_validator,
    model_validator,
)

PLAN_VERSION = 1

# Hard caps on the plan hierarchy. Chapter/location counts are soft ranges
# (warnings unless strict); the rest are errors.
CHAPTER_RANGE = (10, 20)
LOCATION_RANGE = (8, 12)
MAX_SHOT_CHARACTERS = 2
DIALOGUE_WINDOW = (0.0, 5.0)


class Emotion(str, Enum):
    NEUTRAL = "Neutral"
    ANGRY = "Angry"
    HAPPY = "Happy"
    SAD = "Sad"


class Pose(str, Enum):
    STANDING = "Standing"
    SITTING = "Sitting"
    WALKING = "Walking"
    RUNNING = "Running"
    REACHING = "Reaching"


class Interaction(str, Enum):
    NONE = "None"
    SHAKING_HANDS = "ShakingHands"
    HUGGING = "Hugging"
    TALKING = "Talking"
    HANDING_OVER_OBJECT = "HandingOverObject"


class ShotKind(str, Enum):
    NARRATIVE = "Narrative"
    TRANSITION = "Transition"


class Movement(str, Enum):
    ENTRY = "Entry"
    EXIT = "Exit"
    NO_CHANGE = "NoChange"
    COMBINATION = "Combination"


# Sets serialize as sorted lists so plan files are byte-stable.
NameSet = Annotated[
    set[str], PlainSerializer(lambda v: sorted(v), return_type=list[str])
]


class CharacterRef(BaseModel):
    name: str
    description: str = ""
    reference_image: Optional[str] = None

    @field_validator("name")
    @classmethod
    def _name_nonempty(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("character name must be nonempty")
        return value


class StorySpec(BaseModel):
    description: str
    characters: list[CharacterRef] = Field(min_length=1)

    @model_validator(mode="after")
    def _unique_names(self) -> "StorySpec":
        names = [c.name for c in self.characters]
        if len(set(names)) != len(names):
            raise ValueError("character names must be unique")
        return self

    def character_names(self) -> set[str]:
        return {c.name for c in self.characters}


class Chapter(BaseModel):
    index: int = Field(ge=1)
    summary: str
    characters: NameSet
    timeline: str = ""
    justification: str = ""


class LocationEntry(BaseModel):
    name: str
    background_description: str

    @field_validator("name")
    @classmethod
    def _single_token(cls, value: str) -> str:
        if not value or value.split() != [value]:
            raise ValueError("location name must be a single token")
        return value


class Scene(BaseModel):
    chapter_index: int = Field(ge=1)
    index: int = Field(ge=1)
    location_name: str
    characters: NameSet
    tone: str = ""
    shot_count: int

    @field_validator("shot_count")
    @classmethod
    def _odd(cls, value: int) -> int:
        if value < 1 or value % 2 == 0:
            raise ValueError("odd shot count required")
        return value


class Dialogue(BaseModel):
    text: str
    start: float
    end: float

    @model_validator(mode="after")
    def _window(self) -> "Dialogue":
        lo, hi = DIALOGUE_WINDOW
        if not (lo <= self.start <= self.end <= hi):
            raise ValueError(
                f"dialogue timing must satisfy {lo} <= start <= end <= {hi}"
            )
        return self


class TransitionMetadata(BaseModel):
    """Who moves between two adjacent narrative shots, and how.

    ``prev_chars`` records the cast of the preceding narrative shot; by
    scheduling convention the start set equals it and the end set equals the
    following narrative shot's cast. ``exiting``/``entering`` are the set
    differences and ``movement`` the four-way classification of the pair.
    """

    prev_chars: NameSet
    start_chars: NameSet
    end_chars: NameSet
    exiting: NameSet
    entering: NameSet
    movement: Movement
    description: str = ""


class ShotDirective(BaseModel):
    chapter_index: int = Field(ge=1)
    scene_index: int = Field(ge=1)
    index: int = Field(ge=1)
    kind: ShotKind
    emotions: dict[str, Emotion] = Field(default_factory=dict)
    poses: dict[str, Pose] = Field(default_factory=dict)
    interaction: Interaction = Interaction.NONE
    dialogue: Optional[Dialogue] = None
    keyframe_prompt: Optional[str] = None
    video_prompt: str = ""
    camera: str = ""
    transition: Optional[TransitionMetadata] = None

    @model_validator(mode="after")
    def _structure(self) -> "ShotDirective":
        if set(self.emotions) != set(self.poses):
            raise ValueError("emotions and poses must cover the same characters")
        expected = ShotKind.NARRATIVE if self.index % 2 == 1 else ShotKind.TRANSITION
        if self.kind != expected:
            raise ValueError(
                f"shot index {self.index} must be {expected.value}"
            )
        if self.kind is ShotKind.NARRATIVE:
            if self.transition is not None:
                raise ValueError("narrative shots carry no transition metadata")
            if not self.keyframe_prompt:
                raise ValueError("keyframe prompt required for narrative shots")
        else:
            if self.transition is None:
                raise ValueError("transition shots require transition metadata")
            if self.keyframe_prompt:
                raise ValueError("keyframe prompts belong to narrative shots only")
        return self

    @property
    def characters(self) -> set[str]:
        return set(self.poses)

    @property
    def scene_key(self) -> tuple[int, int]:
        return (self.chapter_index, self.scene_index)


class StoryPlan(BaseModel):
    plan_version: int = PLAN_VERSION
    spec: StorySpec
    chapters: list[Chapter] = Field(default_factory=list)
    locations: list[LocationEntry] = Field(default_factory=list)
    scenes: list[Scene] = Field(default_factory=list)
    shots: list[ShotDirective] = Field(default_factory=list)
    # Opaque planner commentary, keyed by stage name.
    agent_notes: dict[str, str] = Field(default_factory=dict)

    @field_validator("plan_version")
    @classmethod
    def _version(cls, value: int) -> int:
        if value != PLAN_VERSION:
            raise ValueError(f"unsupported plan version, expected {PLAN_VERSION}")
        return value

    def location_names(self) -> set[str]:
        return {e.name for e in self.locations}

    def scenes_in_order(self) -> list[Scene]:
        return sorted(self.scenes, key=lambda s: (s.chapter_index, s.index))

    def shots_for_scene(self, chapter_index: int, scene_index: int) -> list[ShotDirective]:
        group = [
            s
            for s in self.shots
            if s.chapter_index == chapter_index and s.scene_index == scene_index
        ]
        return sorted(group, key=lambda s: s.index)


# ---------------------------------------------------------------------------
# Parsing


@dataclass(frozen=True)
class SchemaError:
    path: str
    expected: str
    found: str

    def __str__(self) -> str:
        return f"{self.path}: expected {self.expected}, found {self.found}"


class PlanParseError(ValueError):
    """Raised by parse_plan; carries the complete list of schema errors."""

    def __init__(self, errors: list[SchemaError]):
        self.errors = errors
        head = "; ".join(str(e) for e in errors[:3])
        more = f" (+{len(errors) - 3} more)" if len(errors) > 3 else ""
        super().__init__(f"{len(errors)} schema error(s): {head}{more}")


def _error_from_pydantic(err: dict) -> SchemaError:
    path = ".".join(str(p) for p in err["loc"]) or "<root>"
    ctx = err.get("ctx") or {}
    if "expected" in ctx:
        expected = f"one of {ctx['expected']}"
    elif "error" in ctx:
        expected = str(ctx["error"])
    else:
        expected = err["msg"]
    return SchemaError(path=path, expected=expected, found=repr(err.get("input")))


def parse_plan(text: str) -> StoryPlan:
    """Parse a plan document, raising PlanParseError with every schema error.

    Enum fields report the allowed vocabulary in the error; structural rules
    enforced here (odd shot counts, dialogue windows, shot kind parity) surface
    with the validator's own message.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PlanParseError(
            [SchemaError(path="<document>", expected="valid JSON", found=str(exc))]
        ) from exc
    try:
        return StoryPlan.model_validate(data)
    except ValidationError as exc:
        raise PlanParseError(
            [_error_from_pydantic(e) for e in exc.errors()]
        ) from exc


def serialize_plan(plan: StoryPlan) -> str:
    """Canonical JSON: sorted keys, sets as sorted lists, trailing newline."""
    payload = plan.model_dump(mode="json")
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def plan_json_schema() -> dict:
    return StoryPlan.model_json_schema()


# ---------------------------------------------------------------------------
# Cross-object validation

E_EVEN_SHOTS = "E_EVEN_SHOTS"
E_ADJ_LOCATION = "E_ADJ_LOCATION"
E_CHAR_NOT_ALLOWED = "E_CHAR_NOT_ALLOWED"
E_TOO_MANY_CHARS = "E_TOO_MANY_CHARS"
E_VOCAB = "E_VOCAB"
E_LOCATION_UNKNOWN = "E_LOCATION_UNKNOWN"
E_TRANSITION_MISMATCH = "E_TRANSITION_MISMATCH"
E_CHAPTER_RANGE = "E_CHAPTER_RANGE"
E_LOCATION_RANGE = "E_LOCATION_RANGE"

ALL_CODES = (
    E_EVEN_SHOTS,
    E_ADJ_LOCATION,
    E_CHAR_NOT_ALLOWED,
    E_TOO_MANY_CHARS,
    E_VOCAB,
    E_LOCATION_UNKNOWN,
    E_TRANSITION_MISMATCH,
    E_CHAPTER_RANGE,
    E_LOCATION_RANGE,
)


@dataclass(frozen=True)
class Violation:
    code: str
    path: str
    message: str
    severity: str = "error"  # "error" | "warning"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def errors(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == "error"]

    @property
    def warnings(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def summary(self) -> str:
        if not self.violations:
            return "plan is valid"
        lines = [
            f"[{v.severity}] {v.code} at {v.path}: {v.message}"
            for v in self.violations
        ]
        return "\n".join(lines)


def _coerce(enum_cls: type[Enum], value: object) -> Optional[Enum]:
    # Post-parse mutation can leave raw strings in enum slots; coerce or reject.
    try:
        return enum_cls(value)
    except (ValueError, TypeError):
        return None


def _check_shot_parity(plan: StoryPlan) -> Iterator[Violation]:
    for scene in plan.scenes:
        path = f"scenes[{scene.chapter_index}:{scene.index}]"
        if scene.shot_count < 1 or scene.shot_count % 2 == 0:
            yield Violation(
                E_EVEN_SHOTS,
                f"{path}.shot_count",
                f"odd shot count required, got {scene.shot_count}",
            )
        shots = plan.shots_for_scene(scene.chapter_index, scene.index)
        if shots and [s.index for s in shots] != list(range(1, len(shots) + 1)):
            yield Violation(
                E_EVEN_SHOTS, path, "shot indices must be contiguous from 1"
            )
        if shots and len(shots) != scene.shot_count:
            yield Violation(
                E_EVEN_SHOTS,
                path,
                f"scene declares {scene.shot_count} shots but {len(shots)} are present",
            )
        for shot in shots:
            expected = ShotKind.NARRATIVE if shot.index % 2 == 1 else ShotKind.TRANSITION
            kind = _coerce(ShotKind, shot.kind)
            if kind is not None and kind is not expected:
                yield Violation(
                    E_EVEN_SHOTS,
                    f"{path}.shots[{shot.index}].kind",
                    f"shot {shot.index} must be {expected.value}, got {kind.value}",
                )


def _check_adjacent_locations(plan: StoryPlan) -> Iterator[Violation]:
    ordered = plan.scenes_in_order()
    for prev, cur in zip(ordered, ordered[1:]):
        if prev.location_name == cur.location_name:
            yield Violation(
                E_ADJ_LOCATION,
                f"scenes[{cur.chapter_index}:{cur.index}].location_name",
                f"adjacent scenes share location {cur.location_name!r}",
            )


def _check_character_closure(plan: StoryPlan) -> Iterator[Violation]:
    known = plan.spec.character_names()

    def bad(names: Iterable[str], allowed: set[str]) -> set[str]:
        return {n for n in names if n not in allowed}

    chapter_chars: dict[int, set[str]] = {}
    for chapter in plan.chapters:
        chapter_chars[chapter.index] = set(chapter.characters)
        for name in sorted(bad(chapter.characters, known)):
            yield Violation(
                E_CHAR_NOT_ALLOWED,
                f"chapters[{chapter.index}].characters",
                f"unknown character {name!r}",
            )
    scene_chars: dict[tuple[int, int], set[str]] = {}
    for scene in plan.scenes:
        key = (scene.chapter_index, scene.index)
        scene_chars[key] = set(scene.characters)
        allowed = chapter_chars.get(scene.chapter_index, known)
        for name in sorted(bad(scene.characters, allowed)):
            yield Violation(
                E_CHAR_NOT_ALLOWED,
                f"scenes[{scene.chapter_index}:{scene.index}].characters",
                f"character {name!r} not in chapter cast",
            )
    for shot in plan.shots:
        allowed = scene_chars.get(shot.scene_key, known)
        path = f"shots[{shot.chapter_index}:{shot.scene_index}:{shot.index}]"
        groups = [("characters", shot.characters)]
        if shot.transition is not None:
            tau = shot.transition
            groups += [
                ("transition.start_chars", set(tau.start_chars)),
                ("transition.end_chars", set(tau.end_chars)),
            ]
        for label, names in groups:
            for name in sorted(bad(names, allowed)):
                yield Violation(
                    E_CHAR_NOT_ALLOWED,
                    f"{path}.{label}",
                    f"character {name!r} not in scene cast",
                )
    for i, entry in enumerate(plan.locations):
        desc = entry.background_description.lower()
        for name in sorted(known):
            if name.lower() in desc:
                yield Violation(
                    E_CHAR_NOT_ALLOWED,
                    f"locations[{i}].background_description",
                    f"location text mentions character {name!r}; backgrounds are character-free",
                )


def _check_shot_cast_size(plan: StoryPlan) -> Iterator[Violation]:
    cap = MAX_SHOT_CHARACTERS
    for shot in plan.shots:
        path = f"shots[{shot.chapter_index}:{shot.scene_index}:{shot.index}]"
        if shot.kind is ShotKind.NARRATIVE:
            if len(shot.characters) > cap:
                yield Violation(
                    E_TOO_MANY_CHARS,
                    f"{path}.characters",
                    f"{len(shot.characters)} characters on frame, cap is {cap}",
                )
        elif shot.transition is not None:
            # Endpoints are capped separately; the union may legally exceed the cap.
            for label, names in (
                ("start_chars", shot.transition.start_chars),
                ("end_chars", shot.transition.end_chars),
            ):
                if len(names) > cap:
                    yield Violation(
                        E_TOO_MANY_CHARS,
                        f"{path}.transition.{label}",
                        f"{len(names)} characters at endpoint, cap is {cap}",
                    )


def _check_vocabulary(plan: StoryPlan) -> Iterator[Violation]:
    for shot in plan.shots:
        path = f"shots[{shot.chapter_index}:{shot.scene_index}:{shot.index}]"
        if _coerce(ShotKind, shot.kind) is None:
            yield Violation(
                E_VOCAB,
                f"{path}.kind",
                f"{shot.kind!r} not in {[k.value for k in ShotKind]}",
            )
        for name, value in sorted(shot.emotions.items()):
            if _coerce(Emotion, value) is None:
                yield Violation(
                    E_VOCAB,
                    f"{path}.emotions[{name}]",
                    f"{value!r} not in {[e.value for e in Emotion]}",
                )
        for name, value in sorted(shot.poses.items()):
            if _coerce(Pose, value) is None:
                yield Violation(
                    E_VOCAB,
                    f"{path}.poses[{name}]",
                    f"{value!r} not in {[p.value for p in Pose]}",
                )
        if _coerce(Interaction, shot.interaction) is None:
            yield Violation(
                E_VOCAB,
                f"{path}.interaction",
                f"{shot.interaction!r} not in {[i.value for i in Interaction]}",
            )
        if set(shot.emotions) != set(shot.poses):
            yield Violation(
                E_VOCAB,
                f"{path}.poses",
                "emotions and poses must cover the same characters",
            )
        if shot.dialogue is not None:
            lo, hi = DIALOGUE_WINDOW
            d = shot.dialogue
            if not (lo <= d.start <= d.end <= hi):
                yield Violation(
                    E_VOCAB,
                    f"{path}.dialogue",
                    f"timing ({d.start}, {d.end}) outside {lo}..{hi}s window",
                )
        if shot.transition is not None:
            if _coerce(Movement, shot.transition.movement) is None:
                yield Violation(
                    E_VOCAB,
                    f"{path}.transition.movement",
                    f"{shot.transition.movement!r} not in {[m.value for m in Movement]}",
                )
    for i, entry in enumerate(plan.locations):
        if entry.name.split() != [entry.name]:
            yield Violation(
                E_VOCAB,
                f"locations[{i}].name",
                f"location name {entry.name!r} must be a single token",
            )


def _check_locations_known(plan: StoryPlan) -> Iterator[Violation]:
    library = plan.location_names()
    for scene in plan.scenes:
        if scene.location_name not in library:
            yield Violation(
                E_LOCATION_UNKNOWN,
                f"scenes[{scene.chapter_index}:{scene.index}].location_name",
                f"{scene.location_name!r} not in the location library",
            )


def _check_transitions(plan: StoryPlan) -> Iterator[Violation]:
    # Imported here to avoid a cycle: transitions.py builds on these types.
    from .transitions import classify_movement_type

    for scene in plan.scenes:
        shots = plan.shots_for_scene(scene.chapter_index, scene.index)
        by_index = {s.index: s for s in shots}
        for shot in shots:
            path = f"shots[{shot.chapter_index}:{shot.scene_index}:{shot.index}]"
            is_transition = shot.index % 2 == 0
            if not is_transition:
                if shot.transition is not None:
                    yield Violation(
                        E_TRANSITION_MISMATCH,
                        f"{path}.transition",
                        "narrative shots carry no transition metadata",
                    )
                continue
            tau = shot.transition
            if tau is None:
                yield Violation(
                    E_TRANSITION_MISMATCH,
                    f"{path}.transition",
                    "transition shot lacks transition metadata",
                )
                continue
            start = set(tau.start_chars)
            end = set(tau.end_chars)
            if set(tau.prev_chars) != start:
                yield Violation(
                    E_TRANSITION_MISMATCH,
                    f"{path}.transition.start_chars",
                    "start set must equal the previous narrative cast",
                )
            if set(tau.exiting) != start - end:
                yield Violation(
                    E_TRANSITION_MISMATCH,
                    f"{path}.transition.exiting",
                    f"exiting must be start minus end, got {sorted(tau.exiting)}",
                )
            if set(tau.entering) != end - start:
                yield Violation(
                    E_TRANSITION_MISMATCH,
                    f"{path}.transition.entering",
                    f"entering must be end minus start, got {sorted(tau.entering)}",
                )
            movement = _coerce(Movement, tau.movement)
            if movement is not None and movement is not classify_movement_type(
                start - end, end - start
            ):
                yield Violation(
                    E_TRANSITION_MISMATCH,
                    f"{path}.transition.movement",
                    f"movement {movement.value!r} disagrees with the set differences",
                )
            prev_shot = by_index.get(shot.index - 1)
            next_shot = by_index.get(shot.index + 1)
            if prev_shot is None or next_shot is None:
                yield Violation(
                    E_TRANSITION_MISMATCH,
                    path,
                    "transition shot lacks adjacent narrative shots",
                )
                continue
            if start != prev_shot.characters:
                yield Violation(
                    E_TRANSITION_MISMATCH,
                    f"{path}.transition.start_chars",
                    f"start set {sorted(start)} does not match shot {prev_shot.index} cast",
                )
            if end != next_shot.characters:
                yield Violation(
                    E_TRANSITION_MISMATCH,
                    f"{path}.transition.end_chars",
                    f"end set {sorted(end)} does not match shot {next_shot.index} cast",
                )


def _check_chapter_range(plan: StoryPlan, strict: bool) -> Iterator[Violation]:
    severity = "error" if strict else "warning"
    lo, hi = CHAPTER_RANGE
    count = len(plan.chapters)
    if not (lo <= count <= hi):
        yield Violation(
            E_CHAPTER_RANGE,
            "chapters",
            f"{count} chapters outside the expected {lo}..{hi} range",
            severity,
        )
    indices = sorted(c.index for c in plan.chapters)
    if indices != list(range(1, len(indices) + 1)):
        yield Violation(
            E_CHAPTER_RANGE, "chapters", "chapter indices must run 1..N", "error"
        )
    valid = {c.index for c in plan.chapters}
    for scene in plan.scenes:
        if scene.chapter_index not in valid:
            yield Violation(
                E_CHAPTER_RANGE,
                f"scenes[{scene.chapter_index}:{scene.index}].chapter_index",
                f"scene references missing chapter {scene.chapter_index}",
                "error",
            )


def _check_location_range(plan: StoryPlan, strict: bool) -> Iterator[Violation]:
    severity = "error" if strict else "warning"
    lo, hi = LOCATION_RANGE
    count = len(plan.locations)
    if not (lo <= count <= hi):
        yield Violation(
            E_LOCATION_RANGE,
            "locations",
            f"{count} locations outside the expected {lo}..{hi} range",
            severity,
        )
    names = [e.name for e in plan.locations]
    if len(set(names)) != len(names):
        yield Violation(
            E_LOCATION_RANGE, "locations", "location names must be unique", "error"
        )


# Order here is presentation order only; each check is a pure function of the
# plan, so the violation set is independent of registry order.
_PLAIN_CHECKS: list[Callable[[StoryPlan], Iterator[Violation]]] = [
    _check_shot_parity,
    _check_adjacent_locations,
    _check_character_closure,
    _check_shot_cast_size,
    _check_vocabulary,
    _check_locations_known,
    _check_transitions,
]

_RANGE_CHECKS: list[Callable[[StoryPlan, bool], Iterator[Violation]]] = [
    _check_chapter_range,
    _check_location_range,
]


def validate_plan(plan: StoryPlan, strict: bool = False) -> ValidationReport:
    """Run every constraint check; an empty report means the plan is valid.

    Range violations (chapter and location counts) are warnings unless
    ``strict`` is set; everything else is an error.
    """
    violations: list[Violation] = []
    for check in _PLAIN_CHECKS:
        violations.extend(check(plan))
    for range_check in _RANGE_CHECKS:
        violations.extend(range_check(plan, strict))
    violations.sort(key=lambda v: (v.path, v.code, v.message))
    return ValidationReport(violations=violations)


if __name__ == "__main__":  # regenerate the published JSON schema
    target = sys.argv[1] if len(sys.argv) > 1 else "docs/plan.schema.json"
    with open(target, "w") as fh:
        json.dump(plan_json_schema(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {target}")
