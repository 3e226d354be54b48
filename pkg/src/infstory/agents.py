"""Hierarchical planning agents: chapters, locations, scenes, shots.

Each stage asks the language seat for JSON, validates the reply against the
growing plan, and retries with the violation codes spelled out in the prompt.
Transition metadata is always recomputed from the neighboring casts; the
model's version must agree, and after one disagreement retry the derived
record wins with a note in the trace.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

from pydantic import ValidationError

from .backends.client import BackendHandle, call_backend
from .backends.protocol import BackendRequest
from .schema import (
    Chapter,
    LocationEntry,
    Scene,
    ShotDirective,
    ShotKind,
    StoryPlan,
    StorySpec,
    Violation,
    validate_plan,
)
from .schema import (
    E_CHAPTER_RANGE,
    E_CHAR_NOT_ALLOWED,
    E_ADJ_LOCATION,
    E_EVEN_SHOTS,
    E_LOCATION_RANGE,
    E_LOCATION_UNKNOWN,
    E_TOO_MANY_CHARS,
    E_TRANSITION_MISMATCH,
    E_VOCAB,
)
from .transitions import derive_transition_metadata

MAX_ATTEMPTS = 3

STAGE_CODES = {
    "chapters": {E_CHAR_NOT_ALLOWED, E_CHAPTER_RANGE},
    "locations": {E_LOCATION_RANGE, E_VOCAB, E_CHAR_NOT_ALLOWED},
    "scenes": {
        E_ADJ_LOCATION,
        E_LOCATION_UNKNOWN,
        E_CHAR_NOT_ALLOWED,
        E_CHAPTER_RANGE,
        E_EVEN_SHOTS,
    },
    "shots": {
        E_EVEN_SHOTS,
        E_TOO_MANY_CHARS,
        E_VOCAB,
        E_CHAR_NOT_ALLOWED,
        E_TRANSITION_MISMATCH,
    },
}


@dataclass
class AgentTrace:
    stage: str
    attempt: int
    prompt: str
    reply: str
    accepted: bool
    codes: list[str] = field(default_factory=list)
    note: str = ""


class AgentError(RuntimeError):
    def __init__(self, stage: str, codes: list[str], messages: list[str], traces: list[AgentTrace]):
        self.stage = stage
        self.codes = sorted(set(codes))
        self.messages = messages
        self.traces = traces
        super().__init__(
            f"{stage} agent gave up after {MAX_ATTEMPTS} attempts; "
            f"codes={self.codes}; last: {messages[-1] if messages else 'n/a'}"
        )


def _template(name: str) -> str:
    return resources.files("infstory.prompts").joinpath(f"{name}.txt").read_text()


def _retry_suffix(attempt: int, violations: list[Violation]) -> str:
    codes = sorted({v.code for v in violations})
    lines = "\n".join(f"- {v.code} at {v.path}: {v.message}" for v in violations[:12])
    return (
        f"\n\nREJECTED: attempt {attempt} failed with codes {codes}.\n"
        f"{lines}\nFix every issue and reply with the corrected JSON only."
    )


def _ask(llm: BackendHandle, stage: str, prompt: str, seed: int, request_id: str) -> str:
    request = BackendRequest(
        seat="llm",
        request_id=request_id,
        seed=seed,
        payload={"stage": stage, "prompt": prompt},
    )
    return call_backend(llm, request).payload["text"]


def _codes_from_pydantic(exc: ValidationError) -> list[Violation]:
    out = []
    for err in exc.errors():
        msg = err["msg"]
        if err["type"] == "enum":
            code = E_VOCAB
        elif "odd shot count" in msg:
            code = E_EVEN_SHOTS
        elif "dialogue timing" in msg:
            code = E_VOCAB
        else:
            code = "SCHEMA"
        path = ".".join(str(p) for p in err["loc"]) or "<reply>"
        out.append(Violation(code=code, path=path, message=msg))
    return out


def _stage_errors(probe: StoryPlan, stage: str, strict: bool) -> list[Violation]:
    report = validate_plan(probe, strict=strict)
    return [v for v in report.errors if v.code in STAGE_CODES[stage]]


# Builder contract: take the parsed reply dict and the attempt number, return
# (artifact or None, violations, note). A non-None artifact is accepted.
Builder = Callable[[dict, int], tuple[Optional[object], list[Violation], str]]


def _negotiate(
    stage: str,
    base_prompt: str,
    build: Builder,
    llm: BackendHandle,
    seed: int,
    request_key: str,
    traces: list[AgentTrace],
    max_attempts: int = MAX_ATTEMPTS,
) -> object:
    prompt = base_prompt
    all_codes: list[str] = []
    all_messages: list[str] = []
    for attempt in range(1, max_attempts + 1):
        reply = _ask(llm, stage, prompt, seed, f"{request_key}-a{attempt}")
        note = ""
        try:
            data = json.loads(reply)
            if not isinstance(data, dict):
                raise ValueError("reply is not a JSON object")
        except ValueError as exc:
            artifact = None
            violations = [Violation(code="PARSE", path=stage, message=str(exc))]
        else:
            artifact, violations, note = build(data, attempt)
        codes = sorted({v.code for v in violations})
        traces.append(
            AgentTrace(
                stage=stage,
                attempt=attempt,
                prompt=prompt,
                reply=reply,
                accepted=artifact is not None,
                codes=codes,
                note=note,
            )
        )
        if artifact is not None:
            return artifact
        all_codes.extend(codes)
        all_messages.extend(f"{v.path}: {v.message}" for v in violations)
        prompt = base_prompt + _retry_suffix(attempt, violations)
    raise AgentError(stage, all_codes, all_messages, traces)


def _join(names) -> str:
    ordered = sorted(names)
    return " | ".join(ordered) if ordered else "-"


# ---------------------------------------------------------------------------
# Stages


def plan_chapters(
    spec: StorySpec,
    llm: BackendHandle,
    seed: int,
    strict: bool = False,
    traces: Optional[list[AgentTrace]] = None,
) -> tuple[list[Chapter], str]:
    traces = traces if traces is not None else []
    prompt = _template("chapters").format(
        story=spec.description.replace("\n", " "),
        characters=_join(c.name for c in spec.characters),
    )
    notes_box: list[str] = [""]

    def build(data: dict, _attempt: int):
        raw = data.get("chapters")
        if not isinstance(raw, list) or not raw:
            return None, [Violation("PARSE", "chapters", "reply lacks a chapters list")], ""
        try:
            chapters = [Chapter.model_validate(c) for c in raw]
        except ValidationError as exc:
            return None, _codes_from_pydantic(exc), ""
        probe = StoryPlan(spec=spec, chapters=chapters)
        violations = _stage_errors(probe, "chapters", strict)
        if violations:
            return None, violations, ""
        notes_box[0] = str(data.get("notes", ""))
        return chapters, [], ""

    chapters = _negotiate("chapters", prompt, build, llm, seed, "chapters", traces)
    return chapters, notes_box[0]


def build_location_library(
    spec: StorySpec,
    llm: BackendHandle,
    seed: int,
    strict: bool = False,
    traces: Optional[list[AgentTrace]] = None,
) -> tuple[list[LocationEntry], str]:
    traces = traces if traces is not None else []
    prompt = _template("locations").format(
        story=spec.description.replace("\n", " "),
        characters=_join(c.name for c in spec.characters),
    )
    notes_box: list[str] = [""]

    def build(data: dict, _attempt: int):
        raw = data.get("locations")
        if not isinstance(raw, list) or not raw:
            return None, [Violation("PARSE", "locations", "reply lacks a locations list")], ""
        try:
            entries = [LocationEntry.model_validate(e) for e in raw]
        except ValidationError as exc:
            violations = _codes_from_pydantic(exc)
            # single-token rule lives in the model; report it under E_VOCAB
            violations = [
                dataclasses.replace(v, code=E_VOCAB)
                if "single token" in v.message
                else v
                for v in violations
            ]
            return None, violations, ""
        probe = StoryPlan(spec=spec, locations=entries)
        violations = _stage_errors(probe, "locations", strict)
        if violations:
            return None, violations, ""
        notes_box[0] = str(data.get("notes", ""))
        return entries, [], ""

    entries = _negotiate("locations", prompt, build, llm, seed, "locations", traces)
    return entries, notes_box[0]


def plan_scenes(
    spec: StorySpec,
    chapters: list[Chapter],
    locations: list[LocationEntry],
    llm: BackendHandle,
    seed: int,
    strict: bool = False,
    traces: Optional[list[AgentTrace]] = None,
) -> list[Scene]:
    traces = traces if traces is not None else []
    accepted: list[Scene] = []
    template = _template("scenes")
    library = _join(e.name for e in locations)
    for chapter in chapters:
        previous = accepted[-1].location_name if accepted else "-"
        prompt = template.format(
            chapter_index=chapter.index,
            summary=chapter.summary.replace("\n", " "),
            chapter_characters=_join(chapter.characters),
            locations=library,
            previous_location=previous,
        )

        def build(data: dict, _attempt: int, chapter=chapter):
            raw = data.get("scenes")
            if not isinstance(raw, list) or not raw:
                return None, [Violation("PARSE", "scenes", "reply lacks a scenes list")], ""
            try:
                candidates = [
                    Scene.model_validate({**entry, "chapter_index": chapter.index})
                    for entry in raw
                ]
            except ValidationError as exc:
                return None, _codes_from_pydantic(exc), ""
            probe = StoryPlan(
                spec=spec,
                chapters=chapters,
                locations=locations,
                scenes=accepted + candidates,
            )
            violations = _stage_errors(probe, "scenes", strict)
            if violations:
                return None, violations, ""
            return candidates, [], ""

        accepted.extend(
            _negotiate(
                "scenes", prompt, build, llm, seed, f"scenes-ch{chapter.index:02d}", traces
            )
        )
    return accepted


def _build_scene_shots(
    scene: Scene, raw_shots: list, attempt: int
) -> tuple[Optional[list[ShotDirective]], list[Violation], str]:
    """Assemble directives for one scene, deriving every transition record."""
    if len(raw_shots) != scene.shot_count:
        return (
            None,
            [
                Violation(
                    E_EVEN_SHOTS,
                    f"scenes[{scene.chapter_index}:{scene.index}]",
                    f"expected {scene.shot_count} shots, reply has {len(raw_shots)}",
                )
            ],
            "",
        )
    narratives: dict[int, ShotDirective] = {}
    violations: list[Violation] = []
    for position, entry in enumerate(raw_shots, start=1):
        if position % 2 == 0:
            continue
        if not isinstance(entry, dict):
            violations.append(Violation("PARSE", f"shots[{position}]", "not an object"))
            continue
        payload = {
            "chapter_index": scene.chapter_index,
            "scene_index": scene.index,
            "index": position,
            "kind": ShotKind.NARRATIVE,
            "emotions": entry.get("emotions", {}),
            "poses": entry.get("poses", {}),
            "interaction": entry.get("interaction", "None"),
            "dialogue": entry.get("dialogue"),
            "keyframe_prompt": entry.get("keyframe_prompt"),
            "video_prompt": entry.get("video_prompt", ""),
            "camera": entry.get("camera", ""),
        }
        try:
            narratives[position] = ShotDirective.model_validate(payload)
        except ValidationError as exc:
            violations.extend(_codes_from_pydantic(exc))
    if violations:
        return None, violations, ""
    note = ""
    shots: list[ShotDirective] = []
    for position in range(1, scene.shot_count + 1):
        if position % 2 == 1:
            shots.append(narratives[position])
            continue
        entry = raw_shots[position - 1]
        derived = derive_transition_metadata(
            narratives[position - 1], narratives[position + 1]
        )
        mismatch = (
            not isinstance(entry, dict)
            or set(entry.get("exiting", [])) != derived.exiting
            or set(entry.get("entering", [])) != derived.entering
            or entry.get("movement") != derived.movement.value
        )
        if mismatch and attempt == 1:
            return (
                None,
                [
                    Violation(
                        E_TRANSITION_MISMATCH,
                        f"shots[{position}]",
                        "reply transition disagrees with the neighboring casts "
                        f"(derived: exiting={sorted(derived.exiting)}, "
                        f"entering={sorted(derived.entering)}, "
                        f"movement={derived.movement.value})",
                    )
                ],
                "",
            )
        if mismatch:
            note = (
                f"shot {position}: derived transition metadata replaced the model reply"
            )
        tau = derived
        if not mismatch and isinstance(entry, dict) and entry.get("description"):
            tau = derived.model_copy(update={"description": str(entry["description"])})
        shots.append(
            ShotDirective(
                chapter_index=scene.chapter_index,
                scene_index=scene.index,
                index=position,
                kind=ShotKind.TRANSITION,
                video_prompt=tau.description,
                camera=narratives[position - 1].camera,
                transition=tau,
            )
        )
    return shots, [], note


def plan_shots(
    spec: StorySpec,
    chapters: list[Chapter],
    locations: list[LocationEntry],
    scenes: list[Scene],
    llm: BackendHandle,
    seed: int,
    strict: bool = False,
    traces: Optional[list[AgentTrace]] = None,
) -> list[ShotDirective]:
    traces = traces if traces is not None else []
    accepted: list[ShotDirective] = []
    template = _template("shots")
    ordered = sorted(scenes, key=lambda s: (s.chapter_index, s.index))
    for scene in ordered:
        prompt = template.format(
            chapter_index=scene.chapter_index,
            scene_index=scene.index,
            location=scene.location_name,
            tone=scene.tone,
            scene_characters=_join(scene.characters),
            shot_count=scene.shot_count,
        )

        def build(data: dict, attempt: int, scene=scene):
            raw = data.get("shots")
            if not isinstance(raw, list):
                return None, [Violation("PARSE", "shots", "reply lacks a shots list")], ""
            candidates, violations, note = _build_scene_shots(scene, raw, attempt)
            if candidates is None:
                return None, violations, note
            probe = StoryPlan(
                spec=spec,
                chapters=chapters,
                locations=locations,
                scenes=scenes,
                shots=accepted + candidates,
            )
            violations = _stage_errors(probe, "shots", strict)
            if violations:
                return None, violations, note
            return candidates, [], note

        accepted.extend(
            _negotiate(
                "shots",
                prompt,
                build,
                llm,
                seed,
                f"shots-ch{scene.chapter_index:02d}-sc{scene.index:02d}",
                traces,
            )
        )
    return accepted


def build_story_plan(
    spec: StorySpec,
    llm: BackendHandle,
    seed: int,
    strict: bool = False,
    trace_dir: Optional[str] = None,
) -> tuple[StoryPlan, list[AgentTrace]]:
    """Run all four stages and return the validated plan plus agent traces."""
    traces: list[AgentTrace] = []
    chapters, chapter_notes = plan_chapters(spec, llm, seed, strict, traces)
    locations, location_notes = build_location_library(spec, llm, seed, strict, traces)
    scenes = plan_scenes(spec, chapters, locations, llm, seed, strict, traces)
    shots = plan_shots(spec, chapters, locations, scenes, llm, seed, strict, traces)
    plan = StoryPlan(
        spec=spec,
        chapters=chapters,
        locations=locations,
        scenes=scenes,
        shots=shots,
        agent_notes={"chapters": chapter_notes, "locations": location_notes},
    )
    report = validate_plan(plan, strict=strict)
    if not report.ok:
        raise AgentError(
            "final",
            [v.code for v in report.errors],
            [f"{v.path}: {v.message}" for v in report.errors],
            traces,
        )
    if trace_dir is not None:
        save_traces(traces, trace_dir)
    return plan, traces


def save_traces(traces: list[AgentTrace], target_dir: str) -> list[Path]:
    target = Path(target_dir)
    target.mkdir(parents=True, exist_ok=True)
    written = []
    for i, trace in enumerate(traces):
        path = target / f"{i:03d}-{trace.stage}-a{trace.attempt}.json"
        path.write_text(
            json.dumps(dataclasses.asdict(trace), indent=2, sort_keys=True) + "\n"
        )
        written.append(path)
    return written
