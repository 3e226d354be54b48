"""Transition calculus: classify who enters and exits between narrative shots.

Given the casts of two adjacent narrative shots in the same scene, the
transition between them is fully determined by the two set differences. The
four-way movement classification drives both shot scheduling and the synthetic
dataset taxonomy (which adds a fifth, dataset-only category for full swaps).
"""

from __future__ import annotations

import hashlib
from typing import Iterable

from .schema import Movement, ShotDirective, ShotKind, TransitionMetadata


class OverlapError(ValueError):
    """Exiting and entering sets intersect; no coherent motion plan exists."""


class DifferentSceneError(ValueError):
    """Transitions only bridge shots inside one scene; cuts handle the rest."""


_EDGES = ("left", "right", "top", "bottom")


def _edge_for(name: str) -> str:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return _EDGES[digest[0] % len(_EDGES)]


def classify_movement_type(exiting: Iterable[str], entering: Iterable[str]) -> Movement:
    """Map the (exiting, entering) pair to its movement class.

    Raises OverlapError when the sets intersect: a character cannot both
    leave and arrive inside one transition.
    """
    out = set(exiting)
    inn = set(entering)
    overlap = out & inn
    if overlap:
        raise OverlapError(
            f"characters {sorted(overlap)} appear in both exiting and entering sets"
        )
    if not out and not inn:
        return Movement.NO_CHANGE
    if not out:
        return Movement.ENTRY
    if not inn:
        return Movement.EXIT
    return Movement.COMBINATION


def transition_description(
    exiting: Iterable[str], entering: Iterable[str], movement: Movement
) -> str:
    """Readable motion brief naming each mover and a frame edge.

    The edge per character is a stable hash pick so repeated derivations
    produce identical text; renderers are free to choose the closest edge.
    """
    parts: list[str] = []
    for name in sorted(set(exiting)):
        parts.append(f"{name} walks out of frame toward the {_edge_for(name)} edge.")
    for name in sorted(set(entering)):
        parts.append(f"{name} enters from the {_edge_for(name)} edge of the frame.")
    if not parts:
        return "No characters enter or exit; everyone holds their place on frame."
    if movement is Movement.COMBINATION:
        parts.append("The moves overlap inside a single continuous take.")
    return " ".join(parts)


def derive_transition_metadata(
    prev_shot: ShotDirective, next_shot: ShotDirective
) -> TransitionMetadata:
    """Derive the transition record bridging two adjacent narrative shots.

    The start cast is taken from ``prev_shot`` and the end cast from
    ``next_shot``; differences and the movement class follow. Shots must be
    narrative, belong to the same scene, and sit two indices apart.
    """
    if prev_shot.scene_key != next_shot.scene_key:
        raise DifferentSceneError(
            f"shots {prev_shot.scene_key} and {next_shot.scene_key} "
            "belong to different scenes"
        )
    for shot in (prev_shot, next_shot):
        if shot.kind is not ShotKind.NARRATIVE:
            raise ValueError(f"shot {shot.index} is not a narrative shot")
    if next_shot.index != prev_shot.index + 2:
        raise ValueError(
            f"narrative shots {prev_shot.index} and {next_shot.index} are not adjacent"
        )
    start = set(prev_shot.characters)
    end = set(next_shot.characters)
    exiting = start - end
    entering = end - start
    movement = classify_movement_type(exiting, entering)
    return TransitionMetadata(
        prev_chars=set(start),
        start_chars=set(start),
        end_chars=set(end),
        exiting=exiting,
        entering=entering,
        movement=movement,
        description=transition_description(exiting, entering, movement),
    )


def normalize_transition(tau: TransitionMetadata) -> TransitionMetadata:
    """Recompute the derived fields from the endpoint casts.

    Normalizing twice equals normalizing once, and records produced by
    ``derive_transition_metadata`` are already normal.
    """
    start = set(tau.start_chars)
    end = set(tau.end_chars)
    exiting = start - end
    entering = end - start
    movement = classify_movement_type(exiting, entering)
    return TransitionMetadata(
        prev_chars=set(start),
        start_chars=start,
        end_chars=end,
        exiting=exiting,
        entering=entering,
        movement=movement,
        description=transition_description(exiting, entering, movement),
    )
