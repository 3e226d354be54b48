"""The six mock seats behind one dispatcher.

Every handler derives its output from the request seed plus parseable lines
in the prompt, so identical requests produce identical responses across
processes and reruns. Timing is reported as zero to keep responses
byte-stable.
"""

from __future__ import annotations

import re
from typing import Optional

from ..config import RunConfig
from .faults import MockFaults
from .mock_llm import MockStoryWriter
from .mockworld import MockWorld, WorldGeometry
from .protocol import (
    STATUS_FATAL,
    STATUS_OK,
    STATUS_RETRYABLE,
    BackendRequest,
    BackendResponse,
    decode_image,
    encode_image,
)


class TauMismatch(RuntimeError):
    """Endpoint frames contradict the declared transition sets."""


def _prompt_line(prompt: str, key: str) -> Optional[str]:
    match = re.search(rf"^{re.escape(key)}: (.*)$", prompt, flags=re.MULTILINE)
    return match.group(1).strip() if match else None


def _prompt_names(prompt: str, key: str) -> list[str]:
    value = _prompt_line(prompt, key)
    if not value or value == "-":
        return []
    return [part.strip() for part in value.split("|") if part.strip()]


def _prompt_map(prompt: str, key: str) -> dict[str, str]:
    found = {}
    for match in re.finditer(
        rf"^{re.escape(key)}\[(.+?)\]: (.*)$", prompt, flags=re.MULTILINE
    ):
        found[match.group(1)] = match.group(2).strip()
    return found


def geometry_from_config(config: RunConfig) -> WorldGeometry:
    return WorldGeometry(
        width=config.frame_width,
        height=config.frame_height,
        glyph_size=config.glyph_size,
        max_speed=config.max_speed,
        edge_margin=config.edge_margin,
    )


class MockBackendService:
    def __init__(
        self,
        geometry: WorldGeometry = WorldGeometry(),
        faults: Optional[MockFaults] = None,
    ):
        self.geometry = geometry
        self.faults = faults if faults is not None else MockFaults()
        self.vlm_plants: dict[str, list[int]] = {}

    def world(self, seed: int) -> MockWorld:
        return MockWorld(self.geometry, seed)

    def handle(self, request: BackendRequest) -> BackendResponse:
        if request.seat in self.faults.fatal_seats:
            return BackendResponse(
                request.request_id, STATUS_FATAL, {}, 0.0, "seat disabled by fault knob"
            )
        if self.faults.take_retryable(request.seat):
            return BackendResponse(
                request.request_id, STATUS_RETRYABLE, {}, 0.0, "synthetic backpressure"
            )
        handler = getattr(self, f"_handle_{request.seat}")
        try:
            payload = handler(request)
        except TauMismatch as exc:
            return BackendResponse(
                request.request_id, STATUS_FATAL, {}, 0.0, f"tau_mismatch: {exc}"
            )
        except Exception as exc:  # fatal across the wire, not a stack trace
            return BackendResponse(
                request.request_id, STATUS_FATAL, {}, 0.0, f"{type(exc).__name__}: {exc}"
            )
        return BackendResponse(request.request_id, STATUS_OK, payload, 0.0)

    # -- image seats -----------------------------------------------------------

    @staticmethod
    def _token_and_salt(prompt: str) -> tuple[str, str]:
        token = _prompt_line(prompt, "location") or "unspecified"
        salt = _prompt_line(prompt, "backdrop_variant") or ""
        return token, salt

    def _handle_t2i(self, request: BackendRequest) -> dict:
        world = self.world(request.seed)
        token, salt = self._token_and_salt(request.payload["prompt"])
        return {"image": encode_image(world.background(token, salt))}

    def _cast_from_prompt(self, prompt: str) -> list[tuple[str, str]]:
        names = _prompt_names(prompt, "characters")
        poses = _prompt_map(prompt, "pose")
        return [(name, poses.get(name, "Standing")) for name in names]

    def _handle_i2i(self, request: BackendRequest) -> dict:
        world = self.world(request.seed)
        base = decode_image(request.payload["image"])
        cast = self._cast_from_prompt(request.payload["prompt"])
        placements = world.place_glyphs(cast)
        frame = base.copy()
        for name in sorted(placements):
            world.draw_glyph(frame, name, placements[name])
        return {"image": encode_image(frame)}

    def _track(self, world: MockWorld, paths: dict[str, list]) -> dict:
        visibility = {
            name: [round(world.visibility(p), 6) for p in path]
            for name, path in paths.items()
        }
        centers = {
            name: [list(world.center(p)) for p in path] for name, path in paths.items()
        }
        return {"visibility": visibility, "centers": centers}

    def _handle_i2v(self, request: BackendRequest) -> dict:
        world = self.world(request.seed)
        prompt = request.payload["prompt"]
        keyframe = decode_image(request.payload["image"])
        frame_count = request.payload["frame_count"]
        token, salt = self._token_and_salt(prompt)
        background = world.background(token, salt)
        cast = self._cast_from_prompt(prompt)
        placements = world.place_glyphs(cast)
        paths = world.narrative_paths(placements, dict(cast), frame_count)
        frames = [keyframe.copy()]
        for t in range(1, frame_count):
            frames.append(
                world.render_frame(background, {n: paths[n][t] for n in paths})
            )
        payload = {"frames": [encode_image(f) for f in frames]}
        payload.update(self._track(world, paths))
        return payload

    def _handle_flf2v(self, request: BackendRequest) -> dict:
        world = self.world(request.seed)
        prompt = request.payload["prompt"]
        first = decode_image(request.payload["first"])
        last = decode_image(request.payload["last"])
        frame_count = request.payload["frame_count"]
        tau = request.payload["transition"]
        start_names = list(tau["start"])
        end_names = list(tau["end"])
        exiting = set(tau["exiting"])
        entering = set(tau["entering"])
        token, salt = self._token_and_salt(prompt)
        background = world.background(token, salt)
        start_positions: dict[str, tuple[int, int]] = {}
        for name in start_names:
            found = world.detect_glyph(first, name)
            if found is None:
                raise TauMismatch(f"{name!r} missing from the first frame")
            start_positions[name] = found
        end_positions: dict[str, tuple[int, int]] = {}
        for name in end_names:
            found = world.detect_glyph(last, name)
            if found is None:
                raise TauMismatch(f"{name!r} missing from the last frame")
            end_positions[name] = found
        for name in exiting:
            if world.detect_glyph(last, name) is not None:
                raise TauMismatch(f"{name!r} declared exiting but present at the end")
        for name in entering:
            if world.detect_glyph(first, name) is not None:
                raise TauMismatch(f"{name!r} declared entering but present at the start")
        paths = world.transition_paths(
            start_positions, end_positions, exiting, entering, frame_count
        )
        frames = [first.copy()]
        for t in range(1, frame_count - 1):
            frames.append(
                world.render_frame(background, {n: paths[n][t] for n in paths})
            )
        if frame_count > 1:
            frames.append(last.copy())
        payload = {"frames": [encode_image(f) for f in frames]}
        payload.update(self._track(world, paths))
        return payload

    # -- text seats --------------------------------------------------------------

    def _handle_llm(self, request: BackendRequest) -> dict:
        writer = MockStoryWriter(request.seed, self.faults)
        text = writer.reply(request.payload["stage"], request.payload["prompt"])
        return {"text": text}

    def _handle_vlm(self, request: BackendRequest) -> dict:
        question = request.payload["question"]
        clip_id = _prompt_line(question, "clip")
        frames = [decode_image(f) for f in request.payload["frames"]]
        world = self.world(request.seed)
        if clip_id and clip_id in self.vlm_plants:
            counts = list(self.vlm_plants[clip_id])[: len(frames)]
        else:
            counts = [world.count_figures(frame) for frame in frames]
        if len(counts) >= 2:
            text = (
                f"The clip opens with {counts[0]} figure(s) on screen and ends "
                f"with {counts[-1]}, set against a patterned backdrop."
            )
        elif counts:
            text = f"The frame shows {counts[0]} figure(s) against a patterned backdrop."
        else:
            text = "No frames provided."
        return {"counts": counts, "text": text}
