"""Shot scheduling and rendering: backgrounds, keyframes, clips, stitching.

Per scene the order is fixed: render (or reuse) the location background,
compose a keyframe for every odd shot on top of it, then generate clips in
index order. Odd shots animate from their keyframe; even shots bridge the
final frame of the previous clip to the next keyframe, driven by the stored
transition record. Scene boundaries are hard cuts. Every artifact lands
under one run directory and reruns are byte-identical for a fixed seed.
"""

from __future__ import annotations

import hashlib
import json
import shlex
import subprocess
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from .backends.client import BackendHandle, call_backend, handle_for
from .backends.protocol import BackendRequest, decode_image, encode_image
from .backends.service import MockBackendService, geometry_from_config
from .config import RunConfig
from .schema import (
    Scene,
    ShotDirective,
    ShotKind,
    StoryPlan,
    serialize_plan,
    validate_plan,
)

MANIFEST_NAME = "manifest.json"


class PlanInvalid(ValueError):
    def __init__(self, report):
        self.report = report
        super().__init__(f"plan failed validation:\n{report.summary()}")


class MuxError(RuntimeError):
    pass


@dataclass(frozen=True)
class NormalizedDirective:
    """Flat, deterministic text bundle handed to the image/video seats.

    The bundle embeds machine-readable lines (location, characters, poses)
    that the mock seats parse back out; real backends read it as a prompt.
    """

    shot_ref: tuple[int, int, int]
    kind: ShotKind
    location: str
    cast: tuple[str, ...]
    poses: dict[str, str]
    text: str


@dataclass
class CrossShotMemory:
    """Identity state threaded through clip generation in shot order."""

    ordinal: int = 0
    appearances: dict[str, int] = field(default_factory=dict)
    digests: dict[str, float] = field(default_factory=dict)
    background_digests: dict[str, float] = field(default_factory=dict)
    last_frame: Optional[np.ndarray] = None

    @classmethod
    def empty(cls) -> "CrossShotMemory":
        return cls()

    def identity_line(self, cast: tuple[str, ...]) -> str:
        parts = []
        for name in cast:
            seen = self.appearances.get(name, 0)
            if seen == 0:
                parts.append(f"{name} first appearance")
            else:
                parts.append(f"{name} seen in {seen} earlier clip(s)")
        return "; ".join(parts) if parts else "no recurring characters"


@dataclass
class VideoClip:
    scene_ordinal: int
    shot_index: int
    kind: str  # "narrative" | "transition"
    seat: str
    frames: list[np.ndarray]
    fps: int
    prompt: str
    tau: Optional[dict] = None
    visibility: Optional[dict[str, list[float]]] = None
    centers: Optional[dict[str, list[list[float]]]] = None

    @property
    def clip_id(self) -> str:
        return f"{self.scene_ordinal:03d}_{self.shot_index:02d}"


@dataclass
class RunResult:
    run_dir: Path
    manifest: dict
    stitched_frames: int
    resumed_steps: int


# ---------------------------------------------------------------------------
# Directive normalization


def normalize_directive(
    shot: ShotDirective, plan: StoryPlan, background_variant: str = ""
) -> NormalizedDirective:
    """Resolve one shot against the plan into a flat prompt bundle."""
    scene = next(
        (
            s
            for s in plan.scenes
            if s.chapter_index == shot.chapter_index and s.index == shot.scene_index
        ),
        None,
    )
    if scene is None:
        raise ValueError(
            f"shot references missing scene ({shot.chapter_index}, {shot.scene_index})"
        )
    entry = next((e for e in plan.locations if e.name == scene.location_name), None)
    if entry is None:
        raise ValueError(f"scene location {scene.location_name!r} not in the library")
    if shot.kind is ShotKind.NARRATIVE:
        cast = tuple(sorted(shot.characters))
    else:
        tau = shot.transition
        cast = tuple(sorted(set(tau.start_chars) | set(tau.end_chars)))
    descriptions = {c.name: c.description for c in plan.spec.characters}
    lines = [
        f"shot: ch{shot.chapter_index}/sc{shot.scene_index}/shot{shot.index} ({shot.kind.value})",
        f"location: {scene.location_name}",
        f"backdrop: {entry.background_description}",
    ]
    if background_variant:
        lines.append(f"backdrop_variant: {background_variant}")
    lines.append(f"characters: {' | '.join(cast) if cast else '-'}")
    poses: dict[str, str] = {}
    for name in cast:
        if descriptions.get(name):
            lines.append(f"character[{name}]: {descriptions[name]}")
    if shot.kind is ShotKind.NARRATIVE:
        for name in cast:
            lines.append(f"emotion[{name}]: {shot.emotions[name].value}")
            lines.append(f"pose[{name}]: {shot.poses[name].value}")
            poses[name] = shot.poses[name].value
        lines.append(f"interaction: {shot.interaction.value}")
    if shot.camera:
        lines.append(f"camera: {shot.camera}")
    if shot.dialogue is not None:
        d = shot.dialogue
        lines.append(f'dialogue: "{d.text}" ({d.start:.2f}s-{d.end:.2f}s)')
    if shot.video_prompt:
        lines.append(f"action: {shot.video_prompt}")
    if shot.kind is ShotKind.NARRATIVE and shot.keyframe_prompt:
        lines.append(f"keyframe: {shot.keyframe_prompt}")
    return NormalizedDirective(
        shot_ref=(shot.chapter_index, shot.scene_index, shot.index),
        kind=shot.kind,
        location=scene.location_name,
        cast=cast,
        poses=poses,
        text="\n".join(lines),
    )


# ---------------------------------------------------------------------------
# Memory


def update_memory(
    memory: CrossShotMemory, clip: VideoClip, cast: tuple[str, ...]
) -> CrossShotMemory:
    """Fold a finished clip into the running identity state.

    Digests are tiny scalar summaries of the final frame (mean intensity of
    the glyph's neighborhood when the clip tracked centers, whole frame
    otherwise); they change only for characters present in the clip.
    """
    last = clip.frames[-1]
    appearances = dict(memory.appearances)
    digests = dict(memory.digests)
    for name in cast:
        appearances[name] = appearances.get(name, 0) + 1
        region = last
        if clip.centers and name in clip.centers:
            cx, cy = clip.centers[name][-1]
            h, w = last.shape[:2]
            x0 = int(max(0, min(w - 1, cx - 8)))
            y0 = int(max(0, min(h - 1, cy - 8)))
            region = last[y0 : y0 + 16, x0 : x0 + 16]
            if region.size == 0:
                region = last
        digests[name] = round(float(region.mean()), 6)
    background_digests = dict(memory.background_digests)
    background_digests[clip.clip_id[:3]] = round(float(last.mean()), 6)
    return CrossShotMemory(
        ordinal=memory.ordinal + 1,
        appearances=appearances,
        digests=digests,
        background_digests=background_digests,
        last_frame=last,
    )


# ---------------------------------------------------------------------------
# IO helpers


def save_png(path: Path, frame: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(frame, mode="RGB").save(path, format="PNG")


def load_png(path: Path) -> np.ndarray:
    with Image.open(path) as image:
        return np.asarray(image.convert("RGB"), dtype=np.uint8)


def plan_digest(plan: StoryPlan) -> str:
    return hashlib.sha256(serialize_plan(plan).encode("utf-8")).hexdigest()


# config fields that change rendered bytes; operational knobs (out_root, jobs,
# mux, retries, endpoints) are deliberately left out so the same story gets
# the same run id regardless of where or how it executes
_IDENTITY_FIELDS = (
    "seed",
    "frame_width",
    "frame_height",
    "fps",
    "frame_count",
    "glyph_size",
    "max_speed",
    "edge_margin",
    "seam_threshold",
    "background_injection",
    "backend",
    "strict",
)


def identity_config(config: RunConfig) -> dict:
    data = {name: getattr(config, name) for name in _IDENTITY_FIELDS}
    data["seam_budget"] = config.seam_budget
    return data


def derive_run_id(plan: StoryPlan, config: RunConfig) -> str:
    fingerprint = json.dumps(identity_config(config), sort_keys=True)
    seed_material = f"{plan_digest(plan)}|{fingerprint}"
    return "run-" + hashlib.sha256(seed_material.encode("utf-8")).hexdigest()[:12]


# ---------------------------------------------------------------------------
# The renderer


class _Renderer:
    def __init__(
        self,
        plan: StoryPlan,
        config: RunConfig,
        run_dir: Path,
        service: Optional[MockBackendService],
    ):
        self.plan = plan
        self.config = config
        self.run_dir = run_dir
        self.service = service
        self.calls: list[dict] = []
        self.resumed_steps = 0
        self.backgrounds: dict[str, np.ndarray] = {}
        self.memory = CrossShotMemory.empty()
        self._handles: dict[str, BackendHandle] = {}
        self._lock = threading.Lock()

    def _mark_resumed(self) -> None:
        with self._lock:
            self.resumed_steps += 1

    def handle(self, seat: str) -> BackendHandle:
        with self._lock:
            if seat not in self._handles:
                self._handles[seat] = handle_for(seat, self.config, self.service)
            return self._handles[seat]

    def call(self, seat: str, label: str, payload: dict) -> dict:
        request = BackendRequest(
            seat=seat,
            request_id=f"{seat}-{label}",
            seed=self.config.seed,
            payload=payload,
        )
        response = call_backend(
            self.handle(seat),
            request,
            retries=self.config.retries,
            backoff=self.config.backoff,
        )
        return response.payload

    # -- backgrounds ---------------------------------------------------------

    def render_background(self, location: str) -> np.ndarray:
        """One canonical image per location per run; cached, never regenerated."""
        if location in self.backgrounds:
            return self.backgrounds[location]
        entry = next(e for e in self.plan.locations if e.name == location)
        path = self.run_dir / "backgrounds" / f"{location}.png"
        self.calls.append({"seat": "t2i", "label": location})
        if path.exists():
            image = load_png(path)
            self._mark_resumed()
        else:
            prompt = (
                f"location: {location}\n"
                f"backdrop: {entry.background_description}\n"
                "style: clean empty wide shot, no figures"
            )
            payload = self.call("t2i", location, {"prompt": prompt})
            image = decode_image(payload["image"])
            save_png(path, image)
        self.backgrounds[location] = image
        return image

    def shot_background(self, location: str, clip_id: str) -> tuple[np.ndarray, str]:
        """Injection on: the canonical image. Off: a per-shot variant."""
        canonical = self.render_background(location)
        if self.config.background_injection:
            return canonical, ""
        entry = next(e for e in self.plan.locations if e.name == location)
        variant = clip_id
        path = self.run_dir / "backgrounds" / "variants" / f"{location}-{variant}.png"
        if path.exists():
            self._mark_resumed()
            return load_png(path), variant
        prompt = (
            f"location: {location}\n"
            f"backdrop: {entry.background_description}\n"
            f"backdrop_variant: {variant}\n"
            "style: clean empty wide shot, no figures"
        )
        payload = self.call("t2i", f"{location}-{variant}", {"prompt": prompt})
        image = decode_image(payload["image"])
        save_png(path, image)
        return image, variant

    # -- keyframes -------------------------------------------------------------

    def compose_keyframe(
        self, shot: ShotDirective, scene_ordinal: int
    ) -> tuple[np.ndarray, NormalizedDirective]:
        if len(shot.characters) > 2:
            raise ValueError(
                f"keyframe for shot {shot.index} would stage {len(shot.characters)} characters"
            )
        clip_id = f"{scene_ordinal:03d}_{shot.index:02d}"
        scene = self._scene_for(shot)
        background, variant = self.shot_background(scene.location_name, clip_id)
        directive = normalize_directive(shot, self.plan, background_variant=variant)
        path = self.run_dir / "keyframes" / f"{clip_id}.png"
        if path.exists():
            self._mark_resumed()
            return load_png(path), directive
        references = self._reference_images(directive.cast)
        payload = self.call(
            "i2i",
            clip_id,
            {
                "image": encode_image(background),
                "references": references,
                "prompt": directive.text,
            },
        )
        keyframe = decode_image(payload["image"])
        save_png(path, keyframe)
        return keyframe, directive

    def _reference_images(self, cast: tuple[str, ...]) -> list[str]:
        refs = []
        by_name = {c.name: c for c in self.plan.spec.characters}
        for name in cast:
            ref = by_name[name].reference_image
            if ref and Path(ref).exists():
                refs.append(encode_image(load_png(Path(ref))))
        return refs

    def _scene_for(self, shot: ShotDirective) -> Scene:
        return next(
            s
            for s in self.plan.scenes
            if s.chapter_index == shot.chapter_index and s.index == shot.scene_index
        )

    # -- clips -------------------------------------------------------------------

    def _clip_paths(self, clip_id: str) -> tuple[Path, Path]:
        clip_dir = self.run_dir / "clips" / clip_id
        return clip_dir, clip_dir / "clip.json"

    def _load_clip(self, meta_path: Path) -> Optional[VideoClip]:
        if not meta_path.exists():
            return None
        meta = json.loads(meta_path.read_text())
        clip_dir = meta_path.parent
        frames = []
        for i in range(meta["frame_count"]):
            frame_path = clip_dir / f"frame_{i + 1:05d}.png"
            if not frame_path.exists():
                return None
            frames.append(load_png(frame_path))
        self._mark_resumed()
        return VideoClip(
            scene_ordinal=meta["scene_ordinal"],
            shot_index=meta["shot_index"],
            kind=meta["kind"],
            seat=meta["seat"],
            frames=frames,
            fps=meta["fps"],
            prompt=meta["prompt"],
            tau=meta.get("transition"),
            visibility=meta.get("visibility"),
            centers=meta.get("centers"),
        )

    def _store_clip(self, clip: VideoClip) -> None:
        clip_dir, meta_path = self._clip_paths(clip.clip_id)
        clip_dir.mkdir(parents=True, exist_ok=True)
        for i, frame in enumerate(clip.frames):
            save_png(clip_dir / f"frame_{i + 1:05d}.png", frame)
        meta = {
            "scene_ordinal": clip.scene_ordinal,
            "shot_index": clip.shot_index,
            "kind": clip.kind,
            "seat": clip.seat,
            "fps": clip.fps,
            "frame_count": len(clip.frames),
            "prompt": clip.prompt,
            "transition": clip.tau,
            "visibility": clip.visibility,
            "centers": clip.centers,
        }
        meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    def generate_narrative_shot(
        self,
        shot: ShotDirective,
        keyframe: np.ndarray,
        directive: NormalizedDirective,
        scene_ordinal: int,
    ) -> VideoClip:
        clip_id = f"{scene_ordinal:03d}_{shot.index:02d}"
        self.calls.append({"seat": "i2v", "label": clip_id})
        _, meta_path = self._clip_paths(clip_id)
        cached = self._load_clip(meta_path)
        if cached is not None:
            return cached
        prompt = directive.text + f"\nmemory: {self.memory.identity_line(directive.cast)}"
        payload = self.call(
            "i2v",
            clip_id,
            {
                "image": encode_image(keyframe),
                "prompt": prompt,
                "frame_count": self.config.frame_count,
                "fps": self.config.fps,
            },
        )
        clip = VideoClip(
            scene_ordinal=scene_ordinal,
            shot_index=shot.index,
            kind="narrative",
            seat="i2v",
            frames=[decode_image(f) for f in payload["frames"]],
            fps=self.config.fps,
            prompt=prompt,
            visibility=payload.get("visibility"),
            centers=payload.get("centers"),
        )
        self._store_clip(clip)
        return clip

    def generate_transition_shot(
        self,
        shot: ShotDirective,
        first_frame: np.ndarray,
        last_keyframe: np.ndarray,
        directive: NormalizedDirective,
        scene_ordinal: int,
    ) -> VideoClip:
        tau = shot.transition
        tau_payload = {
            "start": sorted(tau.start_chars),
            "end": sorted(tau.end_chars),
            "exiting": sorted(tau.exiting),
            "entering": sorted(tau.entering),
            "movement": tau.movement.value,
            "description": tau.description,
        }
        clip_id = f"{scene_ordinal:03d}_{shot.index:02d}"
        self.calls.append({"seat": "flf2v", "label": clip_id})
        _, meta_path = self._clip_paths(clip_id)
        cached = self._load_clip(meta_path)
        if cached is not None:
            return cached
        prompt = directive.text + f"\nmemory: {self.memory.identity_line(directive.cast)}"
        payload = self.call(
            "flf2v",
            clip_id,
            {
                "first": encode_image(first_frame),
                "last": encode_image(last_keyframe),
                "prompt": prompt,
                "transition": tau_payload,
                "frame_count": self.config.frame_count,
                "fps": self.config.fps,
            },
        )
        clip = VideoClip(
            scene_ordinal=scene_ordinal,
            shot_index=shot.index,
            kind="transition",
            seat="flf2v",
            frames=[decode_image(f) for f in payload["frames"]],
            fps=self.config.fps,
            prompt=prompt,
            tau=tau_payload,
            visibility=payload.get("visibility"),
            centers=payload.get("centers"),
        )
        self._store_clip(clip)
        return clip

    # -- scenes ---------------------------------------------------------------

    def render_scene(self, scene: Scene, ordinal: int) -> list[VideoClip]:
        shots = self.plan.shots_for_scene(scene.chapter_index, scene.index)
        odd_shots = [s for s in shots if s.index % 2 == 1]
        # the call trace must not depend on worker timing, so every step is
        # recorded here in shot order before any parallel execution starts
        self.render_background(scene.location_name)
        for shot in odd_shots:
            clip_id = f"{ordinal:03d}_{shot.index:02d}"
            if not self.config.background_injection:
                self.calls.append(
                    {"seat": "t2i", "label": f"{scene.location_name}-{clip_id}"}
                )
            self.calls.append({"seat": "i2i", "label": clip_id})
        keyframes: dict[int, tuple[np.ndarray, NormalizedDirective]] = {}
        if self.config.jobs > 1:
            with ThreadPoolExecutor(max_workers=self.config.jobs) as pool:
                futures = [
                    (shot.index, pool.submit(self.compose_keyframe, shot, ordinal))
                    for shot in odd_shots
                ]
                for index, future in futures:
                    keyframes[index] = future.result()
        else:
            for shot in odd_shots:
                keyframes[shot.index] = self.compose_keyframe(shot, ordinal)
        clips: list[VideoClip] = []
        for shot in shots:
            if shot.index % 2 == 1:
                keyframe, directive = keyframes[shot.index]
                clip = self.generate_narrative_shot(shot, keyframe, directive, ordinal)
            else:
                directive = normalize_directive(shot, self.plan)
                first = clips[-1].frames[-1]
                last_keyframe = keyframes[shot.index + 1][0]
                clip = self.generate_transition_shot(
                    shot, first, last_keyframe, directive, ordinal
                )
            cast = (
                tuple(sorted(shot.characters))
                if shot.kind is ShotKind.NARRATIVE
                else tuple(sorted(set(shot.transition.start_chars) | set(shot.transition.end_chars)))
            )
            self.memory = update_memory(self.memory, clip, cast)
            clips.append(clip)
        return clips


def _merge_tracks(
    clips: list[VideoClip], total: int
) -> tuple[Optional[dict], Optional[dict]]:
    """Stitch per-clip visibility/center tracks onto the global frame axis.

    Frames where a character is not tracked hold None. Returns (None, None)
    if any clip lacks track data (real backends usually do).
    """
    if any(c.visibility is None for c in clips):
        return None, None
    names = sorted({name for c in clips for name in c.visibility})
    visibility = {name: [None] * total for name in names}
    centers = {name: [None] * total for name in names}
    cursor = 0
    for clip in clips:
        length = len(clip.frames)
        for name in clip.visibility:
            visibility[name][cursor : cursor + length] = clip.visibility[name]
            if clip.centers and name in clip.centers:
                centers[name][cursor : cursor + length] = clip.centers[name]
        cursor += length
    return visibility, centers


def run_pipeline(
    plan: StoryPlan,
    config: RunConfig,
    service: Optional[MockBackendService] = None,
    run_id: Optional[str] = None,
) -> RunResult:
    """Render the whole plan; returns the run directory and manifest.

    Reruns with the same plan, config, and run id reuse every artifact
    already on disk, so an interrupted run picks up where it stopped.
    """
    report = validate_plan(plan, strict=config.strict)
    if not report.ok:
        raise PlanInvalid(report)
    if config.backend == "mock" and service is None:
        service = MockBackendService(geometry_from_config(config))
    run_id = run_id or derive_run_id(plan, config)
    run_dir = Path(config.out_root) / run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    renderer = _Renderer(plan, config, run_dir, service)

    scenes = plan.scenes_in_order()
    all_clips: list[VideoClip] = []
    scene_records = []
    scene_cuts = []
    cursor = 0
    for ordinal, scene in enumerate(scenes, start=1):
        scene_cuts.append(cursor)
        clips = renderer.render_scene(scene, ordinal)
        shot_records = []
        for clip in clips:
            shot_records.append(
                {
                    "index": clip.shot_index,
                    "kind": clip.kind,
                    "seat": clip.seat,
                    "clip_dir": f"clips/{clip.clip_id}",
                    "keyframe": (
                        f"keyframes/{clip.clip_id}.png" if clip.kind == "narrative" else None
                    ),
                    "frame_count": len(clip.frames),
                    "transition": clip.tau,
                }
            )
            cursor += len(clip.frames)
        scene_records.append(
            {
                "ordinal": ordinal,
                "chapter_index": scene.chapter_index,
                "scene_index": scene.index,
                "location": scene.location_name,
                "background": f"backgrounds/{scene.location_name}.png",
                "shots": shot_records,
            }
        )
        all_clips.extend(clips)

    # stitch: hard cuts between scenes, straight concatenation inside them
    stitched_dir = run_dir / "stitched"
    stitched_dir.mkdir(parents=True, exist_ok=True)
    total = sum(len(c.frames) for c in all_clips)
    frame_cursor = 0
    for clip in all_clips:
        for frame in clip.frames:
            frame_cursor += 1
            path = stitched_dir / f"frame_{frame_cursor:05d}.png"
            if not path.exists():
                save_png(path, frame)
    visibility, centers = _merge_tracks(all_clips, total)
    spans = []
    cursor = 0
    for clip in all_clips:
        spans.append(
            {
                "clip": clip.clip_id,
                "scene_ordinal": clip.scene_ordinal,
                "shot_index": clip.shot_index,
                "kind": clip.kind,
                "start": cursor,
                "end": cursor + len(clip.frames),
                "transition": clip.tau,
            }
        )
        cursor += len(clip.frames)
    stitched_meta = {
        "fps": config.fps,
        "width": config.frame_width,
        "height": config.frame_height,
        "total_frames": total,
        "scene_cuts": scene_cuts,
        "spans": spans,
        "visibility": visibility,
        "centers": centers,
        "seam_budget": config.seam_budget,
        "edge_margin": config.edge_margin,
    }
    (run_dir / "stitched" / "stitched.json").write_text(
        json.dumps(stitched_meta, indent=2, sort_keys=True) + "\n"
    )

    manifest = {
        "run_id": run_id,
        "status": "complete",
        "plan_digest": plan_digest(plan),
        "config": identity_config(config),
        "scenes": scene_records,
        "calls": renderer.calls,
        "stitched": {
            "dir": "stitched",
            "total_frames": total,
            "scene_cuts": scene_cuts,
        },
    }
    (run_dir / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    (run_dir / "plan.json").write_text(serialize_plan(plan))

    if config.mux:
        mux_output = run_dir / "story.out"
        run_mux(config.mux, stitched_dir, config.fps, mux_output)

    return RunResult(
        run_dir=run_dir,
        manifest=manifest,
        stitched_frames=total,
        resumed_steps=renderer.resumed_steps,
    )


def run_mux(template: str, frames_dir: Path, fps: int, out_path: Path) -> None:
    """Hand the stitched frames to an external muxer command.

    The template may use {frames_dir}, {fps}, and {out}; it runs without a
    shell. Nonzero exit raises MuxError.
    """
    command = template.format(frames_dir=str(frames_dir), fps=fps, out=str(out_path))
    try:
        finished = subprocess.run(
            shlex.split(command), capture_output=True, text=True, timeout=600
        )
    except (OSError, subprocess.SubprocessError) as exc:
        raise MuxError(f"muxer failed to start: {exc}") from exc
    if finished.returncode != 0:
        raise MuxError(
            f"muxer exited {finished.returncode}: {finished.stderr.strip()[:500]}"
        )


def load_manifest(run_dir: str | Path) -> dict:
    path = Path(run_dir) / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"no manifest under {run_dir}")
    return json.loads(path.read_text())
