from __future__ import annotations

import json
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from infstory.backends.client import BackendError
from infstory.backends.faults import MockFaults
from infstory.backends.service import MockBackendService, geometry_from_config
from infstory.config import RunConfig, apply_overrides
from infstory.pipeline import (
    CrossShotMemory,
    MuxError,
    PlanInvalid,
    VideoClip,
    derive_run_id,
    load_manifest,
    load_png,
    normalize_directive,
    run_pipeline,
    update_memory,
)
from infstory.schema import ShotKind


def make_config(tmp_path: Path, **overrides) -> RunConfig:
    base = dict(seed=7, frame_count=16, fps=8, out_root=str(tmp_path / "runs"))
    base.update(overrides)
    return apply_overrides(RunConfig(), **base)


class CountingService(MockBackendService):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.seat_counts: Counter = Counter()

    def handle(self, request):
        self.seat_counts[request.seat] += 1
        return super().handle(request)


def seats(manifest: dict) -> list[str]:
    return [c["seat"] for c in manifest["calls"]]


# ---------------------------------------------------------------------------


class TestNormalizeDirective:
    def test_narrative_bundle(self, mini_plan):
        shot = mini_plan.shots[2]  # scene 1 shot 3, cast Ara+Brin
        d = normalize_directive(shot, mini_plan)
        assert d.kind is ShotKind.NARRATIVE
        assert d.cast == ("Ara", "Brin")
        assert "location: Castle" in d.text
        assert "backdrop: A quiet castle" in d.text
        assert "characters: Ara | Brin" in d.text
        assert "emotion[Ara]: Neutral" in d.text
        assert "pose[Brin]: Standing" in d.text
        assert "keyframe: keyframe for shot 3" in d.text
        assert "backdrop_variant:" not in d.text

    def test_transition_bundle_uses_cast_union(self, mini_plan):
        shot = mini_plan.shots[1]  # Entry transition, Ara -> Ara+Brin
        d = normalize_directive(shot, mini_plan)
        assert d.kind is ShotKind.TRANSITION
        assert d.cast == ("Ara", "Brin")
        assert "pose[" not in d.text
        assert "emotion[" not in d.text
        # action carries the movement description
        assert "action: " in d.text

    def test_variant_line_only_when_salted(self, mini_plan):
        shot = mini_plan.shots[0]
        salted = normalize_directive(shot, mini_plan, background_variant="001_01")
        assert "backdrop_variant: 001_01" in salted.text

    def test_missing_scene_rejected(self, mini_plan):
        shot = mini_plan.shots[0].model_copy(update={"scene_index": 9})
        with pytest.raises(ValueError, match="missing scene"):
            normalize_directive(shot, mini_plan)


class TestMemory:
    def _clip(self, cast_frame: np.ndarray) -> VideoClip:
        return VideoClip(
            scene_ordinal=1,
            shot_index=1,
            kind="narrative",
            seat="i2v",
            frames=[cast_frame],
            fps=8,
            prompt="",
            visibility={"Ara": [1.0]},
            centers={"Ara": [[20.0, 20.0]]},
        )

    def test_appearances_count_only_cast(self):
        frame = np.zeros((72, 128, 3), dtype=np.uint8)
        memory = update_memory(CrossShotMemory.empty(), self._clip(frame), ("Ara",))
        assert memory.appearances == {"Ara": 1}
        assert memory.ordinal == 1
        memory = update_memory(memory, self._clip(frame), ("Ara",))
        assert memory.appearances == {"Ara": 2}

    def test_digests_change_only_for_present(self):
        dark = np.zeros((72, 128, 3), dtype=np.uint8)
        bright = np.full((72, 128, 3), 200, dtype=np.uint8)
        memory = update_memory(CrossShotMemory.empty(), self._clip(dark), ("Ara", "Brin"))
        first = dict(memory.digests)
        memory = update_memory(memory, self._clip(bright), ("Ara",))
        assert memory.digests["Ara"] != first["Ara"]
        assert memory.digests["Brin"] == first["Brin"]

    def test_identity_line_wording(self):
        memory = CrossShotMemory.empty()
        assert memory.identity_line(("Ara",)) == "Ara first appearance"
        memory = CrossShotMemory(appearances={"Ara": 2})
        assert "seen in 2 earlier clip(s)" in memory.identity_line(("Ara",))
        assert memory.identity_line(()) == "no recurring characters"

    def test_last_frame_threaded(self):
        frame = np.full((72, 128, 3), 33, dtype=np.uint8)
        memory = update_memory(CrossShotMemory.empty(), self._clip(frame), ("Ara",))
        assert np.array_equal(memory.last_frame, frame)


# ---------------------------------------------------------------------------


EXPECTED_SEATS = [
    # scene 1: 3 shots
    "t2i", "i2i", "i2i", "i2v", "flf2v", "i2v",
    # scene 2: 5 shots
    "t2i", "i2i", "i2i", "i2i", "i2v", "flf2v", "i2v", "flf2v", "i2v",
]


class TestRunPipeline:
    def test_schedule_and_artifacts(self, mini_plan, tmp_path):
        config = make_config(tmp_path)
        result = run_pipeline(mini_plan, config)
        manifest = result.manifest
        assert seats(manifest) == EXPECTED_SEATS
        labels = [c["label"] for c in manifest["calls"]]
        assert labels[0] == "Castle"
        assert labels[1:3] == ["001_01", "001_03"]
        assert labels[3:6] == ["001_01", "001_02", "001_03"]
        assert labels[6] == "Forest"
        # 8 clips, uniform length
        assert result.stitched_frames == 8 * config.frame_count
        stitched = sorted((result.run_dir / "stitched").glob("frame_*.png"))
        assert len(stitched) == result.stitched_frames
        assert manifest["stitched"]["scene_cuts"] == [0, 3 * config.frame_count]
        for clip_id in ("001_01", "001_02", "001_03", "002_05"):
            assert (result.run_dir / "clips" / clip_id / "clip.json").exists()
        assert (result.run_dir / "backgrounds" / "Castle.png").exists()
        assert (result.run_dir / "keyframes" / "002_05.png").exists()
        assert load_manifest(result.run_dir) == manifest

    def test_clip_endpoints_are_byte_copies(self, mini_plan, tmp_path):
        """Narrative clips open on their keyframe; transitions bridge exactly."""
        config = make_config(tmp_path)
        result = run_pipeline(mini_plan, config)
        run = result.run_dir
        k1 = load_png(run / "keyframes" / "001_01.png")
        k3 = load_png(run / "keyframes" / "001_03.png")
        n1_first = load_png(run / "clips" / "001_01" / "frame_00001.png")
        n1_last = load_png(run / "clips" / "001_01" / f"frame_{config.frame_count:05d}.png")
        t2_first = load_png(run / "clips" / "001_02" / "frame_00001.png")
        t2_last = load_png(run / "clips" / "001_02" / f"frame_{config.frame_count:05d}.png")
        n3_first = load_png(run / "clips" / "001_03" / "frame_00001.png")
        assert np.array_equal(n1_first, k1)
        assert np.array_equal(t2_first, n1_last)
        assert np.array_equal(t2_last, k3)
        assert np.array_equal(n3_first, k3)

    def test_visibility_merged_over_global_axis(self, mini_plan, tmp_path):
        config = make_config(tmp_path)
        result = run_pipeline(mini_plan, config)
        meta = json.loads((result.run_dir / "stitched" / "stitched.json").read_text())
        vis = meta["visibility"]
        assert set(vis) == {"Ara", "Brin", "Cole"}
        total = meta["total_frames"]
        assert all(len(track) == total for track in vis.values())
        # Ara appears only in scene 1; scene 2 frames stay untracked
        scene2_start = meta["scene_cuts"][1]
        assert all(v is None for v in vis["Ara"][scene2_start:])
        assert any(v is not None for v in vis["Ara"][:scene2_start])
        spans = meta["spans"]
        assert [s["clip"] for s in spans][:3] == ["001_01", "001_02", "001_03"]
        assert spans[0]["end"] == spans[1]["start"]
        assert spans[1]["transition"]["entering"] == ["Brin"]

    def test_deterministic_reruns(self, mini_plan, tmp_path):
        config_a = make_config(tmp_path / "a")
        config_b = make_config(tmp_path / "b")
        res_a = run_pipeline(mini_plan, config_a)
        res_b = run_pipeline(mini_plan, config_b)
        text_a = (res_a.run_dir / "manifest.json").read_text()
        text_b = (res_b.run_dir / "manifest.json").read_text()
        assert text_a == text_b
        frames_a = sorted((res_a.run_dir / "stitched").glob("frame_*.png"))
        frames_b = sorted((res_b.run_dir / "stitched").glob("frame_*.png"))
        assert [p.name for p in frames_a] == [p.name for p in frames_b]
        for pa, pb in zip(frames_a, frames_b):
            assert pa.read_bytes() == pb.read_bytes(), pa.name

    def test_seed_changes_output(self, mini_plan, tmp_path):
        res_a = run_pipeline(mini_plan, make_config(tmp_path / "a", seed=7))
        res_b = run_pipeline(mini_plan, make_config(tmp_path / "b", seed=8))
        frame_a = (res_a.run_dir / "stitched" / "frame_00001.png").read_bytes()
        frame_b = (res_b.run_dir / "stitched" / "frame_00001.png").read_bytes()
        assert frame_a != frame_b

    def test_rerun_reuses_artifacts(self, mini_plan, tmp_path):
        config = make_config(tmp_path)
        service = CountingService(geometry_from_config(config))
        first = run_pipeline(mini_plan, config, service=service)
        assert first.resumed_steps == 0
        counts_after_first = dict(service.seat_counts)
        second = run_pipeline(mini_plan, config, service=service)
        assert dict(service.seat_counts) == counts_after_first  # no new backend work
        assert second.resumed_steps == 2 + 5 + 8  # backgrounds + keyframes + clips
        assert second.manifest == first.manifest

    def test_crash_then_resume_matches_clean_run(self, mini_plan, tmp_path):
        config = make_config(tmp_path)
        faulty = MockBackendService(
            geometry_from_config(config), faults=MockFaults(fatal_seats={"flf2v"})
        )
        with pytest.raises(BackendError):
            run_pipeline(mini_plan, config, service=faulty)
        # partial artifacts exist, no manifest yet
        run_dir = Path(config.out_root) / derive_run_id(mini_plan, config)
        assert (run_dir / "clips" / "001_01" / "clip.json").exists()
        assert not (run_dir / "manifest.json").exists()
        resumed = run_pipeline(mini_plan, config)
        assert resumed.resumed_steps > 0
        clean = run_pipeline(mini_plan, make_config(tmp_path / "clean"))
        assert resumed.manifest["calls"] == clean.manifest["calls"]
        for name in ("frame_00001.png", f"frame_{resumed.stitched_frames:05d}.png"):
            assert (resumed.run_dir / "stitched" / name).read_bytes() == (
                clean.run_dir / "stitched" / name
            ).read_bytes()

    def test_parallel_jobs_identical(self, mini_plan, tmp_path):
        serial = run_pipeline(mini_plan, make_config(tmp_path / "s", jobs=1))
        parallel = run_pipeline(mini_plan, make_config(tmp_path / "p", jobs=3))
        assert serial.manifest == parallel.manifest
        sa = sorted((serial.run_dir / "stitched").glob("frame_*.png"))
        pa = sorted((parallel.run_dir / "stitched").glob("frame_*.png"))
        for a, b in zip(sa, pa):
            assert a.read_bytes() == b.read_bytes(), a.name

    def test_invalid_plan_rejected(self, mini_plan, tmp_path):
        mini_plan.scenes[0].shot_count = 2
        with pytest.raises(PlanInvalid, match="E_EVEN_SHOTS"):
            run_pipeline(mini_plan, make_config(tmp_path))

    def test_strict_mode_escalates_range_warnings(self, mini_plan, tmp_path):
        # the mini plan has 2 chapters, fine normally, fatal under strict
        with pytest.raises(PlanInvalid, match="E_CHAPTER_RANGE"):
            run_pipeline(mini_plan, make_config(tmp_path, strict=True))


class TestBackgroundInjection:
    """Same scene, same cast: frames match iff the backdrop is pinned."""

    def _mid_frames(self, run_dir: Path, frame_count: int):
        mid = frame_count // 2
        a = load_png(run_dir / "clips" / "002_01" / f"frame_{mid:05d}.png")
        b = load_png(run_dir / "clips" / "002_03" / f"frame_{mid:05d}.png")
        return a, b

    def test_injection_on_pins_backdrop(self, mini_plan, tmp_path):
        config = make_config(tmp_path)
        result = run_pipeline(mini_plan, config)
        a, b = self._mid_frames(result.run_dir, config.frame_count)
        # clips 002_01 and 002_03 share cast and seed; identical pixels
        assert np.array_equal(a, b)

    def test_injection_off_lets_backdrop_drift(self, mini_plan, tmp_path):
        config = make_config(tmp_path, background_injection=False)
        result = run_pipeline(mini_plan, config)
        a, b = self._mid_frames(result.run_dir, config.frame_count)
        assert not np.array_equal(a, b)
        # scheduled trace now carries one extra backdrop render per keyframe
        t2i_labels = [c["label"] for c in result.manifest["calls"] if c["seat"] == "t2i"]
        assert "Forest-002_01" in t2i_labels
        assert (
            result.run_dir / "backgrounds" / "variants" / "Forest-002_01.png"
        ).exists()


class TestMux:
    def test_mux_invoked(self, mini_plan, tmp_path):
        script = tmp_path / "mux.py"
        script.write_text(
            "import pathlib, sys\n"
            "frames = sorted(pathlib.Path(sys.argv[1]).glob('frame_*.png'))\n"
            "pathlib.Path(sys.argv[3]).write_text(f'{len(frames)} @ {sys.argv[2]}fps')\n"
        )
        config = make_config(
            tmp_path, mux=f"python3 {script} {{frames_dir}} {{fps}} {{out}}"
        )
        result = run_pipeline(mini_plan, config)
        out = result.run_dir / "story.out"
        assert out.read_text() == f"{result.stitched_frames} @ {config.fps}fps"

    def test_mux_failure_raises(self, mini_plan, tmp_path):
        config = make_config(tmp_path, mux="python3 -c import_sys;sys.exit(3)")
        with pytest.raises(MuxError):
            run_pipeline(mini_plan, config)


class TestRunId:
    def test_derived_id_stable_and_sensitive(self, mini_plan, tmp_path):
        config = make_config(tmp_path)
        assert derive_run_id(mini_plan, config) == derive_run_id(mini_plan, config)
        other = make_config(tmp_path, seed=11)
        assert derive_run_id(mini_plan, config) != derive_run_id(mini_plan, other)

    def test_explicit_run_id_honored(self, mini_plan, tmp_path):
        config = make_config(tmp_path)
        result = run_pipeline(mini_plan, config, run_id="custom-042")
        assert result.run_dir.name == "custom-042"
