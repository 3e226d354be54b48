"""End-to-end acceptance checks, one test per release criterion.

Each test is self-contained and runs against the deterministic mock
backends; the terminal summary prints a PASS/FAIL line per criterion
(see conftest.pytest_terminal_summary).
"""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

import infstory.schema as schema
from conftest import build_clean_plan, build_mini_plan, narrative_shot, scene_shots
from infstory.backends.client import handle_for
from infstory.backends.service import MockBackendService, geometry_from_config
from infstory.config import RunConfig
from infstory.dataset import (
    FilterVerdict,
    TransitionPrompt,
    assemble_manifest,
    generate_flavors,
    generate_variations,
    planned_pass_count,
    run_dataset_pipeline,
    synthesize_prompt,
)
from infstory.metrics import (
    background_drift,
    build_report,
    get_encoder,
    seam_continuity,
)
from infstory.pipeline import run_pipeline
from infstory.schema import (
    Chapter,
    CharacterRef,
    LocationEntry,
    Movement,
    Scene,
    StoryPlan,
    StorySpec,
    validate_plan,
)
from infstory.transitions import (
    OverlapError,
    classify_movement_type,
    derive_transition_metadata,
)

UNIVERSE = ("Ara", "Brin", "Cole", "Dana")


def render_config(out_root: Path, seed: int = 7, **kw) -> RunConfig:
    defaults = dict(seed=seed, frame_count=16, out_root=str(out_root))
    defaults.update(kw)
    return RunConfig(**defaults)


# --- criterion: transition calculus matches a brute-force oracle ------------


def all_subsets(names) -> list[frozenset]:
    return [
        frozenset(n for i, n in enumerate(names) if mask >> i & 1)
        for mask in range(2 ** len(names))
    ]


def oracle_movement(exiting, entering) -> Movement:
    if not exiting and not entering:
        return Movement.NO_CHANGE
    if not exiting:
        return Movement.ENTRY
    if not entering:
        return Movement.EXIT
    return Movement.COMBINATION


def test_transition_oracle_all_256_subset_pairs():
    subsets = all_subsets(UNIVERSE)
    assert len(subsets) == 16
    checked = 0
    for start in subsets:
        for end in subsets:
            exiting = frozenset(n for n in UNIVERSE if n in start and n not in end)
            entering = frozenset(n for n in UNIVERSE if n in end and n not in start)
            want = oracle_movement(exiting, entering)
            assert classify_movement_type(exiting, entering) is want

            tau = derive_transition_metadata(
                narrative_shot(1, 1, 1, sorted(start)),
                narrative_shot(1, 1, 3, sorted(end)),
            )
            assert tau.start_chars == set(start)
            assert tau.end_chars == set(end)
            assert tau.prev_chars == set(start)
            assert tau.exiting == set(exiting)
            assert tau.entering == set(entering)
            assert tau.movement is want
            assert not (tau.exiting & tau.entering)
            for mover in exiting | entering:
                assert mover in tau.description
            checked += 1
    assert checked == 256
    with pytest.raises(OverlapError):
        classify_movement_type({"Ara"}, {"Ara", "Brin"})


# --- criterion: each validation code isolated by a single fault -------------


def fault_even_shots(plan: StoryPlan) -> None:
    plan.scenes[0].shot_count = 2


def fault_adjacent_location(plan: StoryPlan) -> None:
    plan.scenes[1].location_name = plan.scenes[0].location_name


def fault_unknown_character(plan: StoryPlan) -> None:
    shot = plan.shots_for_scene(4, 1)[0]
    shot.poses = dict(shot.poses, Zed=schema.Pose.STANDING)
    shot.emotions = dict(shot.emotions, Zed=schema.Emotion.NEUTRAL)


def fault_too_many_characters(plan: StoryPlan) -> None:
    shot = plan.shots_for_scene(5, 1)[0]
    cast = ["Ara", "Brin", "Cole"]
    shot.poses = {c: schema.Pose.STANDING for c in cast}
    shot.emotions = {c: schema.Emotion.NEUTRAL for c in cast}


def fault_vocabulary(plan: StoryPlan) -> None:
    shot = plan.shots_for_scene(2, 1)[0]
    shot.poses = dict(shot.poses, Ara="Leaping")


def fault_unknown_location(plan: StoryPlan) -> None:
    plan.scenes[5].location_name = "Volcano"


def fault_transition_mismatch(plan: StoryPlan) -> None:
    plan.shots_for_scene(1, 1)[1].transition.exiting = {"Ara"}


def fault_chapter_range(plan: StoryPlan) -> None:
    plan.chapters = plan.chapters + [
        Chapter(index=i, summary=f"extra leg {i}", characters={"Ara"})
        for i in range(11, 22)
    ]


def fault_location_range(plan: StoryPlan) -> None:
    plan.locations = plan.locations + [
        LocationEntry(name=f"Annex{i}", background_description="A bare annex room.")
        for i in range(5)
    ]


FAULTS = {
    schema.E_EVEN_SHOTS: fault_even_shots,
    schema.E_ADJ_LOCATION: fault_adjacent_location,
    schema.E_CHAR_NOT_ALLOWED: fault_unknown_character,
    schema.E_TOO_MANY_CHARS: fault_too_many_characters,
    schema.E_VOCAB: fault_vocabulary,
    schema.E_LOCATION_UNKNOWN: fault_unknown_location,
    schema.E_TRANSITION_MISMATCH: fault_transition_mismatch,
    schema.E_CHAPTER_RANGE: fault_chapter_range,
    schema.E_LOCATION_RANGE: fault_location_range,
}


def test_validator_isolates_each_of_nine_codes():
    assert len(FAULTS) == 9
    assert set(FAULTS) == set(schema.ALL_CODES)
    assert validate_plan(build_clean_plan(), strict=True).codes() == set()
    for code, sabotage in sorted(FAULTS.items()):
        plan = build_clean_plan()
        sabotage(plan)
        report = validate_plan(plan, strict=True)
        assert report.codes() == {code}, f"{code}: got {report.codes()}"


# --- criterion: backend schedule and frame totals on a 3+5 shot story -------


def test_schedule_conformance_and_frame_totals(tmp_path):
    config = render_config(tmp_path)
    result = run_pipeline(build_mini_plan(), config)

    seats = [c["seat"] for c in result.manifest["calls"]]
    scene1 = ["t2i", "i2i", "i2i", "i2v", "flf2v", "i2v"]
    scene2 = ["t2i", "i2i", "i2i", "i2i", "i2v", "flf2v", "i2v", "flf2v", "i2v"]
    assert seats == scene1 + scene2

    meta = json.loads((Path(result.run_dir) / "stitched" / "stitched.json").read_text())
    kinds = [s["kind"] for s in meta["spans"]]
    assert kinds == ["narrative", "transition"] * 1 + ["narrative"] + [
        "narrative", "transition", "narrative", "transition", "narrative"
    ]
    assert len(meta["spans"]) == 8

    total = sum(s["end"] - s["start"] for s in meta["spans"])
    assert total == 8 * config.frame_count
    assert meta["total_frames"] == total
    assert result.stitched_frames == total
    on_disk = sorted(Path(result.run_dir, "stitched").glob("frame_*.png"))
    assert len(on_disk) == total


# --- criterion: seam continuity over every movement type, splice flagged ----


def movement_plan() -> StoryPlan:
    """One 9-shot scene whose four transitions hit all four movement types."""
    spec = StorySpec(
        description="Three couriers trade places inside the castle keep.",
        characters=[
            CharacterRef(name="Ara", description="A wiry scout in a gray cloak."),
            CharacterRef(name="Brin", description="A broad-shouldered smith."),
            CharacterRef(name="Cole", description="A young archivist."),
        ],
    )
    casts = [["Ara"], ["Ara"], ["Ara", "Brin"], ["Brin"], ["Cole"]]
    return StoryPlan(
        spec=spec,
        chapters=[
            Chapter(index=1, summary="The handoff.", characters={"Ara", "Brin", "Cole"})
        ],
        locations=[
            LocationEntry(
                name="Castle",
                background_description="A quiet castle hall in soft light, empty of people.",
            )
        ],
        scenes=[
            Scene(
                chapter_index=1,
                index=1,
                location_name="Castle",
                characters={"Ara", "Brin", "Cole"},
                tone="steady",
                shot_count=9,
            )
        ],
        shots=scene_shots(1, 1, casts),
    )


def test_seam_continuity_all_movement_types_and_splice(tmp_path):
    config = render_config(tmp_path)
    result = run_pipeline(movement_plan(), config)
    meta = json.loads((Path(result.run_dir) / "stitched" / "stitched.json").read_text())

    movements = {
        s["transition"]["movement"] for s in meta["spans"] if s["transition"]
    }
    assert movements == {"NoChange", "Entry", "Exit", "Combination"}

    report = build_report(result.run_dir, make_figures=False)
    seams = report.data["seams"]
    assert seams["ok"] is True
    assert len(seams["events"]) == 8  # nine clips, eight in-scene seams
    assert all(e["delta"] <= meta["seam_budget"] + 1e-12 for e in seams["events"])

    edges = report.data["edges"]
    assert edges["ok"] is True
    moves = {(e["character"], e["move"]) for e in edges["events"]}
    assert moves == {
        ("Brin", "entry"), ("Ara", "exit"), ("Brin", "exit"), ("Cole", "entry")
    }
    assert all(e["ok"] for e in edges["events"])

    # a spliced hard cut mid-scene must be flagged: swap the solo-Ara clip
    # with the Ara-and-Brin clip so Brin pops in and out between frames
    t = config.frame_count
    for track in meta["visibility"].values():
        track[2 * t : 3 * t], track[4 * t : 5 * t] = (
            track[4 * t : 5 * t],
            track[2 * t : 3 * t],
        )
    spliced = seam_continuity(meta)
    assert spliced["ok"] is False
    assert spliced["max_step"] > meta["seam_budget"]


# --- criterion: background injection strictly lowers drift, 10/10 -----------


def run_drift(run_dir, encoder_name: str) -> float:
    report = build_report(run_dir, encoder_name=encoder_name, make_figures=False)
    return sum(row["background_drift"] for row in report.data["scenes"])


def test_injection_ordering_five_seeds_both_encoders(tmp_path):
    wins = 0
    for seed in (3, 7, 11, 19, 23):
        on = run_pipeline(
            build_mini_plan(),
            render_config(tmp_path / f"on-{seed}", seed=seed),
        )
        off = run_pipeline(
            build_mini_plan(),
            render_config(
                tmp_path / f"off-{seed}", seed=seed, background_injection=False
            ),
        )
        for encoder_name in ("grid", "hist"):
            drift_on = run_drift(on.run_dir, encoder_name)
            drift_off = run_drift(off.run_dir, encoder_name)
            assert drift_on < drift_off, (seed, encoder_name, drift_on, drift_off)
            wins += 1
    assert wins == 10


# --- criterion: drift metric equals the naive oracle ------------------------


def naive_drift(frames, background, encoder) -> float:
    ref = [float(x) for x in encoder.encode(background)]
    total = 0.0
    for frame in frames:
        code = [float(x) for x in encoder.encode(frame)]
        total += sum((a - b) ** 2 for a, b in zip(code, ref))
    return total


def test_drift_matches_naive_oracle_on_100_random_clips():
    rng = np.random.default_rng(41)
    encoders = [get_encoder("grid"), get_encoder("hist")]
    for i in range(100):
        count = int(rng.integers(1, 6))
        frames = [
            rng.integers(0, 256, size=(36, 64, 3)).astype(np.uint8)
            for _ in range(count)
        ]
        background = rng.integers(0, 256, size=(36, 64, 3)).astype(np.uint8)
        enc = encoders[i % 2]
        assert abs(
            background_drift(frames, background, enc)
            - naive_drift(frames, background, enc)
        ) <= 1e-9

    flat = np.full((36, 64, 3), 129, dtype=np.uint8)
    for enc in encoders:
        assert background_drift([flat.copy() for _ in range(5)], flat, enc) == 0.0


# --- criterion: dataset factory counts, filter trust, and balance -----------


def dataset_config(out_root: Path, seed: int = 5) -> RunConfig:
    return RunConfig(
        seed=seed,
        frame_width=64,
        frame_height=36,
        glyph_size=6,
        edge_margin=4,
        dataset_frame_count=6,
        out_root=str(out_root),
    )


def test_dataset_factory_counts_filter_and_balance(tmp_path):
    config = dataset_config(tmp_path)
    service = MockBackendService(geometry_from_config(config))
    llm = handle_for("llm", config, service)

    # full-scale planning: 40 flavors, 250 variations each, 10,000 prompts
    flavors = generate_flavors(llm, config)
    assert len(flavors) == 40
    by_category = Counter(f.category for f in flavors)
    assert all(by_category[c] == 8 for c in by_category)
    variations = []
    for flavor in flavors:
        variations.extend(
            generate_variations(llm, flavor, config, batches=10, per_batch=25)
        )
    assert len(variations) == 10_000
    per_flavor = Counter(v.flavor_id for v in variations)
    assert set(per_flavor.values()) == {250}
    assert all(
        v.start_count == 0 for v in variations if v.category == "Entry"
    )
    flavor_index = {f.id: f for f in flavors}
    prompts = [
        synthesize_prompt(llm, v, flavor_index[v.flavor_id], config)
        for v in variations
    ]
    assert len(prompts) == 10_000

    # reduced-scale end to end keeps the ratios and the calibrated pass rate
    result = run_dataset_pipeline(config, tmp_path / "ds", scale=0.1)
    stats = result.stats
    assert stats["flavors"] == 40
    assert stats["prompts"] == 1000
    assert stats["passed"] == planned_pass_count(1000, config.pass_rate) == 398
    assert abs(stats["pass_rate"] - 0.398) <= 0.005

    # the filter passes exactly the planted-match subset
    plant_dir = tmp_path / "plants"
    plant_config = dataset_config(tmp_path, seed=9)
    plant_service = MockBackendService(geometry_from_config(plant_config))
    run_dataset_pipeline(
        plant_config, plant_dir, scale=0.1, per_batch=1,
        service=plant_service, until="clips",
    )
    rows = [
        json.loads(line)
        for line in (plant_dir / "variations.jsonl").read_text().splitlines()
    ]
    assert len(rows) == 40
    chosen = {row["id"] for row in sorted(rows, key=lambda r: r["id"])[::2]}
    for row in rows:
        expected = [row["start_count"], row["end_count"]]
        if row["id"] in chosen:
            plant_service.vlm_plants[row["id"]] = expected
        else:
            wrong = (expected[0] + 1) % 5
            plant_service.vlm_plants[row["id"]] = [wrong, expected[1]]
    run_dataset_pipeline(
        plant_config, plant_dir, scale=0.1, per_batch=1,
        service=plant_service, until="verdicts",
    )
    verdicts = [
        json.loads(line)
        for line in (plant_dir / "verdicts.jsonl").read_text().splitlines()
    ]
    assert {v["variation_id"] for v in verdicts if v["passed"]} == chosen

    # manifest balance: 1000 rows stay within 2% of uniform per category
    pool, prompt_index = [], {}
    for category in ("Entry", "Exit", "NoChange", "Combination", "Replacement"):
        for i in range(230):
            vid = f"{category.lower()}-pool-{i:03d}"
            pool.append(
                FilterVerdict(
                    variation_id=vid,
                    category=category,
                    expected=(1, 2),
                    counts=(1, 2),
                    passed=True,
                    caption=f"caption for {vid}",
                )
            )
            prompt_index[vid] = TransitionPrompt(
                variation_id=vid,
                category=category,
                positive=f"A scene that opens with 1 figure and ends with 2. {vid}",
                negative="no cuts, no text",
                start_count=1,
                end_count=2,
            )
    manifest = assemble_manifest(prompt_index, pool, rows=1000, seed=5)
    assert len(manifest) == 1000
    shares = Counter(row["category"] for row in manifest)
    for category, count in shares.items():
        assert abs(count - 200) <= 20, (category, count)


# --- criterion: byte-identical reruns ----------------------------------------


def test_determinism_byte_identical_reruns(tmp_path):
    first = run_pipeline(build_mini_plan(), render_config(tmp_path / "a", seed=11))
    second = run_pipeline(build_mini_plan(), render_config(tmp_path / "b", seed=11))
    assert Path(first.run_dir).name == Path(second.run_dir).name

    relative = [
        p.relative_to(first.run_dir)
        for p in sorted(Path(first.run_dir).rglob("*"))
        if p.is_file()
    ]
    assert relative, "run produced no artifacts"
    for rel in relative:
        a, b = Path(first.run_dir, rel), Path(second.run_dir, rel)
        assert b.exists(), f"second run lacks {rel}"
        assert a.read_bytes() == b.read_bytes(), f"{rel} differs between reruns"
    second_files = [p for p in sorted(Path(second.run_dir).rglob("*")) if p.is_file()]
    assert len(second_files) == len(relative)
