"""Synthetic transition dataset: plan, render, filter, assemble.

Four stages, each resumable from its on-disk output:

1. flavors      - one writer call proposes 8 scenario flavors per category
2. variations   - each flavor expands into batches of counted variations,
                  then one training prompt per variation
3. clips        - every variation renders to a tiny synthetic clip; a seeded
                  failure plan corrupts a fixed fraction so the filter has
                  something to catch
4. filter       - a vision check counts figures in the first and last frame;
                  zero tolerance, the counts must match the declared pair
5. manifest     - passing clips assemble into a category-balanced manifest

Every artifact is a pure function of (seed, scale), so reruns are
byte-identical and interrupted runs pick up where they stopped.
"""

from __future__ import annotations

import csv
import hashlib
import json
import random
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Optional

from .backends.client import BackendHandle, call_backend, handle_for
from .backends.mockworld import MockWorld
from .backends.protocol import BackendRequest, decode_image, encode_image
from .backends.service import MockBackendService, geometry_from_config
from .config import RunConfig
from .pipeline import load_png, save_png

CATEGORIES = ("Entry", "Exit", "NoChange", "Combination", "Replacement")
FLAVORS_PER_CATEGORY = 8
BATCHES_PER_FLAVOR = 10
VARIATIONS_PER_BATCH = 25
MAX_FIGURES = 4
DEFAULT_STYLES = ("anime", "ink wash", "paper cutout", "film grain")
ASK_ATTEMPTS = 3


class DatasetError(RuntimeError):
    pass


class EmptyCategoryError(DatasetError):
    """No passing clips at all for a category the manifest needs."""


@dataclass(frozen=True)
class ScenarioFlavor:
    id: str
    category: str
    text: str
    style_hint: str


@dataclass(frozen=True)
class ScenarioVariation:
    id: str
    flavor_id: str
    category: str
    batch: int
    start_count: int
    end_count: int
    style: str
    setting: str


@dataclass(frozen=True)
class TransitionPrompt:
    variation_id: str
    category: str
    positive: str
    negative: str
    start_count: int
    end_count: int


@dataclass(frozen=True)
class FilterVerdict:
    variation_id: str
    category: str
    expected: tuple[int, int]
    counts: tuple[int, int]
    passed: bool
    caption: str


# ---------------------------------------------------------------------------
# Category rules


def category_of(start: set[str], end: set[str]) -> str:
    """Total classification of an endpoint cast pair.

    A full swap of equal size is Replacement; any other mix of departures
    and arrivals is Combination.
    """
    exiting, entering = start - end, end - start
    if not exiting and not entering:
        return "NoChange"
    if not exiting:
        return "Entry"
    if not entering:
        return "Exit"
    if exiting == start and entering == end and len(start) == len(end):
        return "Replacement"
    return "Combination"


def counts_allowed(category: str, start: int, end: int) -> bool:
    if not (0 <= start <= MAX_FIGURES and 0 <= end <= MAX_FIGURES):
        return False
    if category == "Entry":
        return start == 0 and end >= 1
    if category == "Exit":
        return start >= 1 and end == 0
    if category == "NoChange":
        return start == end
    if category == "Replacement":
        return start == end and start >= 1
    if category == "Combination":
        # both endpoints populated; (1,1) cannot both share and swap
        return start >= 1 and end >= 1 and not (start == end == 1)
    return False


def endpoint_names(variation: ScenarioVariation) -> tuple[list[str], list[str]]:
    """Per-clip cast names realizing the declared category and counts."""
    vid, s, e = variation.id, variation.start_count, variation.end_count
    category = variation.category
    if category == "NoChange":
        shared = [f"{vid}:p{i}" for i in range(s)]
        return shared, list(shared)
    if category == "Entry":
        return [], [f"{vid}:e{i}" for i in range(e)]
    if category == "Exit":
        return [f"{vid}:x{i}" for i in range(s)], []
    if category == "Replacement":
        return [f"{vid}:x{i}" for i in range(s)], [f"{vid}:e{i}" for i in range(e)]
    if s == e:  # Combination with equal counts keeps one shared figure
        shared = [f"{vid}:p0"]
        start = shared + [f"{vid}:x{i}" for i in range(1, s)]
        end = shared + [f"{vid}:e{i}" for i in range(1, e)]
        return start, end
    return [f"{vid}:x{i}" for i in range(s)], [f"{vid}:e{i}" for i in range(e)]


# ---------------------------------------------------------------------------
# Failure plan


def _digest_int(*parts: object) -> int:
    joined = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(joined.encode("utf-8")).digest()[:8], "big")


def planned_pass_count(total: int, pass_rate: float) -> int:
    return int(round(pass_rate * total))


def plan_failures(variation_ids: list[str], pass_rate: float, seed: int) -> set[str]:
    """Pick exactly total - round(pass_rate * total) ids to corrupt."""
    ordered = sorted(variation_ids)
    rng = random.Random(f"{seed}|dataset-failures")
    rng.shuffle(ordered)
    fail_count = len(ordered) - planned_pass_count(len(ordered), pass_rate)
    return set(ordered[:fail_count])


def corrupt_names(
    variation: ScenarioVariation, start: list[str], end: list[str]
) -> tuple[list[str], list[str]]:
    """Break one endpoint's figure count while keeping the clip plausible.

    Either endpoint may gain a stray figure or lose a declared one, chosen
    by digest so the corruption mix is stable across runs.
    """
    d = _digest_int("corrupt", variation.id)
    target_end = d % 2 == 0
    start, end = list(start), list(end)
    bogus = f"{variation.id}:bogus"
    if target_end:
        if len(end) < MAX_FIGURES:
            end.append(bogus)
        else:
            end.pop(d % len(end))
    else:
        if len(start) < MAX_FIGURES:
            start.append(bogus)
        else:
            start.pop(d % len(start))
    return start, end


# ---------------------------------------------------------------------------
# Writer-facing stages


def _ask(
    handle: BackendHandle,
    stage: str,
    label: str,
    prompt: str,
    seed: int,
    validate: Callable[[dict], list[str]],
    config: RunConfig,
) -> dict:
    attempt_prompt = prompt
    for attempt in range(1, ASK_ATTEMPTS + 1):
        request = BackendRequest(
            seat="llm",
            request_id=f"dataset-{stage}-{label}-a{attempt}",
            seed=seed,
            payload={"stage": f"dataset_{stage}", "prompt": attempt_prompt},
        )
        response = call_backend(
            handle, request, retries=config.retries, backoff=config.backoff
        )
        try:
            data = json.loads(response.payload["text"])
        except json.JSONDecodeError:
            errors = ["reply was not valid JSON"]
        else:
            errors = validate(data)
            if not errors:
                return data
        attempt_prompt = prompt + "\nREJECTED: fix these problems: " + "; ".join(errors)
    raise DatasetError(f"{stage} stage failed after {ASK_ATTEMPTS} attempts: {errors}")


def _flavor_prompt(styles: tuple[str, ...]) -> str:
    return (
        "You are preparing a synthetic training corpus for a video model that\n"
        "must learn on-screen cast changes. Propose short scenario flavors.\n"
        'Reply with JSON: {"flavors": [{"id", "category", "text", "style_hint"}]}.\n'
        "Each flavor is one concrete situation; give exactly the requested\n"
        "number per category and nothing else.\n"
        f"CATEGORIES: {' | '.join(CATEGORIES)}\n"
        f"STYLES: {' | '.join(styles)}\n"
        f"FLAVORS_PER_CATEGORY: {FLAVORS_PER_CATEGORY}\n"
    )


def _validate_flavors(data: dict) -> list[str]:
    errors = []
    flavors = data.get("flavors")
    if not isinstance(flavors, list):
        return ["missing 'flavors' list"]
    seen_ids = set()
    per_category = {c: 0 for c in CATEGORIES}
    for entry in flavors:
        category = entry.get("category")
        if category not in per_category:
            errors.append(f"unknown category {category!r}")
            continue
        per_category[category] += 1
        fid = entry.get("id", "")
        if fid in seen_ids:
            errors.append(f"duplicate flavor id {fid!r}")
        seen_ids.add(fid)
        if not entry.get("text"):
            errors.append(f"flavor {fid!r} has no text")
        if not entry.get("style_hint"):
            errors.append(f"flavor {fid!r} has no style hint")
    for category, count in per_category.items():
        if count != FLAVORS_PER_CATEGORY:
            errors.append(
                f"category {category} has {count} flavors, "
                f"expected {FLAVORS_PER_CATEGORY}"
            )
    return errors


def generate_flavors(
    handle: BackendHandle, config: RunConfig, styles: tuple[str, ...] = DEFAULT_STYLES
) -> list[ScenarioFlavor]:
    data = _ask(
        handle, "flavors", "all", _flavor_prompt(styles), config.seed,
        _validate_flavors, config,
    )
    flavors = [
        ScenarioFlavor(
            id=e["id"], category=e["category"], text=e["text"],
            style_hint=e["style_hint"],
        )
        for e in data["flavors"]
    ]
    flavors.sort(key=lambda f: (CATEGORIES.index(f.category), f.id))
    return flavors


def _variation_prompt(
    flavor: ScenarioFlavor, batch: int, count: int, styles: tuple[str, ...]
) -> str:
    return (
        "Expand the flavor below into concrete variations of one training\n"
        "clip each. Every variation fixes how many figures are on screen at\n"
        "the first frame (start_count) and the last frame (end_count); the\n"
        "pair must be consistent with the flavor's category.\n"
        'Reply with JSON: {"variations": [{"id", "start_count", "end_count",\n'
        '"style", "setting"}]}.\n'
        f"FLAVOR_ID: {flavor.id}\n"
        f"CATEGORY: {flavor.category}\n"
        f"FLAVOR: {flavor.text}\n"
        f"BATCH: {batch}\n"
        f"COUNT: {count}\n"
        f"STYLES: {' | '.join(styles)}\n"
    )


def _variation_validator(flavor: ScenarioFlavor, batch: int, count: int):
    def validate(data: dict) -> list[str]:
        errors = []
        variations = data.get("variations")
        if not isinstance(variations, list):
            return ["missing 'variations' list"]
        if len(variations) != count:
            errors.append(f"expected {count} variations, got {len(variations)}")
        for v, entry in enumerate(variations, start=1):
            expected_id = f"{flavor.id}-b{batch:02d}-v{v:02d}"
            if entry.get("id") != expected_id:
                errors.append(f"variation {v} id should be {expected_id}")
            s, e = entry.get("start_count"), entry.get("end_count")
            if not isinstance(s, int) or not isinstance(e, int) or not counts_allowed(
                flavor.category, s, e
            ):
                errors.append(
                    f"variation {v}: counts ({s}, {e}) not allowed for "
                    f"{flavor.category}"
                )
            if not entry.get("style") or not entry.get("setting"):
                errors.append(f"variation {v} missing style or setting")
        return errors

    return validate


def generate_variations(
    handle: BackendHandle,
    flavor: ScenarioFlavor,
    config: RunConfig,
    batches: int = BATCHES_PER_FLAVOR,
    per_batch: int = VARIATIONS_PER_BATCH,
    styles: tuple[str, ...] = DEFAULT_STYLES,
) -> list[ScenarioVariation]:
    out = []
    for batch in range(1, batches + 1):
        data = _ask(
            handle, "variations", f"{flavor.id}-b{batch:02d}",
            _variation_prompt(flavor, batch, per_batch, styles),
            config.seed, _variation_validator(flavor, batch, per_batch), config,
        )
        for entry in data["variations"]:
            out.append(
                ScenarioVariation(
                    id=entry["id"], flavor_id=flavor.id, category=flavor.category,
                    batch=batch, start_count=entry["start_count"],
                    end_count=entry["end_count"], style=entry["style"],
                    setting=entry["setting"],
                )
            )
    return out


def synthesize_prompt(
    handle: BackendHandle,
    variation: ScenarioVariation,
    flavor: ScenarioFlavor,
    config: RunConfig,
) -> TransitionPrompt:
    text = (
        "Write one prompt for a clip generator. It must name the figure\n"
        "count at the first frame and at the last frame, plus the style and\n"
        'setting. Reply with JSON: {"prompt", "negative"}.\n'
        f"CATEGORY: {variation.category}\n"
        f"START_COUNT: {variation.start_count}\n"
        f"END_COUNT: {variation.end_count}\n"
        f"STYLE: {variation.style}\n"
        f"SETTING: {variation.setting}\n"
        f"FLAVOR: {flavor.text}\n"
    )

    def validate(data: dict) -> list[str]:
        errors = []
        positive = data.get("prompt") or ""
        if f"opens with {variation.start_count} figure" not in positive:
            errors.append("prompt does not state the opening figure count")
        if f"ends with {variation.end_count}" not in positive:
            errors.append("prompt does not state the closing figure count")
        if not data.get("negative"):
            errors.append("missing negative prompt")
        return errors

    data = _ask(handle, "prompt", variation.id, text, config.seed, validate, config)
    return TransitionPrompt(
        variation_id=variation.id,
        category=variation.category,
        positive=data["prompt"],
        negative=data["negative"],
        start_count=variation.start_count,
        end_count=variation.end_count,
    )


# ---------------------------------------------------------------------------
# Clip synthesis and filtering


def _decollide_names(
    world: MockWorld, start: list[str], end: list[str]
) -> tuple[list[str], list[str]]:
    # glyph colors are name digests, so rare sibling-name collisions exist;
    # re-salt the whole cast until every figure gets its own color
    for salt in range(64):
        suffix = "" if salt == 0 else f"~{salt}"
        s = [n + suffix for n in start]
        e = [n + suffix for n in end]
        union = sorted(set(s) | set(e))
        if len({world.glyph_color(n) for n in union}) == len(union):
            return s, e
    raise DatasetError(f"could not find collision-free figure colors for {start + end}")


def synth_clip(
    variation: ScenarioVariation,
    config: RunConfig,
    clips_dir: Path,
    corrupt: bool = False,
) -> Path:
    """Render one synthetic transition clip straight from world geometry.

    Corrupted clips break an endpoint count on purpose; everything else
    about them stays consistent so only counting can tell them apart.
    """
    clip_dir = clips_dir / variation.id
    if (clip_dir / "clip.json").exists():
        return clip_dir
    world = MockWorld(geometry_from_config(config), config.seed)
    start_names, end_names = endpoint_names(variation)
    if corrupt:
        start_names, end_names = corrupt_names(variation, start_names, end_names)
    start_names, end_names = _decollide_names(world, start_names, end_names)
    start_pos = world.place_glyphs([(n, "Standing") for n in start_names])
    end_pos = world.place_glyphs([(n, "Standing") for n in end_names])
    exiting = set(start_names) - set(end_names)
    entering = set(end_names) - set(start_names)
    frame_count = config.dataset_frame_count
    paths = world.transition_paths(start_pos, end_pos, exiting, entering, frame_count)
    background = world.background(variation.setting, salt=variation.id)
    clip_dir.mkdir(parents=True, exist_ok=True)
    for t in range(frame_count):
        frame = world.render_frame(background, {n: paths[n][t] for n in paths})
        save_png(clip_dir / f"frame_{t + 1:05d}.png", frame)
    meta = {
        "variation_id": variation.id,
        "category": variation.category,
        "start_count": variation.start_count,
        "end_count": variation.end_count,
        "frame_count": frame_count,
        "corrupted": corrupt,
        "style": variation.style,
        "setting": variation.setting,
    }
    (clip_dir / "clip.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return clip_dir


def filter_clip(
    handle: BackendHandle,
    clip_dir: Path,
    variation: ScenarioVariation,
    config: RunConfig,
) -> FilterVerdict:
    """Zero-tolerance count check over the clip's endpoint frames."""
    meta = json.loads((clip_dir / "clip.json").read_text())
    frame_count = meta["frame_count"]
    first = load_png(clip_dir / "frame_00001.png")
    last = load_png(clip_dir / f"frame_{frame_count:05d}.png")
    question = (
        "Count the distinct figures visible in each frame, first then last.\n"
        f"clip: {variation.id}\n"
    )
    request = BackendRequest(
        seat="vlm",
        request_id=f"dataset-filter-{variation.id}",
        seed=config.seed,
        payload={
            "frames": [encode_image(first), encode_image(last)],
            "question": question,
        },
    )
    response = call_backend(
        handle, request, retries=config.retries, backoff=config.backoff
    )
    counts = tuple(int(c) for c in response.payload["counts"])
    expected = (variation.start_count, variation.end_count)
    return FilterVerdict(
        variation_id=variation.id,
        category=variation.category,
        expected=expected,
        counts=counts,
        passed=counts == expected,
        caption=response.payload.get("text", ""),
    )


# ---------------------------------------------------------------------------
# Manifest


def assemble_manifest(
    prompts: dict[str, TransitionPrompt],
    verdicts: list[FilterVerdict],
    rows: Optional[int],
    seed: int,
) -> list[dict]:
    """Category-balanced manifest of passing clips.

    With ``rows`` unset the manifest takes the largest size every category
    can fill evenly. Explicit ``rows`` splits into five equal quotas, the
    remainder spread over a seeded category choice.
    """
    pools: dict[str, list[str]] = {c: [] for c in CATEGORIES}
    for verdict in verdicts:
        if verdict.passed:
            pools[verdict.category].append(verdict.variation_id)
    for pool in pools.values():
        pool.sort()
    empty = [c for c in CATEGORIES if not pools[c]]
    if empty:
        raise EmptyCategoryError(f"no passing clips for: {', '.join(empty)}")
    if rows is None:
        quota = min(len(pool) for pool in pools.values())
        quotas = {c: quota for c in CATEGORIES}
    else:
        base, remainder = divmod(rows, len(CATEGORIES))
        quotas = {c: base for c in CATEGORIES}
        rng = random.Random(f"{seed}|manifest-remainder")
        extras = rng.sample(CATEGORIES, remainder)
        for category in extras:
            quotas[category] += 1
    shortfall = {
        c: (quotas[c], len(pools[c]))
        for c in CATEGORIES
        if len(pools[c]) < quotas[c]
    }
    if shortfall:
        parts = ", ".join(f"{c}: need {q} have {h}" for c, (q, h) in shortfall.items())
        raise DatasetError(f"not enough passing clips ({parts})")
    captions = {v.variation_id: v.caption for v in verdicts}
    rows_out = []
    for category in CATEGORIES:
        pool = list(pools[category])
        rng = random.Random(f"{seed}|manifest-{category}")
        rng.shuffle(pool)
        for vid in sorted(pool[: quotas[category]]):
            prompt = prompts[vid]
            combined = prompt.positive
            caption = captions.get(vid, "")
            if caption:
                combined = f"{prompt.positive} {caption}"
            rows_out.append(
                {
                    "variation_id": vid,
                    "category": category,
                    "prompt": combined,
                    "negative": prompt.negative,
                    "clip": f"clips/{vid}",
                    "start_count": prompt.start_count,
                    "end_count": prompt.end_count,
                }
            )
    return rows_out


# ---------------------------------------------------------------------------
# The whole pipeline


@dataclass
class DatasetResult:
    out_dir: Path
    stats: dict


def _write_jsonl(path: Path, rows: list[dict]) -> None:
    with path.open("w") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    return [json.loads(line) for line in path.read_text().splitlines() if line]


def run_dataset_pipeline(
    config: RunConfig,
    out_dir: str | Path,
    scale: float = 1.0,
    rows: Optional[int] = None,
    per_batch: int = VARIATIONS_PER_BATCH,
    service: Optional[MockBackendService] = None,
    make_figures: bool = True,
    until: str = "manifest",
) -> DatasetResult:
    """All five stages end to end; every stage resumes from its files.

    ``scale`` shrinks the batch count per flavor (1.0 means ten batches of
    25 per flavor over 40 flavors: 10,000 prompts; 0.1 keeps one batch for
    1,000). ``per_batch`` is a test hook for even smaller corpora.
    ``until`` stops early: "clips" after synthesis, "verdicts" after the
    filter, "manifest" (default) runs everything.
    """
    if until not in ("clips", "verdicts", "manifest"):
        raise DatasetError(f"unknown stage cap {until!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if config.backend == "mock" and service is None:
        service = MockBackendService(geometry_from_config(config))
    llm = handle_for("llm", config, service)
    vlm = handle_for("vlm", config, service)
    batches = max(1, round(BATCHES_PER_FLAVOR * scale))

    # stage 1: flavors
    flavors_path = out / "flavors.json"
    if flavors_path.exists():
        flavors = [ScenarioFlavor(**e) for e in json.loads(flavors_path.read_text())]
    else:
        flavors = generate_flavors(llm, config)
        flavors_path.write_text(
            json.dumps([asdict(f) for f in flavors], indent=2, sort_keys=True) + "\n"
        )

    # stage 2: variations, then one prompt per variation
    variations_path = out / "variations.jsonl"
    expected_variations = len(flavors) * batches * per_batch
    variations: list[ScenarioVariation] = []
    if variations_path.exists():
        rows_in = _read_jsonl(variations_path)
        if len(rows_in) == expected_variations:
            variations = [ScenarioVariation(**r) for r in rows_in]
    if not variations:
        for flavor in flavors:
            variations.extend(
                generate_variations(llm, flavor, config, batches, per_batch)
            )
        _write_jsonl(variations_path, [asdict(v) for v in variations])

    by_flavor = {f.id: f for f in flavors}
    prompts_path = out / "prompts.jsonl"
    prompts: dict[str, TransitionPrompt] = {}
    if prompts_path.exists():
        rows_in = _read_jsonl(prompts_path)
        if len(rows_in) == len(variations):
            prompts = {r["variation_id"]: TransitionPrompt(**r) for r in rows_in}
    if not prompts:
        for variation in variations:
            prompts[variation.id] = synthesize_prompt(
                llm, variation, by_flavor[variation.flavor_id], config
            )
        _write_jsonl(
            prompts_path, [asdict(prompts[v.id]) for v in variations]
        )

    # stage 3: clips under a seeded failure plan
    failures = plan_failures([v.id for v in variations], config.pass_rate, config.seed)
    clips_dir = out / "clips"
    for variation in variations:
        synth_clip(variation, config, clips_dir, corrupt=variation.id in failures)

    if until == "clips":
        return DatasetResult(
            out_dir=out,
            stats={
                "seed": config.seed,
                "scale": scale,
                "flavors": len(flavors),
                "variations": len(variations),
                "prompts": len(prompts),
                "clips": len(variations),
                "stage": "clips",
            },
        )

    # stage 4: the count filter
    verdicts_path = out / "verdicts.jsonl"
    verdicts: list[FilterVerdict] = []
    if verdicts_path.exists():
        rows_in = _read_jsonl(verdicts_path)
        if len(rows_in) == len(variations):
            verdicts = [
                FilterVerdict(
                    variation_id=r["variation_id"], category=r["category"],
                    expected=tuple(r["expected"]), counts=tuple(r["counts"]),
                    passed=r["passed"], caption=r["caption"],
                )
                for r in rows_in
            ]
    if not verdicts:
        for variation in variations:
            verdicts.append(
                filter_clip(vlm, clips_dir / variation.id, variation, config)
            )
        _write_jsonl(
            verdicts_path,
            [
                {
                    "variation_id": v.variation_id, "category": v.category,
                    "expected": list(v.expected), "counts": list(v.counts),
                    "passed": v.passed, "caption": v.caption,
                }
                for v in verdicts
            ],
        )

    if until == "verdicts":
        passed_so_far = sum(1 for v in verdicts if v.passed)
        return DatasetResult(
            out_dir=out,
            stats={
                "seed": config.seed,
                "scale": scale,
                "flavors": len(flavors),
                "variations": len(variations),
                "prompts": len(prompts),
                "clips": len(variations),
                "passed": passed_so_far,
                "failed": len(verdicts) - passed_so_far,
                "stage": "verdicts",
            },
        )

    # stage 5: manifest and stats
    manifest_rows = assemble_manifest(prompts, verdicts, rows, config.seed)
    _write_jsonl(out / "manifest.jsonl", manifest_rows)

    passed = sum(1 for v in verdicts if v.passed)
    per_category = {}
    for category in CATEGORIES:
        cat_verdicts = [v for v in verdicts if v.category == category]
        per_category[category] = {
            "planned": len(cat_verdicts),
            "passed": sum(1 for v in cat_verdicts if v.passed),
            "manifest_rows": sum(1 for r in manifest_rows if r["category"] == category),
        }
    stats = {
        "seed": config.seed,
        "scale": scale,
        "flavors": len(flavors),
        "variations": len(variations),
        "prompts": len(prompts),
        "clips": len(variations),
        "passed": passed,
        "failed": len(verdicts) - passed,
        "pass_rate": round(passed / len(verdicts), 6) if verdicts else 0.0,
        "manifest_rows": len(manifest_rows),
        "per_category": per_category,
    }
    (out / "stats.json").write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n")
    with (out / "stats.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["category", "planned", "passed", "manifest_rows"])
        for category in CATEGORIES:
            row = per_category[category]
            writer.writerow(
                [category, row["planned"], row["passed"], row["manifest_rows"]]
            )
    if make_figures:
        from . import plotting

        plotting.category_histogram(per_category, out / "categories.png")
    return DatasetResult(out_dir=out, stats=stats)
