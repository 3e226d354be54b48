"""Rule-based stand-in for the planning language model.

Replies are deterministic functions of (seed, stage, context lines found in
the prompt). The prompt templates embed machine-readable ``KEY: value`` lines
exactly so this module can parse them back out; a real model would read the
surrounding instructions instead. Fault knobs inject specific rule breaks a
bounded number of times to exercise agent retry paths.
"""

from __future__ import annotations

import hashlib
import json
import re
from typing import Optional

from ..transitions import classify_movement_type, transition_description
from .faults import MockFaults

STOCK_LOCATIONS = (
    "Castle", "Forest", "Harbor", "Library", "Market", "Cavern", "Rooftop",
    "Garden", "Tavern", "Bridge", "Temple", "Meadow", "Quarry", "Lighthouse",
    "Orchard", "Plaza",
)

_LIGHTS = ("amber", "cool blue", "dusty gold", "pale green")
_BACKDROPS = (
    "Weathered stone under {a} light; the {name} stands empty and still.",
    "A wide view of the {name} in {a} tones, clear of any figures.",
    "The {name} at rest: {a} palette, long shadows, nothing moving.",
)
_SUMMARIES = (
    "The courier route opens toward new ground in leg {i}.",
    "Leg {i} tests the party's resolve.",
    "Old debts surface during leg {i}.",
    "Leg {i} brings an uneasy alliance.",
    "A shortcut backfires in leg {i}.",
)
_TIMES = ("Morning", "Noon", "Evening")
_JUSTIFICATIONS = (
    "Follows directly from the previous leg's close.",
    "Keeps the journey's chronology intact.",
    "Raises the stakes set one leg earlier.",
    "Pays off a promise made two legs back.",
)
_TONES = ("steady", "tense", "wistful", "hopeful", "urgent")
_CAMERAS = ("static wide", "slow push in", "gentle pan left", "overhead hold")
_EMOTIONS = ("Neutral", "Angry", "Happy", "Sad")
_POSES = ("Standing", "Sitting", "Walking", "Running", "Reaching")
_PAIR_INTERACTIONS = ("ShakingHands", "Hugging", "Talking", "HandingOverObject")
_LINES = (
    "We keep moving.",
    "The seal stays shut.",
    "Almost there now.",
    "Watch the road behind us.",
)
_VERBS = ("confer", "wait", "scan the surroundings", "trade a quiet word")

_SETTINGS = (
    "a sunlit courtyard",
    "a rain-washed alley",
    "a snowy field",
    "a lantern-lit dock",
    "a crowded terrace",
    "a quiet studio",
    "an empty gymnasium",
    "a windswept ridge",
)

_FLAVOR_BANK: dict[str, tuple[str, ...]] = {
    "Entry": (
        "a figure steps into view mid-conversation",
        "someone arrives carrying a parcel",
        "a newcomer joins a waiting group",
        "a runner bursts onto the scene",
        "a friend appears from around a corner",
        "a stranger wanders in and pauses",
        "a dancer glides in from offstage",
        "a guard walks in on patrol",
    ),
    "Exit": (
        "a figure slips away unnoticed",
        "someone storms off after an argument",
        "a worker finishes up and leaves",
        "a child runs off to play elsewhere",
        "a traveler departs with a wave",
        "a performer bows and walks offstage",
        "a guest excuses themselves politely",
        "a courier dashes away on an errand",
    ),
    "Replacement": (
        "one shift of workers swaps with the next",
        "a speaker yields the floor to another",
        "dancers trade places between beats",
        "a sentry hands the post to a relief",
        "one team rotates out as another rotates in",
        "an interviewer is replaced by a colleague",
        "players substitute during a pause",
        "hosts switch between segments",
    ),
    "NoChange": (
        "the group holds their places and talks",
        "figures continue an ongoing task",
        "everyone stays put through a pause",
        "a conversation carries on uninterrupted",
        "the cast keeps working side by side",
        "a quiet moment passes with nobody moving on or off",
        "the scene breathes while all remain",
        "steady activity with a fixed cast",
    ),
    "Combination": (
        "one person leaves while another arrives",
        "departures and arrivals overlap mid-scene",
        "a handoff where the giver exits and a witness enters",
        "the crowd churns as some go and others come",
        "a relay: one runner out, one runner in, anchor steady",
        "guests trade off around a fixed host",
        "staff rotate while a customer stays",
        "a farewell and a greeting share the frame",
    ),
}

_NEGATIVE = "text, captions, watermark, extra limbs, duplicated faces, blur"


def _digest_int(*parts: object) -> int:
    joined = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(joined.encode("utf-8")).digest()[:8], "big")


def _line(prompt: str, key: str) -> Optional[str]:
    match = re.search(rf"^{re.escape(key)}: (.*)$", prompt, flags=re.MULTILINE)
    return match.group(1).strip() if match else None


def _names(value: Optional[str]) -> list[str]:
    if not value or value == "-":
        return []
    return [part.strip() for part in value.split("|") if part.strip()]


class MockStoryWriter:
    """Answers every planning and dataset prompt with deterministic JSON."""

    def __init__(self, seed: int, faults: Optional[MockFaults] = None):
        self.seed = seed
        self.faults = faults if faults is not None else MockFaults()

    def reply(self, stage: str, prompt: str) -> str:
        builders = {
            "chapters": self._chapters,
            "locations": self._locations,
            "scenes": self._scenes,
            "shots": self._shots,
            "dataset_flavors": self._flavors,
            "dataset_variations": self._variations,
            "dataset_prompt": self._prompt,
        }
        if stage not in builders:
            raise ValueError(f"unknown llm stage {stage!r}")
        return json.dumps(builders[stage](prompt), sort_keys=True)

    # -- story planning -------------------------------------------------------

    def _chapters(self, prompt: str) -> dict:
        story = _line(prompt, "STORY") or ""
        cast = _names(_line(prompt, "CHARACTERS"))
        d = _digest_int("chapters", self.seed, story, "|".join(cast))
        count = 10 + d % 11
        chapters = []
        for i in range(1, count + 1):
            di = _digest_int("chapter", self.seed, story, i)
            if cast:
                size = 1 + di % min(3, len(cast))
                start = di % len(cast)
                chars = sorted({cast[(start + j) % len(cast)] for j in range(size)})
            else:
                chars = []
            chapters.append(
                {
                    "index": i,
                    "summary": _SUMMARIES[di % len(_SUMMARIES)].format(i=i),
                    "characters": chars,
                    "timeline": f"Day {1 + (i - 1) // 2}, {_TIMES[di % len(_TIMES)]}",
                    "justification": _JUSTIFICATIONS[di % len(_JUSTIFICATIONS)],
                }
            )
        fault = self.faults.take_llm("chapters")
        if fault == "unknown_character":
            chapters[0]["characters"] = chapters[0]["characters"] + ["Zed"]
        elif fault == "too_few":
            chapters = chapters[:5]
        return {
            "chapters": chapters,
            "notes": "Relationships tighten leg over leg; the seal binds all three.",
        }

    def _locations(self, prompt: str) -> dict:
        story = _line(prompt, "STORY") or ""
        d = _digest_int("locations", self.seed, story)
        count = 8 + d % 5
        offset = d % len(STOCK_LOCATIONS)
        names = [
            STOCK_LOCATIONS[(offset + i) % len(STOCK_LOCATIONS)] for i in range(count)
        ]
        entries = []
        for i, name in enumerate(names):
            di = _digest_int("backdrop", self.seed, name)
            text = _BACKDROPS[di % len(_BACKDROPS)].format(
                name=name.lower(), a=_LIGHTS[di % len(_LIGHTS)]
            )
            entries.append({"name": name, "background_description": text})
        fault = self.faults.take_llm("locations")
        if fault == "character_leak":
            cast = _names(_line(prompt, "CHARACTERS"))
            leak = cast[0] if cast else "Ara"
            entries[0]["background_description"] += f" {leak} rests by the gate."
        elif fault == "multiword":
            entries[0]["name"] = "Old Mill"
        elif fault == "too_few":
            entries = entries[:3]
        return {"locations": entries, "notes": "Backdrops cover the whole route."}

    def _scenes(self, prompt: str) -> dict:
        chapter = int(_line(prompt, "CHAPTER_INDEX") or 0)
        cast = _names(_line(prompt, "CHAPTER_CHARACTERS"))
        library = _names(_line(prompt, "LOCATIONS"))
        previous = _line(prompt, "PREVIOUS_LOCATION") or "-"
        d = _digest_int("scenes", self.seed, chapter, previous, "|".join(library))
        count = 1 + d % 2
        scenes = []
        last = previous if previous != "-" else None
        for i in range(1, count + 1):
            di = _digest_int("scene", self.seed, chapter, i)
            options = [name for name in library if name != last] or library
            location = options[di % len(options)]
            size = 1 + di % min(3, max(1, len(cast)))
            start = di % max(1, len(cast)) if cast else 0
            chars = sorted({cast[(start + j) % len(cast)] for j in range(size)}) if cast else []
            scenes.append(
                {
                    "index": i,
                    "location_name": location,
                    "characters": chars,
                    "tone": _TONES[di % len(_TONES)],
                    "shot_count": (1, 3, 5)[di % 3],
                }
            )
            last = location
        fault = self.faults.take_llm("scenes")
        if fault == "even_shots":
            scenes[0]["shot_count"] = 2
        elif fault == "same_location" and previous != "-":
            scenes[0]["location_name"] = previous
        return {"scenes": scenes}

    def _shots(self, prompt: str) -> dict:
        chapter = int(_line(prompt, "CHAPTER_INDEX") or 0)
        scene = int(_line(prompt, "SCENE_INDEX") or 0)
        location = _line(prompt, "LOCATION") or ""
        tone = _line(prompt, "TONE") or "steady"
        cast = sorted(_names(_line(prompt, "SCENE_CHARACTERS")))
        shot_count = int(_line(prompt, "SHOT_COUNT") or 1)
        narrative_count = (shot_count + 1) // 2
        casts = self._cast_walk(chapter, scene, cast, narrative_count)
        fault = self.faults.take_llm("shots")
        if fault == "unknown_character":
            casts[0] = sorted(set(casts[0]) | {"Zed"})
        elif fault == "third_character" and len(cast) >= 3:
            casts[0] = cast[:3]
        shots: list[dict] = []
        for j, shot_cast in enumerate(casts, start=1):
            index = 2 * j - 1
            di = _digest_int("narrative", self.seed, chapter, scene, index)
            names = " and ".join(shot_cast) if shot_cast else "nobody"
            shot = {
                "index": index,
                "characters": shot_cast,
                "emotions": {
                    name: _EMOTIONS[_digest_int("emotion", self.seed, name, index) % 4]
                    for name in shot_cast
                },
                "poses": {
                    name: _POSES[_digest_int("pose", self.seed, name, index) % 5]
                    for name in shot_cast
                },
                "interaction": (
                    _PAIR_INTERACTIONS[di % 4]
                    if len(shot_cast) == 2 and di % 3 == 0
                    else "None"
                ),
                "dialogue": (
                    {
                        "text": _LINES[di % len(_LINES)],
                        "start": 0.5,
                        "end": round(0.5 + 0.5 * (1 + di % 6), 2),
                    }
                    if di % 3 == 1 and shot_cast
                    else None
                ),
                "keyframe_prompt": f"{names} at the {location.lower()}, {tone} mood",
                "video_prompt": f"{names} {_VERBS[di % len(_VERBS)]} at the {location.lower()}",
                "camera": _CAMERAS[di % len(_CAMERAS)],
            }
            if fault == "bad_vocab" and j == 1 and shot_cast:
                shot["poses"][shot_cast[0]] = "Leaping"
            shots.append(shot)
            if j < len(casts):
                shots.append(
                    self._transition_entry(casts[j - 1], casts[j], 2 * j, fault)
                )
        return {"shots": shots}

    def _cast_walk(
        self, chapter: int, scene: int, cast: list[str], count: int
    ) -> list[list[str]]:
        if not cast:
            return [[] for _ in range(count)]
        singles = [[c] for c in cast]
        pairs = [
            sorted([a, b]) for i, a in enumerate(cast) for b in cast[i + 1 :]
        ]
        pool = singles + pairs
        d = _digest_int("cast-walk", self.seed, chapter, scene)
        idx = d % len(pool)
        out = [pool[idx]]
        for k in range(1, count):
            stride = 1 + _digest_int("stride", self.seed, chapter, scene, k) % max(
                1, len(pool) - 1
            )
            idx = (idx + stride) % len(pool)
            out.append(pool[idx])
        return out

    def _transition_entry(
        self, prev_cast: list[str], next_cast: list[str], index: int, fault: Optional[str]
    ) -> dict:
        start, end = set(prev_cast), set(next_cast)
        exiting, entering = start - end, end - start
        movement = classify_movement_type(exiting, entering)
        entry = {
            "index": index,
            "exiting": sorted(exiting),
            "entering": sorted(entering),
            "movement": movement.value,
            "description": transition_description(exiting, entering, movement),
        }
        if fault == "bad_tau" and index == 2:
            entry["movement"] = "Entry" if movement.value != "Entry" else "Exit"
            entry["exiting"] = sorted(start)[:1] if not exiting else []
        return entry

    # -- dataset ---------------------------------------------------------------

    def _flavors(self, prompt: str) -> dict:
        categories = _names(_line(prompt, "CATEGORIES"))
        styles = _names(_line(prompt, "STYLES"))
        per_category = int(_line(prompt, "FLAVORS_PER_CATEGORY") or 8)
        flavors = []
        for category in categories:
            bank = _FLAVOR_BANK[category]
            for k in range(per_category):
                dk = _digest_int("flavor", self.seed, category, k)
                flavors.append(
                    {
                        "id": f"{category.lower()}-{k + 1:02d}",
                        "category": category,
                        "text": bank[k % len(bank)],
                        "style_hint": styles[dk % len(styles)] if styles else "anime",
                    }
                )
        if self.faults.take_llm("dataset_flavors") == "flavor_count":
            flavors = flavors[:-1]
        return {"flavors": flavors}

    def _variations(self, prompt: str) -> dict:
        flavor_id = _line(prompt, "FLAVOR_ID") or ""
        category = _line(prompt, "CATEGORY") or ""
        batch = int(_line(prompt, "BATCH") or 1)
        count = int(_line(prompt, "COUNT") or 25)
        styles = _names(_line(prompt, "STYLES")) or ["anime"]
        variations = []
        for v in range(1, count + 1):
            vid = f"{flavor_id}-b{batch:02d}-v{v:02d}"
            d = _digest_int("variation", self.seed, vid)
            start, end = self._counts_for(category, d)
            variations.append(
                {
                    "id": vid,
                    "start_count": start,
                    "end_count": end,
                    "style": styles[d % len(styles)],
                    "setting": _SETTINGS[d % len(_SETTINGS)],
                }
            )
        if self.faults.take_llm("dataset_variations") == "bad_entry" and category == "Entry":
            variations[0]["start_count"] = 2
        return {"variations": variations}

    @staticmethod
    def _counts_for(category: str, d: int) -> tuple[int, int]:
        if category == "Entry":
            return 0, 1 + d % 4
        if category == "Exit":
            return 1 + d % 4, 0
        if category == "NoChange":
            n = d % 5
            return n, n
        if category == "Replacement":
            n = 1 + d % 4
            return n, n
        # Combination: both differences nonempty. Equal counts overlap by one
        # shared character, unequal counts may be fully disjoint.
        start = 1 + d % 4
        end = 1 + (d // 17) % 4
        if start == end == 1:
            end = 2
        return start, end

    def _prompt(self, prompt: str) -> dict:
        category = _line(prompt, "CATEGORY") or ""
        start = int(_line(prompt, "START_COUNT") or 0)
        end = int(_line(prompt, "END_COUNT") or 0)
        style = _line(prompt, "STYLE") or "anime"
        setting = _line(prompt, "SETTING") or _SETTINGS[0]
        flavor = _line(prompt, "FLAVOR") or "figures share the frame"
        positive = (
            f"{style} style. In {setting}, {flavor}. "
            f"The shot opens with {start} figure(s) on screen and ends with {end}. "
            f"Smooth, continuous motion; {category} transition."
        )
        return {"prompt": positive, "negative": _NEGATIVE}
