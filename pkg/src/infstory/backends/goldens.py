"""Golden request/response fixtures for the six wire-protocol seats.

The pairs are built from fixed inputs at a tiny geometry and frozen under
docs/protocol/. Tests assert byte-exact agreement, and the adapter package
replays the same files against its own server, so the two implementations
can only drift if these bytes change.
"""

from __future__ import annotations

import sys
from pathlib import Path

from .mockworld import MockWorld, WorldGeometry
from .protocol import (
    BackendRequest,
    canonical_json,
    encode_image,
    encode_request,
    encode_response,
)
from .service import MockBackendService

GOLDEN_SEED = 11
GOLDEN_GEOMETRY = WorldGeometry(
    width=32, height=24, glyph_size=6, max_speed=3.0, edge_margin=4
)


def build_golden_requests() -> dict[str, BackendRequest]:
    world = MockWorld(GOLDEN_GEOMETRY, GOLDEN_SEED)
    castle = world.background("Castle")
    cast = [("Ara", "Standing"), ("Brin", "Walking")]
    placements = world.place_glyphs(cast)
    keyframe = world.render_frame(castle, placements)
    first = world.render_frame(castle, {"Ara": world.place_glyphs([("Ara", "Standing")])["Ara"]})
    last = world.render_frame(castle, {"Brin": world.place_glyphs([("Brin", "Standing")])["Brin"]})
    narrative_prompt = (
        "location: Castle\n"
        "backdrop: weathered stone under amber light\n"
        "characters: Ara | Brin\n"
        "pose[Ara]: Standing\n"
        "pose[Brin]: Walking\n"
        "emotion[Ara]: Neutral\n"
        "emotion[Brin]: Happy\n"
        "action: Ara and Brin confer at the castle"
    )
    transition_prompt = (
        "location: Castle\n"
        "backdrop: weathered stone under amber light\n"
        "action: Ara walks out of frame; Brin enters"
    )
    return {
        "t2i": BackendRequest(
            seat="t2i",
            request_id="golden-t2i-001",
            seed=GOLDEN_SEED,
            payload={
                "prompt": "location: Castle\nbackdrop: weathered stone under amber light\n"
                "style: clean empty wide shot, no figures"
            },
        ),
        "i2i": BackendRequest(
            seat="i2i",
            request_id="golden-i2i-001",
            seed=GOLDEN_SEED,
            payload={
                "image": encode_image(castle),
                "references": [],
                "prompt": narrative_prompt,
            },
        ),
        "i2v": BackendRequest(
            seat="i2v",
            request_id="golden-i2v-001",
            seed=GOLDEN_SEED,
            payload={
                "image": encode_image(keyframe),
                "prompt": narrative_prompt,
                "frame_count": 4,
                "fps": 8,
            },
        ),
        "flf2v": BackendRequest(
            seat="flf2v",
            request_id="golden-flf2v-001",
            seed=GOLDEN_SEED,
            payload={
                "first": encode_image(first),
                "last": encode_image(last),
                "prompt": transition_prompt,
                "transition": {
                    "start": ["Ara"],
                    "end": ["Brin"],
                    "exiting": ["Ara"],
                    "entering": ["Brin"],
                    "movement": "Combination",
                    "description": "Ara walks out of frame. Brin enters from an edge.",
                },
                "frame_count": 4,
                "fps": 8,
            },
        ),
        "llm": BackendRequest(
            seat="llm",
            request_id="golden-llm-001",
            seed=GOLDEN_SEED,
            payload={
                "stage": "chapters",
                "prompt": (
                    "Break the story into sequential chapters.\n"
                    "STORY: Two couriers carry a sealed letter across the duchy.\n"
                    "CHARACTERS: Ara | Brin"
                ),
            },
        ),
        "vlm": BackendRequest(
            seat="vlm",
            request_id="golden-vlm-001",
            seed=GOLDEN_SEED,
            payload={
                "frames": [encode_image(first), encode_image(last)],
                "question": (
                    "Count the visible figures in each frame.\n"
                    "clip: golden-clip-001"
                ),
            },
        ),
    }


def build_golden_pairs() -> dict[str, tuple[dict, dict]]:
    service = MockBackendService(geometry=GOLDEN_GEOMETRY)
    pairs = {}
    for seat, request in build_golden_requests().items():
        response = service.handle(request)
        assert response.status == "ok", f"{seat}: {response.error}"
        pairs[seat] = (encode_request(request), encode_response(response, seat))
    return pairs


def write_goldens(target_dir: str | Path) -> list[Path]:
    target = Path(target_dir)
    target.mkdir(parents=True, exist_ok=True)
    written = []
    for seat, (request, response) in sorted(build_golden_pairs().items()):
        for kind, data in (("request", request), ("response", response)):
            path = target / f"{seat}.{kind}.json"
            path.write_text(canonical_json(data))
            written.append(path)
    return written


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "docs/protocol"
    for path in write_goldens(out):
        print(f"wrote {path}")
