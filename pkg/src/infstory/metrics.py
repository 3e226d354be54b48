"""Run evaluation: backdrop drift, seam continuity, edge compliance.

All metrics work from the artifacts a run leaves on disk. When the run
carries exact per-character visibility tracks the seam checks use those;
otherwise they fall back to encoder distances between boundary frames and
the report is flagged ``proxy_metrics``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol

import numpy as np

from .pipeline import load_png


class MetricsError(RuntimeError):
    pass


class MissingVisibility(MetricsError):
    """The run has no per-character visibility tracks."""


class FrameEncoder(Protocol):
    name: str

    def encode(self, frame: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class GridEncoder:
    """Mean color over a coarse cell grid; 8x8 cells -> 192 dims."""

    cells: int = 8
    name: str = "grid"

    def encode(self, frame: np.ndarray) -> np.ndarray:
        h, w = frame.shape[:2]
        ys = (np.arange(self.cells + 1) * h) // self.cells
        xs = (np.arange(self.cells + 1) * w) // self.cells
        out = np.empty((self.cells, self.cells, 3), dtype=np.float64)
        pixels = frame.astype(np.float64)
        for i in range(self.cells):
            for j in range(self.cells):
                out[i, j] = pixels[ys[i] : ys[i + 1], xs[j] : xs[j + 1]].mean(axis=(0, 1))
        return out.reshape(-1)


@dataclass(frozen=True)
class HistogramEncoder:
    """Per-channel intensity histogram; 16 bins x 3 channels -> 48 dims."""

    bins: int = 16
    name: str = "hist"

    def encode(self, frame: np.ndarray) -> np.ndarray:
        total = frame.shape[0] * frame.shape[1]
        parts = [
            np.bincount(
                (frame[:, :, c].reshape(-1) >> 4).astype(np.intp), minlength=self.bins
            )[: self.bins]
            for c in range(3)
        ]
        return np.concatenate(parts).astype(np.float64) / float(total)


ENCODERS = {"grid": GridEncoder(), "hist": HistogramEncoder()}


def get_encoder(name: str) -> FrameEncoder:
    try:
        return ENCODERS[name]
    except KeyError:
        raise MetricsError(
            f"unknown encoder {name!r}; pick one of {sorted(ENCODERS)}"
        ) from None


# ---------------------------------------------------------------------------
# Core metrics


def encode_frames(frames: list[np.ndarray], encoder: FrameEncoder) -> np.ndarray:
    if not frames:
        raise MetricsError("no frames to encode")
    return np.stack([encoder.encode(f) for f in frames])


def background_drift(
    frames: list[np.ndarray], background: np.ndarray, encoder: FrameEncoder
) -> float:
    """Summed squared encoding distance from each frame to the backdrop.

    Additive over concatenation, so a clip split at any point scores the
    same as the whole clip. Every frame equal to the backdrop scores zero.
    """
    for frame in frames:
        if frame.shape != background.shape:
            raise MetricsError(
                f"frame shape {frame.shape} does not match "
                f"background shape {background.shape}"
            )
    codes = encode_frames(frames, encoder)
    ref = encoder.encode(background)
    return float((np.linalg.norm(codes - ref, axis=1) ** 2).sum())


def background_adherence(
    frames: list[np.ndarray], reference: np.ndarray, encoder: FrameEncoder
) -> float:
    """Mean encoding distance between each frame and the reference backdrop."""
    codes = encode_frames(frames, encoder)
    ref = encoder.encode(reference)
    return float(np.linalg.norm(codes - ref, axis=1).mean())


# ---------------------------------------------------------------------------
# Seams


def seam_boundaries(meta: dict) -> list[dict]:
    """In-scene clip boundaries: frame index where clip k+1 starts.

    Scene cuts are hard cuts by design and are excluded.
    """
    spans = meta["spans"]
    seams = []
    for before, after in zip(spans, spans[1:]):
        if before["scene_ordinal"] != after["scene_ordinal"]:
            continue
        seams.append(
            {
                "frame": after["start"],
                "before": before["clip"],
                "after": after["clip"],
            }
        )
    return seams


def _track_value(track: Optional[list], index: int) -> float:
    # untracked characters count as invisible
    if track is None:
        return 0.0
    value = track[index]
    return 0.0 if value is None else float(value)


def seam_continuity(meta: dict) -> dict:
    """Largest per-character visibility step across every in-scene seam.

    A character that leaves or enters mid-story must do it on camera: at a
    seam its visibility on both sides has to agree within the budget.
    """
    visibility = meta.get("visibility")
    if visibility is None:
        raise MissingVisibility("run carries no visibility tracks")
    budget = float(meta["seam_budget"])
    per_character: dict[str, float] = {name: 0.0 for name in visibility}
    events = []
    for seam in seam_boundaries(meta):
        b = seam["frame"]
        worst_name, worst_delta = None, -1.0
        for name, track in visibility.items():
            delta = abs(_track_value(track, b) - _track_value(track, b - 1))
            per_character[name] = max(per_character[name], delta)
            if delta > worst_delta:
                worst_name, worst_delta = name, delta
        events.append(
            {
                "frame": b,
                "before": seam["before"],
                "after": seam["after"],
                "worst_character": worst_name,
                "delta": round(worst_delta, 6),
                "ok": worst_delta <= budget + 1e-12,
            }
        )
    max_step = max(per_character.values(), default=0.0)
    return {
        "budget": budget,
        "max_step": round(max_step, 6),
        "ok": max_step <= budget + 1e-12,
        "per_character": {k: round(v, 6) for k, v in sorted(per_character.items())},
        "events": events,
    }


def edge_compliance(meta: dict) -> dict:
    """Entering and exiting characters must cross at a frame edge.

    For each transition span: an entering character's first visible frame
    (and an exiting one's last) must put its center within ``edge_margin``
    of the nearest frame edge. Centers outside the frame trivially comply.
    """
    visibility = meta.get("visibility")
    centers = meta.get("centers")
    if visibility is None or centers is None:
        raise MissingVisibility("run carries no center tracks")
    margin = float(meta["edge_margin"])
    width, height = float(meta["width"]), float(meta["height"])
    events = []
    for span in meta["spans"]:
        tau = span.get("transition")
        if not tau:
            continue
        moves = [(name, "entry") for name in tau["entering"]]
        moves += [(name, "exit") for name in tau["exiting"]]
        for name, move in moves:
            track = visibility.get(name)
            frames_visible = [
                i
                for i in range(span["start"], span["end"])
                if _track_value(track, i) > 0.0
            ]
            if not frames_visible:
                events.append(
                    {
                        "clip": span["clip"],
                        "character": name,
                        "move": move,
                        "frame": None,
                        "distance": None,
                        "ok": False,
                        "note": "never visible inside the transition",
                    }
                )
                continue
            probe = frames_visible[0] if move == "entry" else frames_visible[-1]
            point = centers[name][probe]
            if point is None:
                distance = None
                ok = False
            else:
                cx, cy = float(point[0]), float(point[1])
                distance = min(cx, width - cx, cy, height - cy)
                ok = distance <= margin
            events.append(
                {
                    "clip": span["clip"],
                    "character": name,
                    "move": move,
                    "frame": probe,
                    "distance": None if distance is None else round(distance, 3),
                    "ok": ok,
                }
            )
    return {"ok": all(e["ok"] for e in events), "events": events}


def proxy_seam_report(
    frames: list[np.ndarray], meta: dict, encoder: FrameEncoder, factor: float = 4.0
) -> dict:
    """Seam check without visibility tracks: encoder distances only.

    A seam's encoding step is compared against ``factor`` times the median
    consecutive-frame step inside clips. Coarse, but catches splices.
    """
    codes = encode_frames(frames, encoder)
    steps = np.linalg.norm(np.diff(codes, axis=0), axis=1)
    seam_frames = {s["frame"] for s in seam_boundaries(meta)}
    cut_frames = set(meta["scene_cuts"][1:])
    inside = [
        float(steps[i])
        for i in range(len(steps))
        if (i + 1) not in seam_frames and (i + 1) not in cut_frames
    ]
    baseline = float(np.median(inside)) if inside else 0.0
    threshold = factor * baseline if baseline > 0 else factor
    events = []
    for seam in seam_boundaries(meta):
        delta = float(steps[seam["frame"] - 1])
        events.append(
            {
                "frame": seam["frame"],
                "before": seam["before"],
                "after": seam["after"],
                "delta": round(delta, 6),
                "ok": delta <= threshold,
            }
        )
    max_step = max((e["delta"] for e in events), default=0.0)
    return {
        "budget": round(threshold, 6),
        "baseline_step": round(baseline, 6),
        "max_step": round(max_step, 6),
        "ok": all(e["ok"] for e in events),
        "events": events,
    }


# ---------------------------------------------------------------------------
# Report assembly


@dataclass
class MetricsReport:
    data: dict
    report_dir: Path
    files: list[Path]


def _load_stitched_frames(run_dir: Path, total: int) -> list[np.ndarray]:
    frames = []
    for i in range(total):
        path = run_dir / "stitched" / f"frame_{i + 1:05d}.png"
        if not path.exists():
            raise MetricsError(f"stitched frame missing: {path}")
        frames.append(load_png(path))
    return frames


def build_report(
    run_dir: str | Path,
    encoder_name: str = "grid",
    out_dir: Optional[str | Path] = None,
    make_figures: bool = True,
) -> MetricsReport:
    """Compute every metric for a finished run and write the report bundle.

    Emits report.json, report.md, scene_metrics.csv, seam_events.csv, and
    (unless disabled) the matplotlib figures next to them.
    """
    run_dir = Path(run_dir)
    encoder = get_encoder(encoder_name)
    manifest_path = run_dir / "manifest.json"
    meta_path = run_dir / "stitched" / "stitched.json"
    if not manifest_path.exists() or not meta_path.exists():
        raise MetricsError(f"{run_dir} does not look like a finished run")
    manifest = json.loads(manifest_path.read_text())
    meta = json.loads(meta_path.read_text())
    frames = _load_stitched_frames(run_dir, meta["total_frames"])

    proxy = meta.get("visibility") is None
    scene_rows = []
    cuts = meta["scene_cuts"] + [meta["total_frames"]]
    for record, start, end in zip(manifest["scenes"], cuts, cuts[1:]):
        scene_frames = frames[start:end]
        reference = load_png(run_dir / record["background"])
        scene_rows.append(
            {
                "ordinal": record["ordinal"],
                "location": record["location"],
                "frames": end - start,
                "background_drift": round(
                    background_drift(scene_frames, reference, encoder), 6
                ),
                "background_adherence": round(
                    background_adherence(scene_frames, reference, encoder), 6
                ),
            }
        )

    if proxy:
        seams = proxy_seam_report(frames, meta, encoder)
        edges = {"ok": None, "events": [], "note": "no center tracks"}
    else:
        seams = seam_continuity(meta)
        edges = edge_compliance(meta)

    data = {
        "run_id": manifest["run_id"],
        "encoder": encoder.name,
        "proxy_metrics": proxy,
        "scenes": scene_rows,
        "seams": seams,
        "edges": edges,
        "totals": {
            "scenes": len(scene_rows),
            "clips": len(meta["spans"]),
            "frames": meta["total_frames"],
            "mean_drift": round(
                float(np.mean([r["background_drift"] for r in scene_rows])), 6
            ),
            "max_seam_step": seams["max_step"],
        },
        "ok": bool(seams["ok"]) and (edges["ok"] is not False),
    }

    report_dir = Path(out_dir) if out_dir else run_dir / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    files = [report_dir / "report.json"]
    files[0].write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")

    md_path = report_dir / "report.md"
    md_path.write_text(_render_markdown(data))
    files.append(md_path)

    scene_csv = report_dir / "scene_metrics.csv"
    with scene_csv.open("w", newline="") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=[
                "ordinal",
                "location",
                "frames",
                "background_drift",
                "background_adherence",
            ],
        )
        writer.writeheader()
        writer.writerows(scene_rows)
    files.append(scene_csv)

    seam_csv = report_dir / "seam_events.csv"
    with seam_csv.open("w", newline="") as fh:
        names = ["frame", "before", "after", "delta", "ok"]
        writer = csv.DictWriter(fh, fieldnames=names, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(seams["events"])
    files.append(seam_csv)

    if make_figures:
        from . import plotting

        figure_paths = plotting.render_report_figures(report_dir, data, meta)
        files.extend(figure_paths)

    return MetricsReport(data=data, report_dir=report_dir, files=files)


def _render_markdown(data: dict) -> str:
    lines = [
        f"# Run report: {data['run_id']}",
        "",
        f"- encoder: `{data['encoder']}`",
        f"- proxy metrics: {'yes' if data['proxy_metrics'] else 'no'}",
        f"- overall: {'OK' if data['ok'] else 'VIOLATIONS FOUND'}",
        "",
        "## Scenes",
        "",
        "| # | location | frames | drift | adherence |",
        "|---|----------|--------|-------|-----------|",
    ]
    for row in data["scenes"]:
        lines.append(
            f"| {row['ordinal']} | {row['location']} | {row['frames']} "
            f"| {row['background_drift']:.3f} | {row['background_adherence']:.3f} |"
        )
    seams = data["seams"]
    lines += [
        "",
        "## Seams",
        "",
        f"- budget: {seams['budget']:.6f}",
        f"- max step: {seams['max_step']:.6f}",
        f"- status: {'within budget' if seams['ok'] else 'BROKEN'}",
    ]
    bad = [e for e in seams["events"] if not e["ok"]]
    for event in bad:
        lines.append(
            f"  - frame {event['frame']} ({event['before']} -> {event['after']}): "
            f"step {event['delta']:.6f}"
        )
    edges = data["edges"]
    lines += ["", "## Edge crossings", ""]
    if edges["ok"] is None:
        lines.append("- skipped: " + edges.get("note", "unavailable"))
    else:
        lines.append(f"- status: {'all at frame edges' if edges['ok'] else 'VIOLATIONS'}")
        for event in edges["events"]:
            if not event["ok"]:
                lines.append(
                    f"  - {event['character']} ({event['move']}) in {event['clip']}: "
                    f"distance {event['distance']}"
                )
    return "\n".join(lines) + "\n"
