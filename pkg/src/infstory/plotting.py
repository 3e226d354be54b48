"""Report figures. Everything renders headless through the Agg backend."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def visibility_timeline(visibility: dict, scene_cuts: list[int], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(10, 3.2))
    for name in sorted(visibility):
        track = np.array(
            [np.nan if v is None else v for v in visibility[name]], dtype=float
        )
        ax.plot(track, label=name, linewidth=1.2)
    for cut in scene_cuts[1:]:
        ax.axvline(cut, color="gray", linestyle=":", linewidth=0.8)
    ax.set_xlabel("frame")
    ax.set_ylabel("visibility")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def drift_bars(rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 3.2))
    labels = [f"{r['ordinal']}:{r['location']}" for r in rows]
    ax.bar(labels, [r["background_drift"] for r in rows], color="#4878a8")
    ax.set_ylabel("backdrop drift")
    ax.tick_params(axis="x", rotation=45, labelsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def seam_steps(seams: dict, path: Path) -> None:
    events = seams["events"]
    fig, ax = plt.subplots(figsize=(7, 3.2))
    if events:
        xs = [e["frame"] for e in events]
        ys = [e["delta"] for e in events]
        colors = ["#2f8f4e" if e["ok"] else "#b03030" for e in events]
        ax.bar(range(len(xs)), ys, color=colors)
        ax.set_xticks(range(len(xs)))
        ax.set_xticklabels([str(x) for x in xs], fontsize=8)
    ax.axhline(seams["budget"], color="black", linestyle="--", linewidth=1.0)
    ax.set_xlabel("seam frame")
    ax.set_ylabel("visibility step")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def category_histogram(per_category: dict, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 3.2))
    names = list(per_category)
    planned = [per_category[c]["planned"] for c in names]
    passed = [per_category[c]["passed"] for c in names]
    rows = [per_category[c]["manifest_rows"] for c in names]
    xs = np.arange(len(names))
    ax.bar(xs - 0.25, planned, width=0.25, label="planned", color="#9aa5b1")
    ax.bar(xs, passed, width=0.25, label="passed", color="#4878a8")
    ax.bar(xs + 0.25, rows, width=0.25, label="manifest", color="#2f8f4e")
    ax.set_xticks(xs)
    ax.set_xticklabels(names, fontsize=8)
    ax.set_ylabel("clips")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_report_figures(report_dir: Path, data: dict, meta: dict) -> list[Path]:
    paths = []
    drift_path = report_dir / "drift.png"
    drift_bars(data["scenes"], drift_path)
    paths.append(drift_path)
    seams_path = report_dir / "seams.png"
    seam_steps(data["seams"], seams_path)
    paths.append(seams_path)
    if meta.get("visibility"):
        vis_path = report_dir / "visibility.png"
        visibility_timeline(meta["visibility"], meta["scene_cuts"], vis_path)
        paths.append(vis_path)
    return paths
