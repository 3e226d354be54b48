"""Deterministic toy world the mock image/video seats render.

Backgrounds are block-noise patterns with every RGB channel forced even;
character glyphs are solid squares whose channels are all odd. That parity
split makes glyph pixels exactly recoverable from any frame, which is what
lets the mock video seats re-detect positions and the mock VLM count
characters without heuristics.

Everything derives from sha256 over (seed, labels), never from Python's
salted hash, so reruns are byte-identical.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

Position = tuple[int, int]  # glyph top-left corner, may lie outside the frame


@dataclass(frozen=True)
class WorldGeometry:
    width: int = 128
    height: int = 72
    glyph_size: int = 16
    max_speed: float = 3.0
    edge_margin: int = 12

    @property
    def inner_box(self) -> tuple[int, int, int, int]:
        """x0, y0, x1, y1 bounds for a fully visible, margin-respecting glyph."""
        m, g = self.edge_margin, self.glyph_size
        return (m, m, self.width - g - m, self.height - g - m)


def _digest(*parts: object) -> bytes:
    joined = "\x1f".join(str(p) for p in parts)
    return hashlib.sha256(joined.encode("utf-8")).digest()


def _digest_int(*parts: object) -> int:
    return int.from_bytes(_digest(*parts)[:8], "big")


class MockWorld:
    def __init__(self, geometry: WorldGeometry, seed: int):
        self.geometry = geometry
        self.seed = seed

    # -- colors and patterns -------------------------------------------------

    def glyph_color(self, name: str) -> tuple[int, int, int]:
        d = _digest("glyph-color", self.seed, name)
        return (d[0] | 1, d[1] | 1, d[2] | 1)

    def background(self, token: str, salt: str = "") -> np.ndarray:
        """Pattern image for a location token; all channels even."""
        geo = self.geometry
        rng = np.random.default_rng(_digest_int("background", self.seed, token, salt))
        block_h, block_w = 6, 8
        base = rng.integers(0, 256, size=(block_h, block_w, 3), dtype=np.uint8)
        reps_y = -(-geo.height // block_h)
        reps_x = -(-geo.width // block_w)
        tiled = np.repeat(np.repeat(base, reps_y, axis=0), reps_x, axis=1)
        frame = tiled[: geo.height, : geo.width].copy()
        return frame & 0xFE

    # -- placement -----------------------------------------------------------

    def keyframe_position(self, name: str, pose: str) -> Position:
        x0, y0, x1, y1 = self.geometry.inner_box
        d = _digest_int("position", self.seed, name, pose)
        x = x0 + d % (x1 - x0 + 1)
        y = y0 + (d // 7919) % (y1 - y0 + 1)
        return (x, y)

    def place_glyphs(self, names_poses: list[tuple[str, str]]) -> dict[str, Position]:
        """Deterministic non-overlapping placement, resolved in name order."""
        geo = self.geometry
        x0, y0, x1, y1 = geo.inner_box
        placed: dict[str, Position] = {}
        for name, pose in sorted(names_poses):
            x, y = self.keyframe_position(name, pose)
            step = geo.glyph_size + 2
            for _ in range(256):
                if not any(
                    abs(x - px) < geo.glyph_size and abs(y - py) < geo.glyph_size
                    for px, py in placed.values()
                ):
                    break
                x += step
                if x > x1:
                    x = x0 + (x - x1) % (x1 - x0 + 1)
                    y += step
                    if y > y1:
                        y = y0 + (y - y1) % (y1 - y0 + 1)
            else:
                raise ValueError("frame too small to place glyphs without overlap")
            placed[name] = (x, y)
        colors = {placed_name: self.glyph_color(placed_name) for placed_name in placed}
        if len(set(colors.values())) != len(colors):
            raise ValueError(f"glyph color collision among {sorted(colors)}")
        return placed

    # -- rendering and detection ----------------------------------------------

    def draw_glyph(self, frame: np.ndarray, name: str, position: Position) -> None:
        g = self.geometry.glyph_size
        x, y = position
        x_lo, x_hi = max(0, x), min(self.geometry.width, x + g)
        y_lo, y_hi = max(0, y), min(self.geometry.height, y + g)
        if x_lo < x_hi and y_lo < y_hi:
            frame[y_lo:y_hi, x_lo:x_hi] = self.glyph_color(name)

    def render_frame(
        self, background: np.ndarray, positions: dict[str, Position]
    ) -> np.ndarray:
        frame = background.copy()
        for name in sorted(positions):
            self.draw_glyph(frame, name, positions[name])
        return frame

    def visibility(self, position: Position) -> float:
        """Fraction of the glyph inside the frame; clipping only, no occlusion."""
        g = self.geometry.glyph_size
        x, y = position
        w = min(self.geometry.width, x + g) - max(0, x)
        h = min(self.geometry.height, y + g) - max(0, y)
        if w <= 0 or h <= 0:
            return 0.0
        return (w * h) / float(g * g)

    def center(self, position: Position) -> tuple[float, float]:
        g = self.geometry.glyph_size
        return (position[0] + g / 2.0, position[1] + g / 2.0)

    def detect_glyph(self, frame: np.ndarray, name: str) -> Position | None:
        """Exact-color detection; top-left of the matching pixel block."""
        color = np.array(self.glyph_color(name), dtype=np.uint8)
        mask = np.all(frame == color, axis=2)
        if not mask.any():
            return None
        ys, xs = np.nonzero(mask)
        return (int(xs.min()), int(ys.min()))

    def count_figures(self, frame: np.ndarray) -> int:
        """Distinct glyph colors with any visible pixel (all channels odd)."""
        odd = np.all(frame % 2 == 1, axis=2)
        if not odd.any():
            return 0
        colors = np.unique(frame[odd].reshape(-1, 3), axis=0)
        return int(colors.shape[0])

    # -- motion ---------------------------------------------------------------

    def narrative_paths(
        self,
        placements: dict[str, Position],
        poses: dict[str, str],
        frame_count: int,
    ) -> dict[str, list[Position]]:
        """Poses Walking/Running bounce inside the inner box; others hold still."""
        x0, y0, x1, y1 = self.geometry.inner_box
        speeds = {"Walking": 2, "Running": 3}
        paths: dict[str, list[Position]] = {}
        for name, start in placements.items():
            speed = min(speeds.get(poses.get(name, ""), 0), int(self.geometry.max_speed))
            if speed == 0:
                paths[name] = [start] * frame_count
                continue
            d = _digest_int("vector", self.seed, name)
            vx, vy = [(speed, 0), (0, speed), (-speed, 0), (0, -speed)][d % 4]
            x, y = start
            path = [start]
            for _ in range(frame_count - 1):
                nx, ny = x + vx, y + vy
                if nx < x0 or nx > x1:
                    vx = -vx
                    nx = x + vx
                if ny < y0 or ny > y1:
                    vy = -vy
                    ny = y + vy
                x, y = min(max(nx, x0), x1), min(max(ny, y0), y1)
                path.append((x, y))
            paths[name] = path
        return paths

    def offscreen_point(self, anchor: Position) -> Position:
        """Nearest fully-outside resting point for a glyph anchored at ``anchor``."""
        g = self.geometry.glyph_size
        w, h = self.geometry.width, self.geometry.height
        x, y = anchor
        candidates = [
            (x + g, (-g, y)),  # off the left edge
            (w - x, (w, y)),  # off the right edge
            (y + g, (x, -g)),  # off the top edge
            (h - y, (x, h)),  # off the bottom edge
        ]
        _, point = min(candidates, key=lambda c: c[0])
        return point

    @staticmethod
    def _lerp(a: Position, b: Position, step: int, steps: int) -> Position:
        t = step / float(steps)
        return (round(a[0] + (b[0] - a[0]) * t), round(a[1] + (b[1] - a[1]) * t))

    def transition_paths(
        self,
        start_positions: dict[str, Position],
        end_positions: dict[str, Position],
        exiting: set[str],
        entering: set[str],
        frame_count: int,
    ) -> dict[str, list[Position]]:
        """Linear choreography between the two endpoint layouts.

        Staying characters glide start -> end; exiting ones leave through the
        nearest edge and are fully out by the last frame; entering ones start
        fully out and land on their end position. Frame counts below ~16 at
        the default geometry make per-frame visibility steps exceed the seam
        budget, so callers keep frame_count comfortably above that.
        """
        steps = max(frame_count - 1, 1)
        paths: dict[str, list[Position]] = {}
        names = set(start_positions) | set(end_positions)
        for name in sorted(names):
            if name in exiting:
                src = start_positions[name]
                dst = self.offscreen_point(src)
            elif name in entering:
                dst = end_positions[name]
                src = self.offscreen_point(dst)
            else:
                src = start_positions[name]
                dst = end_positions[name]
            paths[name] = [self._lerp(src, dst, t, steps) for t in range(frame_count)]
        return paths
