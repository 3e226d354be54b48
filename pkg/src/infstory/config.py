"""Run configuration: defaults, flat key=value config files, env fallback.

The config file format is a flat list of ``key = value`` lines with ``#``
comments. Values coerce to the field's declared type; booleans accept
true/false/yes/no/1/0. Backend endpoints use dotted keys (``endpoint.t2i``).
The full grammar lives in docs/config.md.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from typing import Optional

ENV_CONFIG = "INFSTORY_CONFIG"

SEATS = ("t2i", "i2i", "i2v", "flf2v", "llm", "vlm")


@dataclass
class RunConfig:
    seed: int = 0
    frame_width: int = 128
    frame_height: int = 72
    fps: int = 8
    frame_count: int = 40  # frames per clip
    glyph_size: int = 16
    max_speed: float = 3.0  # px per frame cap for glyph motion
    edge_margin: int = 12  # px band where entries and exits must originate
    seam_threshold: Optional[float] = None  # per-frame visibility step budget
    strict: bool = False
    out_root: str = "runs"
    jobs: int = 1
    mux: Optional[str] = None  # external muxer command template
    background_injection: bool = True
    retries: int = 3
    backoff: float = 0.05
    backend: str = "mock"  # "mock" | "remote"
    endpoints: dict[str, str] = field(default_factory=dict)  # seat -> base URL
    # dataset pipeline knobs
    dataset_frame_count: int = 8
    pass_rate: float = 0.398

    @property
    def seam_budget(self) -> float:
        """Max allowed per-frame visibility change at a seam.

        Defaults to max_speed times the glyph's perimeter-to-area ratio: the
        largest visibility step a legally moving glyph can produce while
        crossing the frame boundary.
        """
        if self.seam_threshold is not None:
            return self.seam_threshold
        g = self.glyph_size
        return self.max_speed * (4.0 * g) / float(g * g)

    def endpoint_for(self, seat: str) -> Optional[str]:
        return self.endpoints.get(seat) or self.endpoints.get("all")

    def as_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["seam_budget"] = self.seam_budget
        return data


class ConfigError(ValueError):
    pass


def parse_config_text(text: str) -> dict[str, str]:
    """Flat key=value lines; '#' starts a comment; blank lines skipped."""
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip().strip("\"'")
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        pairs[key] = value
    return pairs


_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce_value(key: str, raw: str):
    declared = _FIELD_TYPES[key]
    if declared in ("int", int):
        return int(raw)
    if declared in ("float", float):
        return float(raw)
    if declared in ("bool", bool):
        if raw.lower() not in _BOOL:
            raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
        return _BOOL[raw.lower()]
    if declared in ("Optional[float]",):
        return None if raw.lower() in ("", "none") else float(raw)
    if declared in ("Optional[str]",):
        return None if raw.lower() in ("", "none") else raw
    return raw


def apply_pairs(config: RunConfig, pairs: dict[str, str]) -> RunConfig:
    updates: dict = {}
    endpoints = dict(config.endpoints)
    for key, raw in pairs.items():
        if key.startswith("endpoint."):
            seat = key.split(".", 1)[1]
            if seat not in SEATS + ("all",):
                raise ConfigError(f"unknown backend seat {seat!r}")
            endpoints[seat] = raw
            continue
        if key not in _FIELD_TYPES or key == "endpoints":
            raise ConfigError(f"unknown config key {key!r}")
        updates[key] = _coerce_value(key, raw)
    updates["endpoints"] = endpoints
    return dataclasses.replace(config, **updates)


def load_config(path: Optional[str] = None, env: Optional[dict] = None) -> RunConfig:
    """Build a RunConfig from defaults, then the config file if one is given.

    When ``path`` is None the INFSTORY_CONFIG env var is consulted; if that is
    also unset the defaults stand.
    """
    env = os.environ if env is None else env
    path = path or env.get(ENV_CONFIG)
    config = RunConfig()
    if path:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        config = apply_pairs(config, parse_config_text(text))
    return config


def apply_overrides(config: RunConfig, **overrides) -> RunConfig:
    """CLI-level overrides; None values mean 'not given'."""
    updates = {k: v for k, v in overrides.items() if v is not None}
    bad = set(updates) - set(_FIELD_TYPES)
    if bad:
        raise ConfigError(f"unknown config fields: {sorted(bad)}")
    return dataclasses.replace(config, **updates)
