"""Opt-in fault knobs for the mock backends.

Counters tick down as faults fire, so "fail twice then succeed" is just
``retryable={"t2i": 2}``. Determinism claims apply to fault-free configs;
a faulted service is stateful by design.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


@dataclass
class MockFaults:
    # stage -> (flavor, remaining bad replies), e.g. {"chapters": ("unknown_character", 1)}
    llm: dict[str, tuple[str, int]] = field(default_factory=dict)
    # seat -> remaining synthetic retryable failures
    retryable: dict[str, int] = field(default_factory=dict)
    # seats that always answer with a fatal status
    fatal_seats: set[str] = field(default_factory=set)

    def take_llm(self, stage: str) -> Optional[str]:
        entry = self.llm.get(stage)
        if not entry:
            return None
        flavor, remaining = entry
        if remaining <= 0:
            return None
        self.llm[stage] = (flavor, remaining - 1)
        return flavor

    def take_retryable(self, seat: str) -> bool:
        remaining = self.retryable.get(seat, 0)
        if remaining <= 0:
            return False
        self.retryable[seat] = remaining - 1
        return True
