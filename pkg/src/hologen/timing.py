"""Per-phase wall-clock accounting used by the breakdown benchmark."""
from __future__ import annotations

import time
from collections import defaultdict

clock = time.perf_counter


class PhaseTimer:
    """Accumulates seconds per named phase.

    Algorithms call ``add(name, seconds)`` around their compute phases;
    the default :data:`NULL_TIMER` ignores everything.
    """

    def __init__(self):
        self.totals: dict[str, float] = defaultdict(float)

    def add(self, name: str, seconds: float) -> None:
        self.totals[name] += seconds

    def fractions(self, total: float) -> dict[str, float]:
        """Fractions of ``total``; the unattributed remainder is reported as ``other``."""
        if total <= 0:
            raise ValueError("total time must be positive")
        out = {k: v / total for k, v in sorted(self.totals.items())}
        out["other"] = max(0.0, 1.0 - sum(out.values()))
        norm = sum(out.values())
        return {k: v / norm for k, v in out.items()}


class _NullTimer(PhaseTimer):
    def add(self, name, seconds):
        pass


NULL_TIMER = _NullTimer()
