"""Which algorithm to try first for a given modulator and application.

The chart, as a lookup (family order, best first):

=====================  ==========  ===========================
modulator              real-time   ranking
=====================  ==========  ===========================
multi-level phase      no          IFTA, search, time-averaged
piecewise              no          search, IFTA, time-averaged
any                    yes         time-averaged, IFTA, search
=====================  ==========  ===========================

IFTA converges smoothly and suits SLMs with many phase levels.  Piecewise
modulators (binary, or amplitude-only) break that smoothness and favour per-pixel
search.  Time-averaged subframes need one transform each, so they win when
latency matters.  Remaining families follow IFTA, search, time-averaged.
"""
from __future__ import annotations

from .quantise import SlmSpec
from .variants import FAMILY_MEMBERS, Variant

__all__ = ["suggest_algorithm", "modulator_class", "CHOICE_TABLE", "FAMILY_ORDER"]

FAMILY_ORDER = ("ifta", "search", "timeavg")

CHOICE_TABLE = {
    ("multi-level phase", False): ("ifta", "search", "timeavg"),
    ("piecewise", False): ("search", "ifta", "timeavg"),
    ("multi-level phase", True): ("timeavg", "ifta", "search"),
    ("piecewise", True): ("timeavg", "ifta", "search"),
}


def modulator_class(slm: SlmSpec) -> str:
    """``multi-level phase`` for phase SLMs with more than two levels, else ``piecewise``."""
    return "multi-level phase" if slm.is_phase and slm.levels > 2 else "piecewise"


def suggest_algorithm(slm: SlmSpec, phase_insensitive: bool = True, realtime: bool = False) -> list[Variant]:
    """All variants, most suitable first.

    ``phase_insensitive`` does not reorder the chart.  Time-averaged
    methods lean hardest on phase freedom, and they are already last unless
    real-time display puts them first.
    """
    families = CHOICE_TABLE[(modulator_class(slm), bool(realtime))]
    return [v for fam in families for v in FAMILY_MEMBERS[fam]]
