"""Single entry point over the three algorithm families."""
from __future__ import annotations

from .field import Precision
from .ifta import IftaConfig, run_ifta
from .ospr import OsprConfig, run_timeavg
from .propagation import Propagator
from .report import RunReport
from .search import SearchConfig, run_search
from .timing import NULL_TIMER

__all__ = ["AlgorithmConfig", "run_algorithm"]

AlgorithmConfig = IftaConfig | SearchConfig | OsprConfig


def run_algorithm(cfg: AlgorithmConfig, propagator: Propagator | None = None,
                  precision: Precision = Precision.F64, timer=NULL_TIMER) -> RunReport:
    """Run any configured algorithm; time-averaged runs keep their frames in ``extras["frames"]``."""
    if isinstance(cfg, IftaConfig):
        return run_ifta(cfg, propagator, precision, timer)
    if isinstance(cfg, SearchConfig):
        return run_search(cfg, propagator, precision, timer)
    if isinstance(cfg, OsprConfig):
        subframes, report = run_timeavg(cfg, propagator, precision, timer)
        report.extras["frames"] = subframes
        return report
    raise TypeError(f"not an algorithm config: {type(cfg).__name__}")
