"""Target description shared by all algorithm families."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .field import RealImage, RegionMask
from .metrics import MetricConfig

__all__ = ["Freedoms", "TargetSpec"]


@dataclass(frozen=True)
class Freedoms:
    """Slack the generator may exploit.

    amplitude_outside_roi: replay amplitude outside the region is unconstrained.
    phase: replay phase is unconstrained.
    scale: a global gain on the replay is free (fidelity over efficiency).
    """

    amplitude_outside_roi: bool = True
    phase: bool = True
    scale: bool = False


@dataclass(frozen=True, eq=False)
class TargetSpec:
    """Target amplitude with optional phase (fraction of 2*pi in [0, 1)) and region of interest.

    Arrays are in transform layout: DC at index (0, 0).
    """

    amplitude: RealImage
    phase: RealImage | None = None
    roi: RegionMask | None = None
    freedoms: Freedoms = field(default_factory=Freedoms)

    def __post_init__(self):
        if not isinstance(self.amplitude, RealImage):
            object.__setattr__(self, "amplitude", RealImage(np.asarray(self.amplitude, dtype=np.float64)))
        if self.phase is not None and not isinstance(self.phase, RealImage):
            object.__setattr__(self, "phase", RealImage(np.asarray(self.phase, dtype=np.float64)))
        if self.roi is not None and not isinstance(self.roi, RegionMask):
            object.__setattr__(self, "roi", RegionMask(self.roi))
        shape = self.amplitude.shape
        if self.phase is not None:
            if self.phase.shape != shape:
                raise ValueError(f"target phase shape {self.phase.shape} != amplitude shape {shape}")
            if (self.phase.data >= 1).any():
                raise ValueError("target phase must lie in [0, 1) (fraction of a turn)")
        if self.roi is not None:
            if self.roi.shape != shape:
                raise ValueError(f"roi shape {self.roi.shape} != amplitude shape {shape}")
            if self.roi.covered_count < 1:
                raise ValueError("roi covers no pixels")

    @property
    def shape(self) -> tuple[int, int]:
        return self.amplitude.shape

    def roi_array(self) -> np.ndarray:
        return np.ones(self.shape, dtype=bool) if self.roi is None else self.roi.data

    def phase_radians(self) -> np.ndarray | None:
        return None if self.phase is None else 2.0 * np.pi * self.phase.data

    def metric_config(self, **overrides) -> MetricConfig:
        """Phase-insensitive MSE over the roi, scale-free when scale freedom is on."""
        kw = dict(mask=self.roi, scale_free=self.freedoms.scale)
        kw.update(overrides)
        return MetricConfig(**kw)
