"""One-step phase retrieval: time-averaged subframe sequences.

Each subframe is a single quantised inverse transform of the target with a
fresh random phase.  Displayed in quick succession the eye integrates
intensity, so the perceived image is ``sqrt(mean |R_n|^2)`` and its error
falls as more subframes are added.  The adaptive variant steers each new
subframe towards the intensity the running average is still missing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import ComplexField, Domain, Precision, make_rng
from .metrics import mse
from .propagation import Propagator
from .quantise import SlmSpec, quantise_array
from .report import RunReport, metric_trace_append
from .target import TargetSpec
from .timing import NULL_TIMER, clock
from .variants import Variant

__all__ = [
    "OsprConfig",
    "SubframeSet",
    "run_ospr",
    "run_adaptive_ospr",
    "run_timeavg",
    "adaptive_target",
    "subframe_error_statistic",
]


@dataclass(frozen=True, eq=False)
class OsprConfig:
    variant: Variant
    subframes: int
    slm: SlmSpec
    target: TargetSpec
    seed: int = 0
    feedback_gain: float = 1.0

    def __post_init__(self):
        variant = Variant.parse(self.variant)
        if variant.family != "timeavg":
            raise ValueError(f"{variant.value} is not a time-averaged variant")
        object.__setattr__(self, "variant", variant)
        if int(self.subframes) != self.subframes or self.subframes < 1:
            raise ValueError("subframes must be an integer >= 1")
        if not 0 <= self.feedback_gain <= 1:
            raise ValueError("feedback_gain must be in [0, 1]")


@dataclass(eq=False)
class SubframeSet:
    frames: list
    levels: list
    mean_intensity: np.ndarray
    per_frame_mse: list

    def __len__(self):
        return len(self.frames)


def subframe_error_statistic(per_frame_mse) -> float:
    """Sum of the per-subframe errors divided by sqrt(N)."""
    values = [float(v) for v in per_frame_mse]
    if not values:
        raise ValueError("per_frame_mse is empty")
    return math.fsum(values) / math.sqrt(len(values))


def adaptive_target(target_amp: np.ndarray, mean_intensity: np.ndarray, n: int, gain: float,
                    roi: np.ndarray | None = None) -> np.ndarray:
    """Amplitude for subframe ``n`` given the mean intensity of frames 1..n-1.

    ``n T^2 - (n-1) M`` is the intensity the next frame must add for the
    average to hit the target; negative budgets clamp to zero.  ``M`` is
    first brought to the target's brightness by the least-squares amplitude
    gain over ``roi``, since replays carry a scale unrelated to the target.
    """
    t = np.asarray(target_amp, dtype=np.float64)
    if n == 1 or gain == 0:
        return t
    sel = np.ones(t.shape, bool) if roi is None else roi
    amp = np.sqrt(mean_intensity)
    denom = float(np.sum(mean_intensity[sel]))
    g = float(np.sum(t[sel] * amp[sel])) / denom if denom > 0 else 1.0
    budget = n * t * t - (n - 1) * (g * g) * mean_intensity
    tn = np.sqrt(np.maximum(budget, 0.0))
    if gain == 1:
        return tn
    return (1.0 - gain) * t + gain * tn


def run_timeavg(cfg: OsprConfig, propagator: Propagator | None = None,
                precision: Precision = Precision.F64, timer=NULL_TIMER):
    """Generate the subframe sequence; returns ``(SubframeSet, RunReport)``.

    The report's ``mse`` trace holds, for each n, the error of the average
    of frames 1..n; ``frame_mse`` holds each subframe's own error.
    """
    prop = propagator or Propagator()
    target = cfg.target
    cdtype = precision.complex_dtype
    t_amp = target.amplitude.data.astype(np.float64)
    roi = target.roi_array()
    metric = target.metric_config()
    rng = make_rng(cfg.seed)
    adaptive = cfg.variant is Variant.ADAPTIVE_OSPR

    report = RunReport(algorithm=cfg.variant.value, metric="mse")
    frames, levels, per_frame = [], [], []
    total = np.zeros(t_amp.shape)
    start = clock()
    for n in range(1, cfg.subframes + 1):
        t0 = clock()
        amp = adaptive_target(t_amp, total / (n - 1), n, cfg.feedback_gain, roi) if adaptive and n > 1 else t_amp
        theta = 2.0 * np.pi * rng.random(t_amp.shape)
        seeded = (amp * np.exp(1j * theta)).astype(cdtype)
        t1 = clock()
        aperture = prop.inverse(seeded)
        t2 = clock()
        holo, lev = quantise_array(aperture, cfg.slm)
        t3 = clock()
        replay = prop.forward(holo)
        t4 = clock()
        intensity = replay.real.astype(np.float64) ** 2 + replay.imag.astype(np.float64) ** 2
        total += intensity
        frames.append(holo)
        levels.append(lev)
        per_frame.append(mse(t_amp, replay, metric))
        metric_trace_append(report, n, mse(t_amp, np.sqrt(total / n), metric))
        metric_trace_append(report, n, per_frame[-1], "frame_mse")
        timer.add("transform", (t2 - t1) + (t4 - t3))
        timer.add("constraint", (t3 - t2) + (t1 - t0) + (clock() - t4))

    report.timings["compute"] = clock() - start
    mean_intensity = total / cfg.subframes
    subframes = SubframeSet(frames, levels, mean_intensity, per_frame)
    report.hologram = ComplexField(frames[-1], Domain.APERTURE)
    report.replay = ComplexField(np.sqrt(mean_intensity), Domain.REPLAY)
    report.levels = levels[-1]
    report.extras["subframes"] = cfg.subframes
    report.extras["subframe_error_statistic"] = subframe_error_statistic(per_frame)
    return subframes, report


def _run_variant(variant: Variant):
    def run(cfg: OsprConfig, propagator=None, precision=Precision.F64, timer=NULL_TIMER):
        if cfg.variant is not variant:
            raise ValueError(f"config variant {cfg.variant.value} is not {variant.value}")
        return run_timeavg(cfg, propagator, precision, timer)

    run.__name__ = f"run_{variant.name.lower()}"
    return run


run_ospr = _run_variant(Variant.OSPR)
run_adaptive_ospr = _run_variant(Variant.ADAPTIVE_OSPR)
