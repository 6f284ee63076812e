"""Iterative Fourier transform algorithms: Gerchberg-Saxton, weighted GS, Liu-Taghizadeh.

Each iteration runs inverse transform -> SLM quantisation -> forward
transform -> replay constraints.  The trace value at iteration k is the
phase-insensitive roi MSE of the replay of the k-th quantised hologram, so
iteration 1 is the one-shot quantised inverse transform of the seeded
target.  Liu-Taghizadeh constrains the replay that enters iteration k+1
with the active region scheduled for iteration k+1.  Constraints are not
applied after the last iteration: the reported replay is the true replay
of the reported hologram.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .field import ComplexField, Domain, Precision, make_rng
from .propagation import Propagator, fftshift, ifftshift
from .quantise import QuantiseWorkspace, SlmSpec, quantise_array
from .report import RunReport, metric_trace_append
from .target import TargetSpec
from .timing import NULL_TIMER, clock
from .variants import Variant

__all__ = [
    "IftaConfig",
    "run_gs",
    "run_weighted_gs",
    "run_liu_taghizadeh",
    "run_ifta",
    "wgs_update",
    "lt_schedule",
    "lt_active_region",
    "initial_replay",
]

WGS_EPS = 1e-12

# replay constraint codes understood by kernels.enforce_amplitude
KEEP, SET_MODULUS, SET_FIELD, ZERO = 0, 1, 2, 3


@dataclass(frozen=True, eq=False)
class IftaConfig:
    variant: Variant
    iterations: int
    slm: SlmSpec
    target: TargetSpec
    seed: int = 0
    weight_clamp: tuple[float, float] = (0.1, 10.0)
    lt_initial_fraction: float = 0.1
    lt_growth: str = "linear"
    initial_phase: str = "random"

    def __post_init__(self):
        variant = Variant.parse(self.variant)
        if variant.family != "ifta":
            raise ValueError(f"{variant.value} is not an IFTA variant")
        object.__setattr__(self, "variant", variant)
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValueError("iterations must be an integer >= 1")
        lo, hi = self.weight_clamp
        if not 0 < lo <= hi:
            raise ValueError("weight_clamp must satisfy 0 < low <= high")
        if not 0 < self.lt_initial_fraction <= 1:
            raise ValueError("lt_initial_fraction must be in (0, 1]")
        if self.lt_growth != "linear":
            raise ValueError(f"unknown lt_growth {self.lt_growth!r}")
        if self.initial_phase not in ("random", "flat"):
            raise ValueError("initial_phase must be 'random' or 'flat'")


def initial_replay(target: TargetSpec, seed: int, dtype, initial_phase: str = "random") -> np.ndarray:
    """Target amplitude with seeded phase.

    The target phase is used when phase is constrained and one is given;
    otherwise the phase is uniform random from ``seed`` (or zero for
    ``initial_phase="flat"``).
    """
    amp = target.amplitude.data.astype(np.float64)
    if initial_phase == "flat":
        theta = np.zeros(amp.shape)
    elif not target.freedoms.phase and target.phase is not None:
        theta = target.phase_radians()
    else:
        theta = 2.0 * np.pi * make_rng(seed).random(amp.shape)
    return (amp * np.exp(1j * theta)).astype(dtype)


def wgs_update(weights, target, replay_mag, clamp=(0.1, 10.0), gain=1.0, eps=WGS_EPS):
    """w <- clamp(w * T / max(g |R|, eps)); pixels with T == 0 keep their weight."""
    ratio = np.divide(target, np.maximum(gain * replay_mag, eps))
    ratio = np.where(target > 0, ratio, 1.0)
    return np.clip(weights * ratio, clamp[0], clamp[1])


def lt_schedule(iterations: int, initial_fraction: float) -> list[float]:
    """Active-area fraction per iteration, growing linearly to 1 at the last one."""
    if iterations == 1:
        return [1.0]
    step = (1.0 - initial_fraction) / (iterations - 1)
    return [initial_fraction + k * step if k < iterations - 1 else 1.0 for k in range(iterations)]


def lt_active_region(roi: np.ndarray, fraction: float) -> np.ndarray:
    """Centred sub-rectangle of the roi's bounding box covering ``fraction`` of its area.

    Centred in display coordinates (DC in the middle), intersected with the roi.
    """
    shifted = fftshift(np.asarray(roi, dtype=bool))
    ys, xs = np.nonzero(shifted)
    y0, y1, x0, x1 = ys.min(), ys.max(), xs.min(), xs.max()
    h, w = y1 - y0 + 1, x1 - x0 + 1
    s = math.sqrt(fraction)
    hh = max(1, min(h, int(math.floor(h * s + 0.5))))
    ww = max(1, min(w, int(math.floor(w * s + 0.5))))
    top, left = y0 + (h - hh) // 2, x0 + (w - ww) // 2
    rect = np.zeros_like(shifted)
    rect[top:top + hh, left:left + ww] = True
    return ifftshift(rect & shifted)


def _constraint_codes(target: TargetSpec, active: np.ndarray) -> np.ndarray:
    roi = target.roi_array()
    code = np.full(roi.shape, KEEP, dtype=np.uint8)
    code[active] = SET_MODULUS if target.freedoms.phase else SET_FIELD
    if not target.freedoms.amplitude_outside_roi:
        code[~roi] = ZERO
    return code


def _mse_from_sums(sums, target_sq_sum, count, scale_free):
    s_ta, s_rr, s_dd = sums
    if not scale_free:
        return s_dd / count
    g = s_ta / s_rr if s_rr > 0 else 1.0
    return max(target_sq_sum - 2 * g * s_ta + g * g * s_rr, 0.0) / count


def run_ifta(cfg: IftaConfig, propagator: Propagator | None = None,
             precision: Precision = Precision.F64, timer=NULL_TIMER, callback=None) -> RunReport:
    """Run the configured IFTA variant.

    ``callback(k, hologram, replay)`` is invoked after each iteration's
    forward transform, before replay constraints, with raw arrays that are
    reused by later iterations (copy them to keep them).
    """
    prop = propagator or Propagator()
    target = cfg.target
    ill = cfg.slm.illumination
    if ill is not None and ill.shape != target.shape:
        raise ValueError(f"illumination shape {ill.shape} does not match target {target.shape}")
    cdtype = precision.complex_dtype
    variant = cfg.variant

    amp_t = np.ascontiguousarray(target.amplitude.data, dtype=np.float64)
    roi = target.roi_array()
    roi_u8 = roi.astype(np.uint8)
    count = int(roi.sum())
    t_sq = float(np.sum(amp_t[roi] ** 2))
    scale_free = target.freedoms.scale
    ephase = None
    if not target.freedoms.phase:
        phi = target.phase_radians()
        ephase = np.exp(1j * (np.zeros(amp_t.shape) if phi is None else phi))

    fractions = lt_schedule(cfg.iterations, cfg.lt_initial_fraction) if variant is Variant.LIU_TAGHIZADEH else None
    code = _constraint_codes(target, roi)
    no_op = np.zeros_like(code)
    weights = np.ones_like(amp_t) if variant is Variant.WEIGHTED_GS else None
    amp = amp_t

    report = RunReport(algorithm=variant.value, metric="mse")
    replay = initial_replay(target, cfg.seed, cdtype, cfg.initial_phase)
    workspace = QuantiseWorkspace(target.shape, cdtype)
    holo = levels = None
    start = clock()
    for k in range(1, cfg.iterations + 1):
        t0 = clock()
        aperture = np.asarray(prop.inverse(replay), dtype=cdtype)
        t1 = clock()
        holo, levels = quantise_array(aperture, cfg.slm, workspace)
        t2 = clock()
        replay = np.ascontiguousarray(prop.forward(holo), dtype=cdtype)
        t3 = clock()
        timer.add("transform", (t1 - t0) + (t3 - t2))
        timer.add("constraint", t2 - t1)
        if callback is not None:
            callback(k, holo, replay)

        last = k == cfg.iterations
        t4 = clock()
        if last:
            step_code = no_op
        elif fractions is not None:
            step_code = _constraint_codes(target, lt_active_region(roi, fractions[k]))
        else:
            step_code = code
        if weights is not None and not last:
            mag = np.abs(replay).astype(np.float64)
            denom = float(np.sum(mag[roi] ** 2))
            gain = float(np.sum(amp_t[roi] * mag[roi])) / denom if denom > 0 else 1.0
            weights = np.where(roi, wgs_update(weights, amp_t, mag, cfg.weight_clamp, gain), weights)
            amp = np.ascontiguousarray(weights * amp_t)
        sums = kernels.enforce_amplitude(replay, amp, step_code, ephase, roi_u8, amp_t)
        err = _mse_from_sums(sums, t_sq, count, scale_free)
        timer.add("constraint", clock() - t4)
        metric_trace_append(report, k, err)

    report.timings["compute"] = clock() - start
    report.hologram = ComplexField(holo, Domain.APERTURE)
    report.replay = ComplexField(replay, Domain.REPLAY)
    report.levels = levels
    if weights is not None:
        report.extras["weights"] = weights
    if fractions is not None:
        report.extras["active_fractions"] = fractions
    return report


def _run_variant(variant: Variant):
    def run(cfg: IftaConfig, propagator=None, precision=Precision.F64, timer=NULL_TIMER, callback=None):
        if cfg.variant is not variant:
            raise ValueError(f"config variant {cfg.variant.value} is not {variant.value}")
        return run_ifta(cfg, propagator, precision, timer, callback)

    run.__name__ = f"run_{variant.name.lower()}"
    return run


run_gs = _run_variant(Variant.GS)
run_weighted_gs = _run_variant(Variant.WEIGHTED_GS)
run_liu_taghizadeh = _run_variant(Variant.LIU_TAGHIZADEH)
