"""Projection of ideal aperture functions onto the states an SLM can display.

Nearest-level rules
-------------------
Phase mode works on ``diff = arg(field) - arg(illumination)`` measured
from ``min_arg`` and wrapped into ``[0, 2*pi)``.  Inside the addressable arc
the level index is ``floor(t/spac + 0.5)`` (round half away from zero, the
index is never negative).  A restricted-range device leaves an excluded arc
``(span, 2*pi)``; angles there go to ``max_arg`` before the arc midpoint and
to ``min_arg`` from the midpoint on.  Full-circle devices wrap the top
index back to 0.

Only illumination *phase* enters the phase decision.  Amplitude mode snaps
``|field| / |illumination|`` to the nearest amplitude and discards the
input phase.  Every output pixel is ``illumination * state``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import kernels
from .field import ComplexField, Domain

__all__ = [
    "SlmSpec",
    "SpecError",
    "allowed_states",
    "quantise_array",
    "QuantiseWorkspace",
    "quantise_field",
    "quantisation_metric_distance",
    "levels_to_gray",
    "gray_to_levels",
    "states_from_levels",
]

TWO_PI = 2.0 * math.pi


class SpecError(ValueError):
    """Invalid SLM description; ``field`` names the offending parameter."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True, eq=False)
class SlmSpec:
    mode: str = "phase"
    levels: int = 2
    min_arg: float = 0.0
    max_arg: float = math.pi
    full_circle: bool = False
    min_amp: float = 0.0
    max_amp: float = 1.0
    illumination: np.ndarray | None = dc_field(default=None, repr=False)

    def __post_init__(self):
        mode = str(self.mode).lower()
        if mode not in ("phase", "amplitude"):
            raise SpecError("mode", f"must be 'phase' or 'amplitude', got {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        if isinstance(self.levels, bool) or int(self.levels) != self.levels or self.levels < 2:
            raise SpecError("levels", f"must be an integer >= 2, got {self.levels!r}")
        object.__setattr__(self, "levels", int(self.levels))
        if mode == "phase":
            lo, hi = float(self.min_arg), float(self.max_arg)
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise SpecError("min_arg", "phase range must be finite")
            if not lo < hi:
                raise SpecError("max_arg", "must exceed min_arg")
            if hi - lo > TWO_PI * (1 + 1e-12):
                raise SpecError("max_arg", "phase range exceeds one full turn")
            if self.full_circle and abs((hi - lo) - TWO_PI) > 1e-9:
                raise SpecError("full_circle", "requires max_arg - min_arg == 2*pi")
        else:
            lo, hi = float(self.min_amp), float(self.max_amp)
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise SpecError("min_amp", "amplitude range must be finite")
            if lo < 0:
                raise SpecError("min_amp", "must be >= 0")
            if not lo < hi:
                raise SpecError("max_amp", "must exceed min_amp")
        if self.illumination is not None:
            ill = np.asarray(self.illumination)
            if ill.ndim != 2:
                raise SpecError("illumination", "must be a 2-D field")
            ill = ill.astype(np.complex128)
            if not np.isfinite(ill).all():
                raise SpecError("illumination", "contains non-finite values")
            if (ill == 0).any():
                raise SpecError("illumination", "is zero at some pixel")
            object.__setattr__(self, "illumination", ill)

    @property
    def is_phase(self) -> bool:
        return self.mode == "phase"

    @property
    def span(self) -> float:
        return float(self.max_arg) - float(self.min_arg)

    @property
    def spacing(self) -> float:
        if self.is_phase:
            if self.full_circle:
                return TWO_PI / self.levels
            return self.span / (self.levels - 1)
        return (float(self.max_amp) - float(self.min_amp)) / (self.levels - 1)

    @property
    def is_binary(self) -> bool:
        return self.levels == 2

    def same_as(self, other: "SlmSpec") -> bool:
        keys = ("mode", "levels", "min_arg", "max_arg", "full_circle", "min_amp", "max_amp")
        if any(getattr(self, k) != getattr(other, k) for k in keys):
            return False
        if (self.illumination is None) != (other.illumination is None):
            return False
        return self.illumination is None or np.array_equal(self.illumination, other.illumination)


def allowed_states(spec: SlmSpec) -> np.ndarray:
    """Complex modulation states in level-index order (illumination excluded)."""
    k = np.arange(spec.levels)
    if spec.is_phase:
        return np.exp(1j * (float(spec.min_arg) + k * spec.spacing))
    return (float(spec.min_amp) + k * spec.spacing).astype(np.complex128)


def _check_illumination(spec: SlmSpec, shape) -> None:
    if spec.illumination is not None and spec.illumination.shape != tuple(shape):
        raise ValueError(
            f"illumination shape {spec.illumination.shape} does not match field shape {tuple(shape)}"
        )


_BLOCK_PIXELS = 16384


class QuantiseWorkspace:
    """Preallocated outputs for repeated quantisation of one shape.

    Reusing buffers avoids page-faulting fresh arrays every iteration; the
    returned arrays are overwritten by the next call.
    """

    def __init__(self, shape, dtype=np.complex128):
        self.shape = tuple(shape)
        self.dtype = np.dtype(dtype)
        self.values = np.empty(shape, dtype=dtype)
        self.levels = np.empty(shape, dtype=np.int32)


def _phase_angles(a: np.ndarray, rows: slice, re: np.ndarray, im: np.ndarray) -> np.ndarray:
    # contiguous operands let numpy use its SIMD arctan2; strided views do not
    block = a[rows]
    n = block.shape[0]
    re, im = re[:n], im[:n]
    np.copyto(re, block.real)
    np.copyto(im, block.imag)
    return np.arctan2(im, re, out=re)


def quantise_array(a: np.ndarray, spec: SlmSpec, workspace: QuantiseWorkspace | None = None):
    """Quantise a raw complex array; returns ``(values, level_indices)``."""
    _check_illumination(spec, a.shape)
    a = np.ascontiguousarray(a)
    if not np.iscomplexobj(a):
        a = a.astype(np.complex128)
    ws = workspace
    if ws is not None and (ws.shape != a.shape or ws.dtype != a.dtype):
        raise ValueError(f"workspace is {ws.shape} {ws.dtype}, input is {a.shape} {a.dtype}")
    values = np.empty(a.shape, dtype=a.dtype) if ws is None else ws.values
    levels = np.empty(a.shape, dtype=np.int32) if ws is None else ws.levels
    ill = spec.illumination
    if spec.is_phase:
        table = allowed_states(spec).astype(a.dtype)
        illum_arg = None if ill is None else np.ascontiguousarray(np.angle(ill))
        # row blocks keep the angle scratch in cache
        ny, nx = a.shape
        step = max(1, _BLOCK_PIXELS // nx)
        re = np.empty((min(step, ny), nx))
        im = np.empty_like(re)
        args = (table, float(spec.min_arg), spec.spacing, spec.span, spec.levels, bool(spec.full_circle))
        for r0 in range(0, ny, step):
            rows = slice(r0, r0 + step)
            theta = _phase_angles(a, rows, re, im)
            kernels.phase_quantise(theta, None if illum_arg is None else illum_arg[rows], *args,
                                   values[rows], levels[rows])
    else:
        table = allowed_states(spec).real.copy()
        illum_abs = None if ill is None else np.abs(ill)
        kernels.amplitude_quantise(
            a, illum_abs, table, float(spec.min_amp), spec.spacing, spec.levels, values, levels,
        )
    if ill is not None:
        np.multiply(values, ill, out=values, casting="unsafe")
    return values, levels


def states_from_levels(levels: np.ndarray, spec: SlmSpec, dtype=np.complex128) -> np.ndarray:
    _check_illumination(spec, levels.shape)
    values = allowed_states(spec).astype(dtype)[levels]
    if spec.illumination is not None:
        values = (values * spec.illumination).astype(dtype)
    return values


def quantise_field(field: ComplexField, spec: SlmSpec) -> ComplexField:
    if field.domain is not Domain.APERTURE:
        raise ValueError("quantise_field expects an aperture field")
    values, _ = quantise_array(field.data, spec)
    return ComplexField(values, Domain.APERTURE)


def quantisation_metric_distance(field: ComplexField, spec: SlmSpec) -> float:
    """Mean squared distance between a field and its quantised version."""
    q = quantise_field(field, spec)
    diff = field.data.astype(np.complex128) - q.data.astype(np.complex128)
    return float(np.mean(diff.real**2 + diff.imag**2))


def levels_to_gray(levels: np.ndarray, spec: SlmSpec) -> np.ndarray:
    """Level index k to 8-bit gray round(255 k / (levels - 1))."""
    lut = np.floor(255.0 * np.arange(spec.levels) / (spec.levels - 1) + 0.5).astype(np.uint8)
    return lut[levels]


def gray_to_levels(gray: np.ndarray, spec: SlmSpec) -> np.ndarray:
    """Inverse of :func:`levels_to_gray`; raises if a gray value is not a level code."""
    if spec.levels > 256:
        raise ValueError("more than 256 levels cannot be encoded in 8-bit PNG")
    lut = np.floor(255.0 * np.arange(spec.levels) / (spec.levels - 1) + 0.5).astype(np.int64)
    inverse = np.full(256, -1, dtype=np.int64)
    inverse[lut] = np.arange(spec.levels)
    out = inverse[np.asarray(gray, dtype=np.int64)]
    if (out < 0).any():
        raise ValueError("gray values do not correspond to SLM levels")
    return out.astype(np.int32)
