"""Replay-field error metrics: MSE and global SSIM.

Both come in a phase-insensitive flavour comparing ``|R|`` with the target
amplitude and a phase-sensitive flavour that takes the target phase into
account (zero unless given).  Phase-sensitive MSE uses the complex
difference ``|T e^{i phi} - R|``; phase-sensitive SSIM compares the target
with the real projection ``Re(R e^{-i phi})``.  Statistics are over the
region mask when one is set, with population (divide by M) moments.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .field import ComplexField, RealImage, RegionMask

__all__ = [
    "MetricKind",
    "MetricConfig",
    "mse",
    "ssim",
    "evaluate",
    "scale_free_gain",
    "MaskedTarget",
    "loglog_slope",
]


class MetricKind(enum.Enum):
    MSE = "MSE"
    SSIM = "SSIM"

    @classmethod
    def parse(cls, value) -> "MetricKind":
        if isinstance(value, MetricKind):
            return value
        try:
            return cls[str(value).upper()]
        except KeyError:
            raise ValueError(f"unknown metric {value!r}") from None


@dataclass(frozen=True, eq=False)
class MetricConfig:
    kind: MetricKind = MetricKind.MSE
    phase_sensitive: bool = False
    mask: RegionMask | None = None
    scale_free: bool = False
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", MetricKind.parse(self.kind))
        if not (self.k1 > 0 and self.k2 > 0):
            raise ValueError("k1 and k2 must be > 0")
        if not self.dynamic_range > 0:
            raise ValueError("dynamic_range must be > 0")
        if self.mask is not None and not isinstance(self.mask, RegionMask):
            object.__setattr__(self, "mask", RegionMask(self.mask))

    @property
    def name(self) -> str:
        return self.kind.value.lower()

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2


def _as_array(x) -> np.ndarray:
    if isinstance(x, (ComplexField, RealImage, RegionMask)):
        return x.data
    return np.asarray(x)


def _select(target, replay, cfg: MetricConfig, target_phase):
    t = np.asarray(_as_array(target), dtype=np.float64)
    r = np.asarray(_as_array(replay)).astype(np.complex128)
    if t.shape != r.shape:
        raise ValueError(f"dimension mismatch: target {t.shape} vs replay {r.shape}")
    phi = None
    if target_phase is not None:
        phi = 2.0 * np.pi * np.asarray(_as_array(target_phase), dtype=np.float64)
        if phi.shape != t.shape:
            raise ValueError(f"dimension mismatch: target phase {phi.shape} vs target {t.shape}")
    if cfg.mask is not None:
        m = cfg.mask.data
        if m.shape != t.shape:
            raise ValueError(f"dimension mismatch: mask {m.shape} vs target {t.shape}")
        if not m.any():
            raise ValueError("empty mask")
        t, r = t[m], r[m]
        phi = None if phi is None else phi[m]
    return t.ravel(), r.ravel(), (None if phi is None else phi.ravel())


def scale_free_gain(t: np.ndarray, r: np.ndarray, phase_sensitive: bool = False, phi=None) -> float:
    """Least-squares gain g >= 0 minimising sum |T - g R|^2 (modulus or complex)."""
    rr = float(np.sum(r.real**2 + r.imag**2))
    if rr == 0:
        return 1.0
    if phase_sensitive:
        tc = t if phi is None else t * np.exp(1j * phi)
        return max(0.0, float(np.sum((np.conj(r) * tc).real)) / rr)
    return float(np.sum(t * np.abs(r))) / rr


def _mse(t, r, phi, cfg: MetricConfig) -> float:
    g = scale_free_gain(t, r, cfg.phase_sensitive, phi) if cfg.scale_free else 1.0
    if cfg.phase_sensitive:
        tc = t if phi is None else t * np.exp(1j * phi)
        d = tc - g * r
        return float(np.mean(d.real**2 + d.imag**2))
    return float(np.mean((t - g * np.abs(r)) ** 2))


def _ssim(t, r, phi, cfg: MetricConfig) -> float:
    if cfg.phase_sensitive:
        c = (r * np.exp(-1j * phi)).real if phi is not None else r.real
    else:
        c = np.abs(r)
    mu_t, mu_c = float(np.mean(t)), float(np.mean(c))
    dt, dc = t - mu_t, c - mu_c
    var_t = float(np.mean(dt * dt))
    var_c = float(np.mean(dc * dc))
    cov = float(np.mean(dt * dc))
    c1, c2 = cfg.c1, cfg.c2
    return ((2 * mu_t * mu_c + c1) * (2 * cov + c2)) / ((mu_t**2 + mu_c**2 + c1) * (var_t + var_c + c2))


def mse(target, replay, cfg: MetricConfig | None = None, target_phase=None) -> float:
    cfg = cfg or MetricConfig()
    if cfg.kind is not MetricKind.MSE:
        raise ValueError("mse called with a non-MSE config")
    return _mse(*_select(target, replay, cfg, target_phase), cfg)


def ssim(target, replay, cfg: MetricConfig | None = None, target_phase=None) -> float:
    cfg = cfg or MetricConfig(kind=MetricKind.SSIM)
    if cfg.kind is not MetricKind.SSIM:
        raise ValueError("ssim called with a non-SSIM config")
    return _ssim(*_select(target, replay, cfg, target_phase), cfg)


def evaluate(target, replay, cfg: MetricConfig, target_phase=None) -> float:
    if cfg.kind is MetricKind.MSE:
        return mse(target, replay, cfg, target_phase)
    return ssim(target, replay, cfg, target_phase)


class MaskedTarget:
    """Target restricted to the metric region, flattened for per-pixel kernels.

    ``error_from_sums`` turns the five running sums produced by the search
    kernels into the configured metric, oriented so that lower is better
    (SSIM is returned as ``1 - SSIM``).
    """

    def __init__(self, target: np.ndarray, cfg: MetricConfig, target_phase: np.ndarray | None = None):
        target = np.asarray(target, dtype=np.float64)
        mask = np.ones(target.shape, bool) if cfg.mask is None else cfg.mask.data
        if mask.shape != target.shape:
            raise ValueError(f"dimension mismatch: mask {mask.shape} vs target {target.shape}")
        if not mask.any():
            raise ValueError("empty mask")
        self.cfg = cfg
        self.mv, self.mu = (np.ascontiguousarray(i, dtype=np.int64) for i in np.nonzero(mask))
        self.tvals = np.ascontiguousarray(target[mask])
        self.count = self.tvals.size
        self.ephi = None
        if cfg.phase_sensitive:
            phi = np.zeros(target.shape) if target_phase is None else 2.0 * np.pi * np.asarray(target_phase, float)
            self.ephi = np.ascontiguousarray(np.exp(-1j * phi[mask]))
        self.sum_tt = float(np.sum(self.tvals**2))
        self.mean_t = float(np.mean(self.tvals))
        self.var_t = float(np.mean((self.tvals - self.mean_t) ** 2))

    def error_from_sums(self, sums) -> float:
        s_a, s_aa, s_ta, s_rr, s_dd = sums
        m = self.count
        cfg = self.cfg
        if cfg.kind is MetricKind.MSE:
            if not cfg.scale_free:
                return s_dd / m
            ss = s_rr if cfg.phase_sensitive else s_aa
            g = max(s_ta / ss, 0.0) if ss > 0 else 1.0
            return max(self.sum_tt - 2 * g * s_ta + g * g * ss, 0.0) / m
        mu_c = s_a / m
        var_c = max(s_aa / m - mu_c * mu_c, 0.0)
        cov = s_ta / m - self.mean_t * mu_c
        c1, c2 = cfg.c1, cfg.c2
        value = ((2 * self.mean_t * mu_c + c1) * (2 * cov + c2)) / (
            (self.mean_t**2 + mu_c**2 + c1) * (self.var_t + var_c + c2)
        )
        return 1.0 - value


def loglog_slope(values) -> float:
    """Least-squares slope of log(value) against log(n), n = 1..len(values)."""
    y = np.log(np.asarray(values, dtype=np.float64))
    x = np.log(np.arange(1, y.size + 1, dtype=np.float64))
    return float(np.polyfit(x, y, 1)[0])
