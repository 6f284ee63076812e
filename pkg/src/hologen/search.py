"""Holographic search: direct search and simulated annealing.

Every evaluation proposes one pixel change.  Because the forward transform
is linear, changing aperture pixel (x, y) by ``delta`` changes every replay
pixel by ``delta * exp(-2 pi i (u x / Nx + v y / Ny)) / sqrt(Nx Ny)``, so a
trial costs O(Nx Ny) instead of a full FFT.  The cached replay is rebuilt
with a full transform every ``resync_interval`` accepted changes to bound
floating-point drift; single-precision replays additionally carry a
low-order correction term so accumulated updates do not lose bits.

Random streams are split by purpose (initial guess, proposals, acceptance
draws), so direct search and annealing with the same seed see the same
proposals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .field import ComplexField, Domain, Precision, spawn_rngs
from .metrics import MaskedTarget, MetricConfig, MetricKind
from .propagation import Propagator
from .quantise import SlmSpec, allowed_states, quantise_array, states_from_levels
from .report import RunReport, metric_trace_append
from .target import TargetSpec
from .timing import NULL_TIMER, clock
from .variants import Variant

__all__ = [
    "SearchConfig",
    "IncrementalReplayState",
    "incremental_update",
    "run_direct_search",
    "run_simulated_annealing",
    "run_search",
    "initial_levels",
    "default_decay",
]

PIXEL_ORDERS = ("UniformRandom", "RasterSweep")
INITS = ("QuantisedIfft", "RandomStates")
_BLOCK = 4096


def default_decay(max_evaluations: int) -> float:
    """Geometric factor taking the temperature down six decades over the budget."""
    return 10.0 ** (-6.0 / max_evaluations)


@dataclass(frozen=True, eq=False)
class SearchConfig:
    variant: Variant
    max_evaluations: int
    slm: SlmSpec
    target: TargetSpec
    metric: MetricConfig | None = None
    seed: int = 0
    pixel_order: str = "UniformRandom"
    sa_t0: float | None = None
    sa_decay: float | None = None
    init: str = "QuantisedIfft"
    resync_interval: int = 1000
    trace_every: int = 100

    def __post_init__(self):
        variant = Variant.parse(self.variant)
        if variant.family != "search":
            raise ValueError(f"{variant.value} is not a search variant")
        object.__setattr__(self, "variant", variant)
        if int(self.max_evaluations) != self.max_evaluations or self.max_evaluations < 1:
            raise ValueError("max_evaluations must be an integer >= 1")
        if self.pixel_order not in PIXEL_ORDERS:
            raise ValueError(f"pixel_order must be one of {PIXEL_ORDERS}")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}")
        if self.resync_interval < 1 or self.trace_every < 1:
            raise ValueError("resync_interval and trace_every must be >= 1")
        if variant is Variant.SIMULATED_ANNEALING:
            if self.sa_t0 is None or not self.sa_t0 > 0 or not math.isfinite(self.sa_t0):
                raise ValueError("sa_t0 must be a finite temperature > 0")
            if self.sa_decay is None:
                object.__setattr__(self, "sa_decay", default_decay(self.max_evaluations))
            if not 0 < self.sa_decay < 1:
                raise ValueError("sa_decay must be in (0, 1)")
        elif self.sa_t0 is not None or self.sa_decay is not None:
            raise ValueError("sa_t0/sa_decay are only valid for SimulatedAnnealing")
        if self.metric is None:
            object.__setattr__(self, "metric", self.target.metric_config())


class IncrementalReplayState:
    """Constrained hologram with its cached replay and cached error.

    Owned by a single run; not thread safe.
    """

    def __init__(self, levels: np.ndarray, slm: SlmSpec, target: MaskedTarget,
                 propagator: Propagator | None = None, precision: Precision = Precision.F64,
                 resync_interval: int = 1000):
        self.slm = slm
        self.target = target
        self.propagator = propagator or Propagator()
        self.dtype = precision.complex_dtype
        self.resync_interval = resync_interval
        self.levels = np.array(levels, dtype=np.int32)
        self.hologram = np.ascontiguousarray(states_from_levels(self.levels, slm, self.dtype))
        ny, nx = self.hologram.shape
        self.states = allowed_states(slm)
        self.illumination = slm.illumination
        self.scale = 1.0 / math.sqrt(nx * ny)
        self.aperture_phase = self.propagator.aperture_phase((ny, nx), np.complex128)
        self.wx = np.exp(-2j * np.pi * np.arange(nx) / nx)
        self.wy = np.exp(-2j * np.pi * np.arange(ny) / ny)
        self.accepted = 0
        self.resync()

    @property
    def shape(self):
        return self.hologram.shape

    def resync(self) -> None:
        """Replace the cached replay by a full transform and recompute the error."""
        self.replay = np.ascontiguousarray(self.propagator.forward(self.hologram), dtype=self.dtype)
        # below double precision the cached replay is the high half of a float-float sum
        self.replay_lo = None if self.dtype == np.complex128 else np.zeros_like(self.replay)
        self.cached_error = self.target.error_from_sums(self._sums(0.0, 0, 0))

    def value(self, x: int, y: int, level: int) -> complex:
        v = self.states[level]
        if self.illumination is not None:
            v = v * self.illumination[y, x]
        return complex(self.dtype.type(v))

    def _delta(self, x, y, level) -> complex:
        d = self.value(x, y, level) - complex(self.hologram[y, x])
        if self.aperture_phase is not None:
            d *= complex(self.aperture_phase[y, x])
        return d * self.scale

    def _sums(self, d, x, y):
        t = self.target
        return kernels.trial_sums(self.replay, self.replay_lo, d.real, d.imag, x, y, self.wx, self.wy,
                                  t.mv, t.mu, t.tvals, t.ephi)

    def trial_error(self, x: int, y: int, level: int) -> float:
        return self.target.error_from_sums(self._sums(self._delta(x, y, level), x, y))

    def commit(self, x: int, y: int, level: int, error: float | None = None) -> None:
        d = self._delta(x, y, level)
        if error is None:
            error = self.target.error_from_sums(self._sums(d, x, y))
        kernels.commit_update(self.replay, self.replay_lo, d.real, d.imag, x, y, self.wx, self.wy)
        self.hologram[y, x] = self.value(x, y, level)
        self.levels[y, x] = level
        self.cached_error = error
        self.accepted += 1
        if self.accepted % self.resync_interval == 0:
            self.resync()

    def level_of(self, x: int, y: int, value: complex) -> int:
        """Level index whose displayed value matches ``value``; raises if none does."""
        candidates = np.array([self.value(x, y, k) for k in range(self.slm.levels)])
        dist = np.abs(candidates - complex(value))
        k = int(np.argmin(dist))
        if dist[k] > 1e-6 * max(1.0, abs(value)):
            raise ValueError(f"value {value} is not an allowed state at ({x}, {y})")
        return k


def incremental_update(state: IncrementalReplayState, x: int, y: int, new_value: complex) -> IncrementalReplayState:
    """Set hologram pixel (x, y) to an allowed value, updating replay and error in O(Nx Ny)."""
    ny, nx = state.shape
    if not (0 <= x < nx and 0 <= y < ny):
        raise IndexError(f"pixel ({x}, {y}) outside {nx}x{ny} hologram")
    level = state.level_of(x, y, new_value)
    if level != state.levels[y, x]:
        state.commit(x, y, level)
    return state


def initial_levels(cfg: SearchConfig, rng: np.random.Generator, propagator: Propagator, precision: Precision) -> np.ndarray:
    target = cfg.target
    shape = target.shape
    if cfg.init == "RandomStates":
        return rng.integers(0, cfg.slm.levels, size=shape).astype(np.int32)
    amp = target.amplitude.data.astype(np.float64)
    if not target.freedoms.phase and target.phase is not None:
        theta = target.phase_radians()
    else:
        theta = 2.0 * np.pi * rng.random(shape)
    seeded = (amp * np.exp(1j * theta)).astype(precision.complex_dtype)
    _, levels = quantise_array(propagator.inverse(seeded), cfg.slm)
    return levels


def _loss_name(metric: MetricConfig) -> str:
    return "mse" if metric.kind is MetricKind.MSE else "ssim_loss"


def run_search(cfg: SearchConfig, propagator: Propagator | None = None,
               precision: Precision = Precision.F64, timer=NULL_TIMER) -> RunReport:
    """Direct search or simulated annealing, depending on ``cfg.variant``.

    The trace records the current loss (MSE, or 1 - SSIM) at evaluation 0,
    at every acceptance and every ``trace_every`` evaluations.  Annealing
    also records the best-so-far loss and returns the best hologram.
    """
    prop = propagator or Propagator()
    annealing = cfg.variant is Variant.SIMULATED_ANNEALING
    rng_init, rng_prop, rng_acc = spawn_rngs(cfg.seed, 3)
    target_phase = None if cfg.target.phase is None else cfg.target.phase.data
    masked = MaskedTarget(cfg.target.amplitude.data, cfg.metric, target_phase)

    start = clock()
    levels = initial_levels(cfg, rng_init, prop, precision)
    t0 = clock()
    state = IncrementalReplayState(levels, cfg.slm, masked, prop, precision, cfg.resync_interval)
    timer.add("transform", clock() - t0)

    name = _loss_name(cfg.metric)
    report = RunReport(algorithm=cfg.variant.value, metric=f"{name}_best" if annealing else name)
    metric_trace_append(report, 0, state.cached_error, name)
    best_error = state.cached_error
    best_levels = state.levels.copy()
    if annealing:
        metric_trace_append(report, 0, best_error, f"{name}_best")

    ny, nx = state.shape
    n_pix, n_levels = nx * ny, cfg.slm.levels
    raster = cfg.pixel_order == "RasterSweep"
    accepted_at = []
    update_time = 0.0
    for e in range(cfg.max_evaluations):
        j = e % _BLOCK
        if j == 0:
            block = min(_BLOCK, cfg.max_evaluations - e)
            if not raster:
                pixels = rng_prop.integers(0, n_pix, size=block)
            offsets = rng_prop.integers(1, n_levels, size=block)
            if annealing:
                draws = rng_acc.random(block)
        idx = e % n_pix if raster else int(pixels[j])
        y, x = divmod(idx, nx)
        level = (int(state.levels[y, x]) + int(offsets[j])) % n_levels

        t1 = clock()
        err = state.trial_error(x, y, level)
        update_time += clock() - t1
        delta = err - state.cached_error
        if delta < 0:
            accept = True
        elif annealing:
            accept = draws[j] < _acceptance_probability(delta, cfg.sa_t0 * cfg.sa_decay**e)
        else:
            accept = False

        if accept:
            t1 = clock()
            state.commit(x, y, level, err)
            update_time += clock() - t1
            accepted_at.append(e + 1)
            if state.cached_error < best_error:
                best_error = state.cached_error
                if annealing:
                    best_levels = state.levels.copy()
        if accept or (e + 1) % cfg.trace_every == 0 or e + 1 == cfg.max_evaluations:
            metric_trace_append(report, e + 1, state.cached_error, name)
            if annealing:
                metric_trace_append(report, e + 1, best_error, f"{name}_best")
    timer.add("update", update_time)

    final_levels = best_levels if annealing else state.levels
    hologram = states_from_levels(final_levels, cfg.slm, precision.complex_dtype)
    t1 = clock()
    replay = prop.forward(hologram)
    timer.add("transform", clock() - t1)
    report.timings["compute"] = clock() - start
    report.hologram = ComplexField(hologram, Domain.APERTURE)
    report.replay = ComplexField(replay, Domain.REPLAY)
    report.levels = final_levels.copy()
    report.extras.update(evaluations=cfg.max_evaluations, acceptances=len(accepted_at),
                         accepted_at=accepted_at, final_error=best_error if annealing else state.cached_error)
    return report


def _acceptance_probability(delta: float, temperature: float) -> float:
    """exp(-delta / T) for delta >= 0, robust to T underflowing to zero."""
    if delta <= 0:
        return 1.0
    if temperature <= 0:
        return 0.0
    return math.exp(-min(delta / temperature, 1e300))


def run_direct_search(cfg: SearchConfig, propagator=None, precision=Precision.F64, timer=NULL_TIMER) -> RunReport:
    if cfg.variant is not Variant.DIRECT_SEARCH:
        raise ValueError(f"config variant {cfg.variant.value} is not DirectSearch")
    return run_search(cfg, propagator, precision, timer)


def run_simulated_annealing(cfg: SearchConfig, propagator=None, precision=Precision.F64, timer=NULL_TIMER) -> RunReport:
    if cfg.variant is not Variant.SIMULATED_ANNEALING:
        raise ValueError(f"config variant {cfg.variant.value} is not SimulatedAnnealing")
    return run_search(cfg, propagator, precision, timer)
