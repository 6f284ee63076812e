"""Benchmarks: FFT pair scaling, per-phase runtime breakdown, compiled vs numpy kernels.

Timing uses the monotonic ``perf_counter``.  FFT benchmarks pin the
backend to one thread unless asked otherwise and record the thread count.
"""
from __future__ import annotations

import csv
import io
import math
import statistics
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .algorithms import run_algorithm
from .field import Precision, make_rng
from .ifta import IftaConfig
from .metrics import MaskedTarget, MetricConfig
from .ospr import OsprConfig
from .propagation import Propagator, ScipyBackend, use_backend
from .quantise import SlmSpec, allowed_states
from .search import SearchConfig
from .target import Freedoms, TargetSpec
from .timing import PhaseTimer, clock
from .variants import Variant

__all__ = [
    "BenchResult",
    "bench_fft_scaling",
    "bench_phase_breakdown",
    "bench_kernels",
    "fft_model_ratio",
    "fft_model_curve",
    "results_to_csv",
    "results_from_csv",
    "standard_config",
    "kernel_speedups",
]

CSV_FIELDS = ("label", "resolution", "repetitions", "pairs", "threads", "mean_seconds",
              "sigma_seconds", "two_sigma_seconds", "model_seconds", "breakdown", "samples")
MIN_SIZE, MAX_SIZE = 64, 4096
WARMUP_PAIRS = 2
RESOLUTION_FACTOR = 100


@dataclass(frozen=True)
class BenchResult:
    """One benchmark row.

    ``samples`` are the per-run mean times; ``sigma_seconds`` is their
    sample standard deviation (0 when fewer than two runs).
    """

    label: str
    resolution: int
    repetitions: int
    mean_seconds: float
    sigma_seconds: float
    breakdown: dict = field(default_factory=dict)
    pairs: int = 0
    threads: int = 1
    samples: tuple = ()

    @property
    def two_sigma(self) -> float:
        return 2.0 * self.sigma_seconds


def _summarise(samples) -> tuple[float, float]:
    samples = [float(s) for s in samples]
    mean = statistics.fmean(samples)
    sigma = statistics.stdev(samples) if len(samples) >= 2 else 0.0
    return mean, sigma


def fft_model_ratio(n_small: int, n_large: int) -> float:
    """Runtime ratio predicted by the N^2 log N model."""
    return (n_large**2 * math.log(n_large)) / (n_small**2 * math.log(n_small))


def fft_model_curve(results) -> dict[int, float]:
    """N^2 log N reference anchored at the smallest measured size."""
    if not results:
        return {}
    base = min(results, key=lambda r: r.resolution)
    return {r.resolution: base.mean_seconds * fft_model_ratio(base.resolution, r.resolution) for r in results}


def _check_sizes(sizes):
    sizes = [int(s) for s in sizes]
    if not sizes:
        raise ValueError("no sizes given")
    for s in sizes:
        if s < MIN_SIZE or s > MAX_SIZE or s & (s - 1):
            raise ValueError(f"size {s} must be a power of two in [{MIN_SIZE}, {MAX_SIZE}]")
    return sizes


def bench_fft_scaling(sizes, runs: int = 100, pairs_per_run: int = 1000, threads: int = 1,
                      precision: Precision = Precision.F64, seed: int = 0) -> list[BenchResult]:
    """Time forward+inverse transform pairs per size; ``runs`` repetitions of ``pairs_per_run`` pairs.

    Sizes that cannot be allocated are skipped with a warning.  If one run
    would be shorter than 100 timer ticks the pair count is raised.
    """
    sizes = _check_sizes(sizes)
    if runs < 2:
        raise ValueError("runs must be >= 2")
    if pairs_per_run < 1:
        raise ValueError("pairs_per_run must be >= 1")
    resolution = time.get_clock_info("perf_counter").resolution
    backend = ScipyBackend(threads)
    rng = make_rng(seed)
    results = []
    with use_backend(backend):
        for n in sizes:
            try:
                x = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))).astype(precision.complex_dtype)
            except MemoryError:
                warnings.warn(f"skipping {n}x{n}: allocation failed", RuntimeWarning, stacklevel=2)
                continue
            try:
                t0 = clock()
                for _ in range(WARMUP_PAIRS):
                    x = backend.inverse(backend.forward(x))
                pilot = (clock() - t0) / WARMUP_PAIRS
            except MemoryError:
                warnings.warn(f"skipping {n}x{n}: allocation failed", RuntimeWarning, stacklevel=2)
                continue
            pairs = pairs_per_run
            if pilot * pairs < RESOLUTION_FACTOR * resolution:
                pairs = math.ceil(RESOLUTION_FACTOR * resolution / max(pilot, resolution))
            samples = []
            for _ in range(runs):
                t0 = clock()
                for _ in range(pairs):
                    x = backend.inverse(backend.forward(x))
                samples.append((clock() - t0) / pairs)
            mean, sigma = _summarise(samples)
            results.append(BenchResult(f"fft{n}", n, runs, mean, sigma, {}, pairs, backend.threads, tuple(samples)))
    return results


def _bench_target(resolution: int, half_plane: bool) -> TargetSpec:
    """Smooth pseudo-random picture; in the upper half of the replay when ``half_plane``."""
    rng = make_rng(0)
    rows = resolution // 2 if half_plane else resolution
    img = rng.random((rows, resolution))
    for axis in (0, 1):
        img = (img + np.roll(img, 1, axis) + np.roll(img, -1, axis)) / 3.0
    img = img / img.max()
    if not half_plane:
        return TargetSpec(np.fft.ifftshift(img))
    full = np.zeros((resolution, resolution))
    full[:rows] = img
    roi = np.zeros((resolution, resolution), bool)
    roi[:rows] = True
    return TargetSpec(np.fft.ifftshift(full), roi=np.fft.ifftshift(roi), freedoms=Freedoms(scale=True))


def standard_config(variant, resolution: int, budget: int | None = None, seed: int = 0):
    """Algorithm config on a synthetic target, as used by the breakdown benchmark.

    IFTA runs a 256-level phase SLM for ``budget`` iterations (default 50);
    search and time-averaged runs use a binary phase SLM on a half-plane
    target, with ``budget`` evaluations (default 10 per pixel) or subframes
    (default 24).
    """
    variant = Variant.parse(variant)
    if variant.family == "ifta":
        slm = SlmSpec("phase", 256, 0.0, 2 * math.pi, full_circle=True)
        return IftaConfig(variant, budget or 50, slm, _bench_target(resolution, False), seed=seed)
    binary = SlmSpec("phase", 2, 0.0, math.pi)
    target = _bench_target(resolution, True)
    if variant.family == "search":
        extra = {"sa_t0": 1e-4} if variant is Variant.SIMULATED_ANNEALING else {}
        return SearchConfig(variant, budget or 10 * resolution * resolution, binary, target, seed=seed, **extra)
    return OsprConfig(variant, budget or 24, binary, target, seed=seed)


def bench_phase_breakdown(algorithm, resolution: int | None = None, repetitions: int = 1,
                          precision: Precision = Precision.F64, budget: int | None = None) -> BenchResult:
    """Fraction of compute time per phase (transform, constraint, update, other).

    ``algorithm`` is a config, or a variant name built with
    :func:`standard_config` at ``resolution``.
    """
    if isinstance(algorithm, (str, Variant)):
        if resolution is None:
            raise ValueError("resolution is required when algorithm is given by name")
        cfg = standard_config(algorithm, resolution, budget)
    else:
        cfg = algorithm
        if resolution is not None and cfg.target.shape != (resolution, resolution):
            raise ValueError(f"config target is {cfg.target.shape}, not {resolution}x{resolution}")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    ny, nx = cfg.target.shape
    timer = PhaseTimer()
    samples = []
    for _ in range(repetitions):
        report = run_algorithm(cfg, Propagator(), precision, timer)
        samples.append(report.timings["compute"])
    mean, sigma = _summarise(samples)
    breakdown = timer.fractions(math.fsum(samples))
    return BenchResult(f"breakdown:{cfg.variant.value}", max(nx, ny), repetitions, mean, sigma,
                       breakdown, 0, 1, tuple(samples))


def _kernel_cases(size: int, seed: int):
    rng = make_rng(seed)
    n = size
    hologram = np.where(rng.random((n, n)) < 0.5, 1.0, -1.0).astype(np.complex128)
    replay = np.ascontiguousarray(np.fft.fft2(hologram, norm="ortho"))
    target = rng.random((n, n))
    masked = MaskedTarget(target, MetricConfig())
    wx = np.exp(-2j * np.pi * np.arange(n) / n)
    field_ = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    theta = np.arctan2(field_.imag, field_.real)
    slm = SlmSpec("phase", 256, 0.0, 2 * math.pi, full_circle=True)
    table = allowed_states(slm)
    ones = np.ones((n, n), np.uint8)
    pixels = rng.integers(0, n, size=(64, 2))

    def trial(mod):
        for x, y in pixels:
            mod.trial_sums(replay, None, 0.01, -0.02, int(x), int(y), wx, wx,
                           masked.mv, masked.mu, masked.tvals, None)

    def commit(mod):
        r = replay.copy()
        for x, y in pixels:
            mod.commit_update(r, None, 0.01, -0.02, int(x), int(y), wx, wx)

    def quantise(mod):
        mod.phase_quantise(theta, None, table, 0.0, slm.spacing, slm.span, slm.levels, True)

    def enforce(mod):
        mod.enforce_amplitude(field_.copy(), target, ones, None, ones, target)

    # calls per case, so times are reported per call
    return {"trial_sums": (trial, len(pixels)), "commit_update": (commit, len(pixels)),
            "phase_quantise": (quantise, 1), "enforce_amplitude": (enforce, 1)}


def bench_kernels(size: int = 256, runs: int = 5, seed: int = 0) -> list[BenchResult]:
    """Per-call time of each hot kernel, compiled and numpy, on the same inputs."""
    if runs < 2:
        raise ValueError("runs must be >= 2")
    impls = ["python"]
    if kernels.COMPILED:
        impls.insert(0, "compiled")
    cases = _kernel_cases(size, seed)
    results = []
    for impl in impls:
        mod = kernels.implementation(impl)
        for name, (fn, calls) in cases.items():
            fn(mod)
            samples = []
            for _ in range(runs):
                t0 = clock()
                fn(mod)
                samples.append((clock() - t0) / calls)
            mean, sigma = _summarise(samples)
            results.append(BenchResult(f"{impl}:{name}", size, runs, mean, sigma, {}, calls, 1, tuple(samples)))
    return results


def kernel_speedups(results) -> dict[str, float]:
    """numpy time / compiled time per kernel, for kernels measured both ways."""
    by_label = {r.label: r.mean_seconds for r in results}
    out = {}
    for label, t in by_label.items():
        impl, _, name = label.partition(":")
        if impl == "compiled" and f"python:{name}" in by_label and t > 0:
            out[name] = by_label[f"python:{name}"] / t
    return out


def _encode_breakdown(b: dict) -> str:
    return ";".join(f"{k}={v!r}" for k, v in b.items())


def _decode_breakdown(text: str) -> dict:
    out = {}
    for item in filter(None, text.split(";")):
        k, _, v = item.partition("=")
        out[k] = float(v)
    return out


def results_to_csv(results, path=None) -> str:
    """CSV text (written to ``path`` if given); floats use repr so parsing is exact."""
    model = fft_model_curve([r for r in results if r.label.startswith("fft")])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in results:
        m = model.get(r.resolution) if r.label.startswith("fft") else None
        w.writerow([r.label, r.resolution, r.repetitions, r.pairs, r.threads, repr(r.mean_seconds),
                    repr(r.sigma_seconds), repr(r.two_sigma), "" if m is None else repr(m),
                    _encode_breakdown(r.breakdown), ";".join(repr(s) for s in r.samples)])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def results_from_csv(text: str) -> list[BenchResult]:
    rows = csv.DictReader(io.StringIO(text))
    if tuple(rows.fieldnames or ()) != CSV_FIELDS:
        raise ValueError(f"unexpected benchmark CSV header {rows.fieldnames}")
    out = []
    for row in rows:
        samples = tuple(float(s) for s in row["samples"].split(";") if s)
        out.append(BenchResult(row["label"], int(row["resolution"]), int(row["repetitions"]),
                               float(row["mean_seconds"]), float(row["sigma_seconds"]),
                               _decode_breakdown(row["breakdown"]), int(row["pairs"]),
                               int(row["threads"]), samples))
    return out
