"""Command-line front end: ``generate``, ``batch``, ``metrics`` and ``bench``.

Exit status is 0 on success, 1 for invalid configuration or input and 2
when a run fails.  Artifacts of a job are staged in a hidden directory and
moved into place only after every one of them was written, so a failing
job leaves nothing behind.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import shutil
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import bench as benchmod
from .algorithms import run_algorithm
from .config import ConfigError, JobConfig, build_algorithm, load_config
from .field import Normalization, RegionMask, load_mask, load_phase, load_target, read_field, write_field
from .metrics import MetricConfig, MetricKind, evaluate
from .plotting import fft_scaling_plot_script, trace_plot_script, write_script
from .propagation import fftshift, ifftshift
from .quantise import levels_to_gray
from .report import trace_to_csv
from .variants import Variant

__all__ = ["main", "generate_job", "JobResult", "format_value"]

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
SUMMARY_FIELDS = ("job", "status", "final_metric", "seconds", "message")


@dataclass(frozen=True)
class JobResult:
    job: str
    status: str
    final_metric: float | None
    seconds: float
    message: str = ""
    artifacts: tuple = ()

    @property
    def exit_code(self) -> int:
        return {"ok": EXIT_OK, "config-error": EXIT_CONFIG}.get(self.status, EXIT_RUNTIME)


def format_value(v: float) -> str:
    """Nine significant digits; values indistinguishable from zero print as 0.000000000."""
    if abs(v) < 1e-15:
        return "0.000000000"
    return f"{v:#.9g}"


def _png(path: Path, gray: np.ndarray) -> None:
    Image.fromarray(np.ascontiguousarray(gray, dtype=np.uint8), mode="L").save(path)


def _write_replay_png(stage: Path, name: str, replay: np.ndarray) -> list[str]:
    mag = np.abs(fftshift(replay)).astype(np.float64)
    peak = float(mag.max())
    scaled = mag / peak * 255.0 if peak > 0 else mag
    _png(stage / f"{name}_replay.png", np.floor(scaled + 0.5))
    (stage / f"{name}_replay_scale.txt").write_text(
        f"# |R| = gray * scale (image is centred)\nscale={peak / 255.0!r}\nmax_abs={peak!r}\n", encoding="utf-8")
    return [f"{name}_replay.png", f"{name}_replay_scale.txt"]


def _write_artifacts(job: JobConfig, cfg, report, stage: Path) -> list[str]:
    name, flags = job.job_name, job.io
    written = []
    frames = report.extras.get("frames")
    holograms = [(name, report.hologram.data, report.levels)]
    if frames is not None and len(frames) > 1:
        holograms = [(f"{name}_frame_{i:03d}", f, lev) for i, (f, lev) in enumerate(zip(frames.frames, frames.levels), 1)]
    for stem, holo, levels in holograms:
        if flags.hologram_png:
            _png(stage / f"{stem}_hologram.png", levels_to_gray(levels, cfg.slm))
            written.append(f"{stem}_hologram.png")
        if flags.field_dump:
            write_field(stage / f"{stem}_hologram.hgf", holo)
            written.append(f"{stem}_hologram.hgf")
    if flags.field_dump:
        write_field(stage / f"{name}_replay.hgf", report.replay.data)
        written.append(f"{name}_replay.hgf")
    if flags.replay_png:
        written += _write_replay_png(stage, name, report.replay.data)
    if flags.trace_csv or flags.plot:
        (stage / f"{name}_trace.csv").write_text(trace_to_csv(report), encoding="utf-8")
        written.append(f"{name}_trace.csv")
    if flags.plot:
        script = trace_plot_script(f"{name}_trace.csv", f"{name}_trace.png", sorted(report.traces),
                                   title=f"{name} ({report.algorithm})")
        write_script(stage / f"{name}_trace.gp", script)
        written.append(f"{name}_trace.gp")
    return written


def _publish(stage: Path, out: Path, names: list[str]) -> list[Path]:
    paths = []
    for n in names:
        os.replace(stage / n, out / n)
        paths.append(out / n)
    return paths


def generate_job(config_path, out=None) -> JobResult:
    """Validate, run and export one job; messages go to ``out`` (default stdout)."""
    out = sys.stdout if out is None else out
    config_path = Path(config_path)
    start = time.perf_counter()
    try:
        job = load_config(config_path)
        cfg, prop = build_algorithm(job)
    except ConfigError as exc:
        print(f"config error in {config_path}: {exc}", file=out)
        return JobResult(config_path.stem, "config-error", None, time.perf_counter() - start, str(exc))

    outdir = job.output_dir()
    created = not outdir.exists()
    stage = None
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        stage = Path(tempfile.mkdtemp(prefix=f".{job.job_name}-", dir=outdir))
        report = run_algorithm(cfg, prop, job.precision)
        names = _write_artifacts(job, cfg, report, stage)
        paths = _publish(stage, outdir, names)
    except Exception as exc:  # any failure of the run itself
        print(f"runtime error in {config_path}: {type(exc).__name__}: {exc}", file=out)
        if created:
            shutil.rmtree(outdir, ignore_errors=True)
        return JobResult(job.job_name, "failed", None, time.perf_counter() - start, f"{type(exc).__name__}: {exc}")
    finally:
        if stage is not None and stage.exists():
            shutil.rmtree(stage, ignore_errors=True)

    seconds = time.perf_counter() - start
    final = report.final_metric
    print(f"job={job.job_name}", file=out)
    print(f"algorithm={report.algorithm}", file=out)
    print(f"final_{report.metric}={format_value(final)}", file=out)
    print(f"runtime_seconds={report.timings['compute']:.6f}", file=out)
    for p in paths:
        print(f"wrote {p}", file=out)
    return JobResult(job.job_name, "ok", final, seconds, "", tuple(str(p) for p in paths))


def cmd_generate(args) -> int:
    return generate_job(args.config).exit_code


def _batch_worker(config_path: str, log_path: str) -> JobResult:
    buf = io.StringIO()
    result = generate_job(config_path, buf)
    Path(log_path).write_text(buf.getvalue(), encoding="utf-8")
    return result


def cmd_batch(args) -> int:
    root = Path(args.dir)
    configs = sorted(p for p in root.glob(args.pattern) if p.is_file())
    if not configs:
        print(f"no jobs matched {args.pattern!r} in {root}", file=sys.stderr)
        return EXIT_CONFIG
    if args.jobs < 1:
        print("--jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    logdir = Path(args.log_dir) if args.log_dir else root / "logs"
    logdir.mkdir(parents=True, exist_ok=True)
    logs = [str(logdir / f"{p.stem}.log") for p in configs]
    if args.jobs == 1:
        results = [_batch_worker(str(p), lg) for p, lg in zip(configs, logs)]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_batch_worker, [str(p) for p in configs], logs))

    summary = Path(args.summary) if args.summary else root / "batch_summary.csv"
    rows = []
    for p, r in zip(configs, results):
        metric = "" if r.final_metric is None else format_value(r.final_metric)
        rows.append({"job": p.stem, "status": r.status, "final_metric": metric,
                     "seconds": f"{r.seconds:.3f}", "message": r.message})
    with open(summary, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    width = max(len("job"), *(len(r["job"]) for r in rows))
    print(f"{'job':<{width}}  {'status':<12}  {'final_metric':>15}  {'seconds':>9}")
    for r in rows:
        print(f"{r['job']:<{width}}  {r['status']:<12}  {r['final_metric']:>15}  {r['seconds']:>9}")
    failed = sum(r.status != "ok" for r in results)
    print(f"{len(results) - failed}/{len(results)} jobs succeeded; summary in {summary}")
    return EXIT_OK if failed == 0 else (EXIT_RUNTIME if any(r.status == "failed" for r in results) else EXIT_CONFIG)


def _dims(shape) -> str:
    return f"{shape[1]}x{shape[0]}"


def cmd_metrics(args) -> int:
    shift = ifftshift if args.centered else (lambda a: a)
    try:
        target = shift(load_target(args.target, Normalization.parse(args.normalize)).data)
        replay = read_field(args.field).data
        mask = RegionMask(shift(load_mask(args.mask).data)) if args.mask else None
        phase = None
        if args.target_phase:
            phase = 2.0 * np.pi * shift(load_phase(args.target_phase).data)
        kinds = [MetricKind.parse(k.strip()) for k in args.metric.split(",") if k.strip()]
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    shapes = {"target": target.shape, "field": replay.shape}
    if mask is not None:
        shapes["mask"] = mask.shape
    if phase is not None:
        shapes["target phase"] = phase.shape
    if len(set(shapes.values())) > 1:
        report = ", ".join(f"{k} {_dims(v)}" for k, v in shapes.items())
        print(f"error: dimension mismatch: {report}", file=sys.stderr)
        return EXIT_CONFIG
    if args.phase_sensitive and phase is None:
        phase = np.zeros(target.shape)
    for kind in kinds:
        cfg = MetricConfig(kind, args.phase_sensitive, mask, args.scale_free)
        print(f"{cfg.name}={format_value(evaluate(target, replay, cfg, phase))}")
    return EXIT_OK


def _parse_sizes(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ValueError(f"sizes must be comma-separated integers, got {text!r}") from None


def cmd_bench(args) -> int:
    try:
        if args.bench == "fft":
            sizes = _parse_sizes(args.sizes)
            results = benchmod.bench_fft_scaling(sizes, args.runs, args.pairs, args.threads)
        elif args.bench == "breakdown":
            results = [benchmod.bench_phase_breakdown(args.algorithm, args.size, args.repetitions,
                                                      budget=args.budget)]
        else:
            results = benchmod.bench_kernels(args.size, args.runs)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else Path(f"bench_{args.bench}.csv")
    benchmod.results_to_csv(results, out)
    for r in results:
        line = f"{r.label:<28} n={r.resolution:<5} mean={r.mean_seconds:.6e}s 2sigma={r.two_sigma:.2e}s"
        if r.breakdown:
            line += " " + " ".join(f"{k}={v:.3f}" for k, v in r.breakdown.items())
        print(line)
    if args.bench == "kernels":
        for name, ratio in benchmod.kernel_speedups(results).items():
            print(f"speedup {name}: {ratio:.2f}x")
    print(f"wrote {out}")
    if getattr(args, "plot", False):
        script = out.with_suffix(".gp")
        write_script(script, fft_scaling_plot_script(out.name, out.with_suffix(".png").name))
        print(f"wrote {script}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hologen", description="Computer-generated hologram generation.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="run one job config")
    g.add_argument("config", help="YAML job file")
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("batch", help="run every job config in a directory")
    b.add_argument("dir")
    b.add_argument("--pattern", default="*.yaml", help="glob for job files (default *.yaml)")
    b.add_argument("--jobs", type=int, default=1, help="independent jobs to run at once")
    b.add_argument("--log-dir", help="per-job logs (default DIR/logs)")
    b.add_argument("--summary", help="summary CSV (default DIR/batch_summary.csv)")
    b.set_defaults(func=cmd_batch)

    m = sub.add_parser("metrics", help="score a replay field dump against a target image")
    m.add_argument("target", help="8-bit target image")
    m.add_argument("field", help="HGF1 replay dump (transform layout)")
    m.add_argument("--metric", default="mse", help="comma-separated: mse,ssim")
    m.add_argument("--mask", help="region-of-interest image; nonzero is inside")
    m.add_argument("--target-phase", help="8-bit target phase image, gray/256 of a turn")
    m.add_argument("--phase-sensitive", action="store_true")
    m.add_argument("--scale-free", action="store_true")
    m.add_argument("--normalize", default="MaxToOne", choices=[n.value for n in Normalization])
    m.add_argument("--no-centered", dest="centered", action="store_false",
                   help="images are already in transform layout (DC at the corner)")
    m.set_defaults(func=cmd_metrics)

    bench = sub.add_parser("bench", help="benchmarks")
    bsub = bench.add_subparsers(dest="bench", required=True)
    f = bsub.add_parser("fft", help="forward+inverse transform pair runtime per size")
    f.add_argument("--sizes", default="256,512,1024,2048")
    f.add_argument("--runs", type=int, default=100)
    f.add_argument("--pairs", type=int, default=1000)
    f.add_argument("--threads", type=int, default=1)
    f.add_argument("--out")
    f.add_argument("--plot", action="store_true", help="also write a gnuplot script")
    bd = bsub.add_parser("breakdown", help="per-phase time fractions of one algorithm")
    bd.add_argument("--algorithm", default="GS", choices=[v.value for v in Variant])
    bd.add_argument("--size", type=int, default=1024)
    bd.add_argument("--budget", type=int, help="iterations, evaluations or subframes")
    bd.add_argument("--repetitions", type=int, default=1)
    bd.add_argument("--out")
    k = bsub.add_parser("kernels", help="compiled vs pure-Python kernel timings")
    k.add_argument("--size", type=int, default=256)
    k.add_argument("--runs", type=int, default=5)
    k.add_argument("--out")
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
