"""Run reports: final fields, metric traces and CSV export."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .field import ComplexField

__all__ = ["RunReport", "TraceOrderError", "metric_trace_append", "trace_to_csv", "trace_from_csv"]

CSV_HEADER = ("iteration", "metric", "value")


class TraceOrderError(ValueError):
    pass


@dataclass(eq=False)
class RunReport:
    algorithm: str = ""
    metric: str = "mse"
    hologram: ComplexField | None = None
    replay: ComplexField | None = None
    levels: np.ndarray | None = None
    traces: dict[str, list[tuple[int, float]]] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def trace(self) -> list[tuple[int, float]]:
        return self.traces.get(self.metric, [])

    def values(self, metric: str | None = None) -> list[float]:
        return [v for _, v in self.traces.get(metric or self.metric, [])]

    @property
    def final_metric(self) -> float:
        return self.trace[-1][1] if self.trace else float("nan")


def metric_trace_append(report: RunReport, iteration: int, value: float, metric: str | None = None) -> RunReport:
    """Append ``(iteration, value)`` to a named series; iterations must increase strictly."""
    name = metric or report.metric
    series = report.traces.setdefault(name, [])
    if series and iteration <= series[-1][0]:
        raise TraceOrderError(
            f"iteration {iteration} is not after {series[-1][0]} in trace {name!r}"
        )
    series.append((int(iteration), float(value)))
    return report


def trace_to_csv(report: RunReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for name, series in report.traces.items():
        for it, value in series:
            writer.writerow((it, name, repr(value)))
    return buf.getvalue()


def trace_from_csv(text: str) -> dict[str, list[tuple[int, float]]]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_HEADER:
        raise ValueError(f"unexpected trace header {header}")
    out: dict[str, list[tuple[int, float]]] = {}
    for it, name, value in reader:
        out.setdefault(name, []).append((int(it), float(value)))
    return out
