"""gnuplot script emission; the data stays in CSV next to the script."""
from __future__ import annotations

from pathlib import Path

__all__ = ["trace_plot_script", "fft_scaling_plot_script", "write_script"]


def _quote(path) -> str:
    return "'" + str(path).replace("'", "''") + "'"


def trace_plot_script(csv_path, png_path, metrics, title: str = "", logy: bool = True) -> str:
    """Script plotting ``value`` against ``iteration`` for each named metric in a trace CSV."""
    lines = [
        "set terminal pngcairo size 800,600",
        f"set output {_quote(png_path)}",
        "set datafile separator ','",
        f"set title {_quote(title)}",
        "set xlabel 'iteration'",
        "set ylabel 'value'",
        "set key top right",
    ]
    if logy:
        lines.append("set logscale y")
    plots = [
        f"{_quote(csv_path)} using 1:(stringcolumn(2) eq {_quote(m)} ? $3 : 1/0) every ::1 with lines title {_quote(m)}"
        for m in metrics
    ]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def fft_scaling_plot_script(csv_path, png_path, title: str = "FFT pair runtime") -> str:
    """Log-log runtime per pair with 2-sigma error bars and the N^2 log N reference."""
    lines = [
        "set terminal pngcairo size 800,600",
        f"set output {_quote(png_path)}",
        "set datafile separator ','",
        f"set title {_quote(title)}",
        "set xlabel 'resolution (pixels per side)'",
        "set ylabel 'seconds per forward+inverse pair'",
        "set logscale xy",
        "set key top left",
        f"plot {_quote(csv_path)} using 2:6:8 every ::1 with yerrorbars title 'measured (2 sigma)', \\",
        f"     {_quote(csv_path)} using 2:9 every ::1 with lines title 'N^2 log N model'",
    ]
    return "\n".join(lines) + "\n"


def write_script(path, text: str) -> Path:
    path = Path(path)
    path.write_text(text, encoding="utf-8")
    return path
