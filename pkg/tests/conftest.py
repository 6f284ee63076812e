import math
import sys

import numpy as np
import pytest
from PIL import Image

from hologen.propagation import ifftshift
from hologen.quantise import SlmSpec
from hologen.target import Freedoms, TargetSpec

TWO_PI = 2.0 * math.pi


def naive_dft(f: np.ndarray, sign: int = -1) -> np.ndarray:
    """Direct double sum F[v,u] = sum_{y,x} f[y,x] exp(sign 2 pi i (ux/Nx + vy/Ny)) / sqrt(Nx Ny)."""
    ny, nx = f.shape
    out = np.zeros((ny, nx), dtype=np.complex128)
    ys, xs = np.mgrid[0:ny, 0:nx]
    for v in range(ny):
        for u in range(nx):
            phase = sign * 2j * np.pi * (u * xs / nx + v * ys / ny)
            out[v, u] = np.sum(f * np.exp(phase))
    return out / math.sqrt(nx * ny)


def random_field(rng, shape, dtype=np.complex128):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)).astype(dtype)


def checkerboard(n=64, cell=8):
    y, x = np.mgrid[0:n, 0:n]
    return (((y // cell) + (x // cell)) % 2).astype(float)


def letter_a(n=64):
    """Block capital A drawn on an n x n canvas (display layout)."""
    img = np.zeros((n, n))
    s = n / 64.0
    top, bottom = int(12 * s), int(52 * s)
    for row in range(top, bottom):
        frac = (row - top) / (bottom - top)
        half = int((4 + 16 * frac) * s)
        c = n // 2
        w = max(1, int(4 * s))
        img[row, c - half:c - half + w] = 1.0
        img[row, c + half - w:c + half] = 1.0
    bar = int(36 * s)
    img[bar:bar + max(1, int(4 * s)), n // 2 - int(12 * s):n // 2 + int(12 * s)] = 1.0
    return img


def spot_array(n=64):
    """16 equal spots on the grid {4, 12, 52, 60}^2 (transform layout, off the DC pixel)."""
    img = np.zeros((n, n))
    coords = [4, 12, 52, 60]
    for y in coords:
        for x in coords:
            img[y, x] = 1.0
    return img


def natural_like(n=128, seed=7):
    """Smooth random texture with one bright disc, values in [0, 1] (display layout)."""
    from scipy import ndimage

    rng = np.random.default_rng(seed)
    img = ndimage.gaussian_filter(rng.random((n // 2, n)), 3)
    img = (img - img.min()) / (img.max() - img.min())
    yy, xx = np.mgrid[:n // 2, :n]
    img[(yy - 30 * n // 128) ** 2 + (xx - 40 * n // 128) ** 2 < 150 * (n / 128) ** 2] = 1.0
    full = np.zeros((n, n))
    full[:n // 2] = img
    return full


def half_plane_target(display: np.ndarray) -> TargetSpec:
    """Binary-phase replays are point symmetric, so only the top half of the display is scored."""
    n = display.shape[0]
    roi = np.zeros(display.shape, bool)
    roi[:n // 2] = True
    return TargetSpec(ifftshift(display), roi=ifftshift(roi), freedoms=Freedoms(scale=True))


def search_instance_16():
    """16x16 binary-phase instance shared by the search tests and acceptance study."""
    disp = np.zeros((16, 16))
    disp[2:6, 3:13] = 1.0
    disp[3:7, 6:9] = 0.5
    return half_plane_target(disp), binary_phase()


def ospr_instance_128():
    return half_plane_target(natural_like(128)), binary_phase()


def binary_phase():
    return SlmSpec("phase", 2, 0.0, math.pi)


def phase_256():
    return SlmSpec("phase", 256, 0.0, TWO_PI, full_circle=True)


def save_gray(path, data):
    Image.fromarray(np.asarray(data, dtype=np.uint8), mode="L").save(path)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


JOB_ALGORITHMS = {
    "GS": "GS: {iterations: 6, seed: 3}",
    "WeightedGS": "WeightedGS: {iterations: 6, seed: 3}",
    "LiuTaghizadeh": "LiuTaghizadeh: {iterations: 6, seed: 3, initial_fraction: 0.2}",
    "DirectSearch": "DirectSearch: {evaluations: 400, seed: 3}",
    "SimulatedAnnealing": "SimulatedAnnealing: {evaluations: 400, seed: 3, t0: 0.001}",
    "OSPR": "OSPR: {subframes: 3, seed: 3}",
    "AdaptiveOSPR": "AdaptiveOSPR: {subframes: 3, seed: 3, feedback_gain: 1.0}",
}


def write_job(directory, name, algorithm="GS", slm="{mode: phase, levels: 2, min_arg: 0.0, max_arg: 3.141592653589793}",
              extra="", size=32):
    """Job file plus a letter-A target image in ``directory``; returns the job path."""
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    image = directory / "target.png"
    if not image.exists():
        save_gray(image, letter_a(size) * 255)
    algo = JOB_ALGORITHMS.get(algorithm, algorithm)
    text = (
        "schema_version: 1\n"
        f"algorithm:\n  {algo}\n"
        f"slm: {slm}\n"
        "target: {image: target.png}\n"
        f"io: {{output: out_{name}}}\n"
        f"{extra}"
    )
    path = directory / f"{name}.yaml"
    path.write_text(text)
    return path


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 13):
        terminalreporter.write_line(acceptance.RESULTS.get(n, f"criterion {n:2d} FAIL  (did not complete)"))
