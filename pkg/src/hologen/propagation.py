"""Unitary 2-D DFTs between aperture and replay planes, and Fresnel propagation.

The forward transform uses the negative exponent and the inverse the
positive one, both scaled by ``1/sqrt(Nx*Ny)``.  The DC term sits at index
``(0, 0)``; :func:`fftshift` is a display step only.

Backends are pluggable.  Anything with ``forward(a)`` and ``inverse(a)``
honouring that normalization contract on 2-D complex arrays can be
installed with :func:`set_backend` or :func:`use_backend`.
"""
from __future__ import annotations

import contextlib
import math
import os
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .field import ComplexField, Domain

__all__ = [
    "FFTBackend",
    "ScipyBackend",
    "NaiveDFTBackend",
    "get_backend",
    "set_backend",
    "use_backend",
    "thread_cap",
    "fft_forward",
    "fft_inverse",
    "FresnelParams",
    "quadratic_phase",
    "fresnel_forward",
    "fresnel_inverse",
    "fftshift",
    "ifftshift",
    "Propagator",
]


def thread_cap() -> int | None:
    """Upper bound on backend threads from ``HOLOGEN_THREADS`` (None if unset)."""
    raw = os.environ.get("HOLOGEN_THREADS")
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"HOLOGEN_THREADS must be an integer, got {raw!r}") from None
    return max(1, value)


class FFTBackend:
    name = "abstract"
    threads = 1

    def forward(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inverse(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class ScipyBackend(FFTBackend):
    """pocketfft through :mod:`scipy.fft`; keeps complex64 in complex64."""

    name = "scipy"

    def __init__(self, threads: int = 1):
        cap = thread_cap()
        threads = max(1, int(threads))
        self.threads = min(threads, cap) if cap else threads

    def forward(self, a):
        return scipy.fft.fft2(a, norm="ortho", workers=self.threads)

    def inverse(self, a):
        return scipy.fft.ifft2(a, norm="ortho", workers=self.threads)


def _dft_matrix(n: int, sign: int) -> np.ndarray:
    k = np.arange(n)
    # integer products reduced mod n keep the exponent exact
    return np.exp(sign * 2j * np.pi * ((np.outer(k, k) % n) / n))


class NaiveDFTBackend(FFTBackend):
    """Reference backend: explicit DFT matrices, O(N^3). For testing only."""

    name = "naive"

    def _apply(self, a, sign):
        ny, nx = a.shape
        wy = _dft_matrix(ny, sign)
        wx = _dft_matrix(nx, sign)
        out = wy @ a.astype(np.complex128) @ wx.T / math.sqrt(nx * ny)
        return out.astype(a.dtype if np.iscomplexobj(a) else np.complex128)

    def forward(self, a):
        return self._apply(a, -1)

    def inverse(self, a):
        return self._apply(a, +1)


_backend: FFTBackend = ScipyBackend()


def get_backend() -> FFTBackend:
    return _backend


def set_backend(backend: FFTBackend) -> FFTBackend:
    """Install ``backend`` globally and return the previous one."""
    global _backend
    previous, _backend = _backend, backend
    return previous


@contextlib.contextmanager
def use_backend(backend: FFTBackend):
    previous = set_backend(backend)
    try:
        yield backend
    finally:
        set_backend(previous)


def _expect(field: ComplexField, domain: Domain, op: str) -> None:
    if field.domain is not domain:
        raise ValueError(f"{op} expects a {domain.value} field, got {field.domain.value}")


def fft_forward(field: ComplexField) -> ComplexField:
    _expect(field, Domain.APERTURE, "fft_forward")
    return ComplexField(_backend.forward(field.data), Domain.REPLAY)


def fft_inverse(field: ComplexField) -> ComplexField:
    _expect(field, Domain.REPLAY, "fft_inverse")
    return ComplexField(_backend.inverse(field.data), Domain.APERTURE)


@dataclass(frozen=True)
class FresnelParams:
    """Physical parameters of the single-transform Fresnel kernel (SI units)."""

    wavelength: float
    distance: float
    pixel_pitch_x: float
    pixel_pitch_y: float

    def __post_init__(self):
        for name in ("wavelength", "distance", "pixel_pitch_x", "pixel_pitch_y"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be > 0")
        if self.distance == 0:
            raise ValueError("distance must be nonzero")
        if self.pixel_pitch_x <= 0 or self.pixel_pitch_y <= 0:
            raise ValueError("pixel pitch must be > 0")


def quadratic_phase(shape: tuple[int, int], params: FresnelParams, dtype=np.complex128) -> np.ndarray:
    """exp(i*pi*((x - Nx/2)^2 px^2 + (y - Ny/2)^2 py^2) / (lambda z)) on the aperture grid."""
    ny, nx = shape
    x = (np.arange(nx) - nx / 2.0) * params.pixel_pitch_x
    y = (np.arange(ny) - ny / 2.0) * params.pixel_pitch_y
    lz = params.wavelength * params.distance
    phase = np.pi * (y[:, None] ** 2 + x[None, :] ** 2) / lz
    return np.exp(1j * phase).astype(dtype)


def fresnel_forward(field: ComplexField, params: FresnelParams) -> ComplexField:
    _expect(field, Domain.APERTURE, "fresnel_forward")
    q = quadratic_phase(field.shape, params, field.data.dtype)
    return ComplexField(_backend.forward(field.data * q), Domain.REPLAY)


def fresnel_inverse(field: ComplexField, params: FresnelParams) -> ComplexField:
    _expect(field, Domain.REPLAY, "fresnel_inverse")
    q = quadratic_phase(field.shape, params, field.data.dtype)
    return ComplexField(_backend.inverse(field.data) * np.conj(q), Domain.APERTURE)


def _shift(a: np.ndarray, sign: int) -> np.ndarray:
    ny, nx = a.shape[-2:]
    return np.roll(a, (sign * -(-ny // 2), sign * -(-nx // 2)), axis=(-2, -1))


def fftshift(field):
    """Move index (0, 0) to (ceil(Ny/2), ceil(Nx/2)); accepts fields or arrays."""
    if isinstance(field, ComplexField):
        return ComplexField(_shift(field.data, 1), field.domain)
    return _shift(np.asarray(field), 1)


def ifftshift(field):
    """Exact inverse of :func:`fftshift` for any dimensions."""
    if isinstance(field, ComplexField):
        return ComplexField(_shift(field.data, -1), field.domain)
    return _shift(np.asarray(field), -1)


class Propagator:
    """Array-level plane-to-plane transform used inside the algorithms.

    ``aperture_phase`` is the per-pixel factor applied before the forward
    transform (None for far-field), which the incremental search update
    needs to know about.
    """

    def __init__(self, fresnel: FresnelParams | None = None):
        self.fresnel = fresnel
        self._cache: dict = {}

    @property
    def kind(self) -> str:
        return "Fourier" if self.fresnel is None else "Fresnel"

    def aperture_phase(self, shape, dtype) -> np.ndarray | None:
        if self.fresnel is None:
            return None
        key = (tuple(shape), np.dtype(dtype).str)
        if key not in self._cache:
            self._cache[key] = quadratic_phase(shape, self.fresnel, dtype)
        return self._cache[key]

    def forward(self, a: np.ndarray) -> np.ndarray:
        q = self.aperture_phase(a.shape, a.dtype)
        return _backend.forward(a if q is None else a * q)

    def inverse(self, a: np.ndarray) -> np.ndarray:
        out = _backend.inverse(a)
        q = self.aperture_phase(a.shape, a.dtype)
        return out if q is None else out * np.conj(q)
