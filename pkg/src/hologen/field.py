"""Core field types, seeded randomness, image ingestion and raw field dumps.

Array layout follows numpy: ``data[y, x]`` with shape ``(Ny, Nx)``, so a
row-major flattening walks ``x`` fastest.
"""
from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Domain",
    "Precision",
    "UnsupportedPrecision",
    "Normalization",
    "ComplexField",
    "RealImage",
    "RegionMask",
    "make_rng",
    "spawn_rngs",
    "seed_random_phase",
    "load_target",
    "load_phase",
    "load_mask",
    "normalize_image",
    "write_field",
    "read_field",
    "HGF_MAGIC",
]

HGF_MAGIC = b"HGF1"
_HGF_HEADER = struct.Struct("<4sIIB")

# Rec. 709 luma
_LUMA = np.array([0.2126, 0.7152, 0.0722])


class Domain(enum.Enum):
    APERTURE = "aperture"
    REPLAY = "replay"


class UnsupportedPrecision(ValueError):
    pass


class Precision(enum.Enum):
    """Scalar precision; the value is bytes per real scalar (the HGF1 code)."""

    F16 = 2
    F32 = 4
    F64 = 8

    @classmethod
    def parse(cls, value: "str | int | Precision") -> "Precision":
        if isinstance(value, Precision):
            return value
        if isinstance(value, int):
            return cls(value)
        try:
            return cls[str(value).upper()]
        except KeyError:
            raise ValueError(f"unknown precision {value!r}") from None

    @classmethod
    def of(cls, array: np.ndarray) -> "Precision":
        return {2: cls.F16, 4: cls.F32, 8: cls.F64}[np.dtype(array.dtype).itemsize // (2 if np.iscomplexobj(array) else 1)]

    @property
    def real_dtype(self) -> np.dtype:
        return np.dtype({2: np.float16, 4: np.float32, 8: np.float64}[self.value])

    @property
    def complex_dtype(self) -> np.dtype:
        # numpy has no complex32; half precision compute is not built in.
        if self is Precision.F16:
            raise UnsupportedPrecision("F16 computation is not available in this build")
        return np.dtype(np.complex64 if self is Precision.F32 else np.complex128)

    def require_compute(self) -> "Precision":
        self.complex_dtype
        return self


class Normalization(enum.Enum):
    MAX_TO_ONE = "MaxToOne"
    UNIT_ENERGY = "UnitEnergy"

    @classmethod
    def parse(cls, value: "str | Normalization") -> "Normalization":
        if isinstance(value, Normalization):
            return value
        for member in cls:
            if member.value.lower() == str(value).lower() or member.name.lower() == str(value).lower():
                return member
        raise ValueError(f"unknown normalization {value!r}")


def _check_2d(a: np.ndarray, what: str) -> None:
    if a.ndim != 2:
        raise ValueError(f"{what} must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{what} has zero size")


@dataclass(frozen=True, eq=False)
class ComplexField:
    """A 2-D complex field tagged with the plane it lives in."""

    data: np.ndarray
    domain: Domain = Domain.APERTURE

    def __post_init__(self):
        a = np.asarray(self.data)
        _check_2d(a, "field")
        if not np.iscomplexobj(a):
            a = a.astype(np.complex64 if a.dtype == np.float32 else np.complex128)
        if not np.isfinite(a).all():
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "data", a)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def precision(self) -> Precision:
        return Precision.of(self.data)

    def astype(self, precision: Precision) -> "ComplexField":
        return ComplexField(self.data.astype(precision.complex_dtype), self.domain)

    def energy(self) -> float:
        return float(np.sum(np.abs(self.data.astype(np.complex128)) ** 2))


@dataclass(frozen=True, eq=False)
class RealImage:
    """Nonnegative real image.

    Images normalized with ``MaxToOne`` lie in [0, 1]; ``UnitEnergy``
    normalization may exceed 1.
    """

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=np.float64) if not np.issubdtype(np.asarray(self.data).dtype, np.floating) else np.asarray(self.data)
        _check_2d(a, "image")
        if not np.isfinite(a).all():
            raise ValueError("image contains non-finite values")
        if (a < 0).any():
            raise ValueError("image values must be nonnegative")
        object.__setattr__(self, "data", a)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True, eq=False)
class RegionMask:
    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=bool)
        _check_2d(a, "mask")
        object.__setattr__(self, "data", a)

    @property
    def covered_count(self) -> int:
        return int(np.count_nonzero(self.data))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @classmethod
    def full(cls, shape) -> "RegionMask":
        return cls(np.ones(shape, dtype=bool))


def make_rng(seed: int) -> np.random.Generator:
    """Return a PCG64 generator seeded through ``SeedSequence(seed)``.

    numpy guarantees the PCG64 bit stream and ``Generator.random`` to be
    stable across platforms, which is what run reproducibility rests on.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(_check_seed(seed))))


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """Independent PCG64 streams derived from one seed (one per purpose)."""
    children = np.random.SeedSequence(_check_seed(seed)).spawn(n)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def seed_random_phase(amplitude, rng: np.random.Generator, precision: Precision = Precision.F64) -> ComplexField:
    """Attach a uniformly random phase in [0, 2*pi) to every pixel."""
    amp = amplitude.data if isinstance(amplitude, RealImage) else np.asarray(amplitude, dtype=np.float64)
    theta = 2.0 * np.pi * rng.random(amp.shape)
    out = amp * np.exp(1j * theta)
    return ComplexField(out.astype(precision.complex_dtype), Domain.APERTURE)


def normalize_image(data: np.ndarray, normalize: "Normalization | str") -> np.ndarray:
    normalize = Normalization.parse(normalize)
    data = np.asarray(data, dtype=np.float64)
    if normalize is Normalization.MAX_TO_ONE:
        peak = data.max()
        return data / peak if peak > 0 else np.zeros_like(data)
    energy = np.sum(data * data)
    if energy == 0:
        return np.zeros_like(data)
    return data * np.sqrt(data.size / energy)


def _read_gray(path) -> np.ndarray:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode in ("I", "I;16", "I;16B", "I;16L", "F", "1") or mode.startswith("I;"):
                raise ValueError(f"{path}: unsupported bit depth (mode {mode}); 8-bit images only")
            if mode == "P":
                img = img.convert("RGBA" if "transparency" in img.info else "RGB")
                mode = img.mode
            if mode in ("L", "LA"):
                arr = np.asarray(img.getchannel(0), dtype=np.float64)
            elif mode in ("RGB", "RGBA"):
                rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
                arr = rgb @ _LUMA
            else:
                raise ValueError(f"{path}: unsupported image mode {mode}")
    except (FileNotFoundError, IsADirectoryError, UnidentifiedImageError, OSError) as exc:
        if isinstance(exc, ValueError):
            raise
        raise ValueError(f"cannot read image {path}: {exc}") from exc
    if arr.size == 0:
        raise ValueError(f"{path}: zero-size image")
    return arr


def load_target(path, normalize: "Normalization | str" = Normalization.MAX_TO_ONE) -> RealImage:
    """Read an 8-bit grayscale or RGB PNG/BMP as a target amplitude image.

    RGB is reduced with Rec. 709 luma before normalization.
    """
    return RealImage(normalize_image(_read_gray(path), normalize))


def load_phase(path) -> RealImage:
    """Gray level g of an 8-bit image is phase g/256 of a turn, so 255 stays below one turn."""
    return RealImage(_read_gray(path) / 256.0)


def load_mask(path) -> RegionMask:
    """Nonzero pixels of an 8-bit image are inside the region."""
    return RegionMask(_read_gray(path) > 0)


def write_field(path, field: "ComplexField | np.ndarray", precision: "Precision | None" = None) -> None:
    """Write an HGF1 dump: magic, u32 Nx, u32 Ny, u8 bytes-per-scalar, then (re, im) pairs."""
    data = field.data if isinstance(field, ComplexField) else np.asarray(field)
    _check_2d(data, "field")
    precision = Precision.of(data) if precision is None else Precision.parse(precision)
    ny, nx = data.shape
    pairs = np.empty((ny, nx, 2), dtype=precision.real_dtype.newbyteorder("<"))
    pairs[..., 0] = data.real
    pairs[..., 1] = data.imag
    with open(path, "wb") as fh:
        fh.write(_HGF_HEADER.pack(HGF_MAGIC, nx, ny, precision.value))
        fh.write(pairs.tobytes(order="C"))


def read_field(path, domain: Domain = Domain.APERTURE) -> ComplexField:
    raw = Path(path).read_bytes()
    if len(raw) < _HGF_HEADER.size:
        raise ValueError(f"{path}: truncated HGF1 header")
    magic, nx, ny, code = _HGF_HEADER.unpack_from(raw)
    if magic != HGF_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if code not in (2, 4, 8):
        raise ValueError(f"{path}: bad precision code {code}")
    if nx < 1 or ny < 1:
        raise ValueError(f"{path}: zero-size field")
    dtype = Precision(code).real_dtype.newbyteorder("<")
    expected = nx * ny * 2 * code
    body = raw[_HGF_HEADER.size:]
    if len(body) != expected:
        raise ValueError(f"{path}: expected {expected} payload bytes, found {len(body)}")
    pairs = np.frombuffer(body, dtype=dtype).reshape(ny, nx, 2)
    work = np.float64 if code == 8 else np.float32
    out = pairs[..., 0].astype(work) + 1j * pairs[..., 1].astype(work)
    return ComplexField(out, domain)
