"""YAML job configuration.

A job document looks like::

    schema_version: 1
    algorithm:
      GS: {iterations: 25, seed: 3}
    slm: {mode: phase, levels: 256, min_arg: 0.0, max_arg: 6.283185307179586, full_circle: true}
    target:
      image: letter.png
      normalize: MaxToOne
      roi: null
      centered: true
      freedoms: {amplitude_outside_roi: true, phase: true, scale: false}
    propagation: Fourier          # or {Fresnel: {wavelength: ..., distance: ..., pixel_pitch_x: ..., pixel_pitch_y: ...}}
    precision: F64
    io:
      output: out
      export: {hologram_png: true, field_dump: true, replay_png: true, trace_csv: true, plot: false}

``algorithm`` is a mapping with exactly one key, the variant name.  Paths
are relative to the config file.  Parsing checks structure, types, ranges
and that referenced files exist; :func:`build_algorithm` loads the images.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .field import Domain, Normalization, Precision, RegionMask, load_mask, load_phase, load_target, read_field
from .ifta import IftaConfig
from .metrics import MetricConfig
from .ospr import OsprConfig
from .propagation import FresnelParams, Propagator, ifftshift
from .quantise import SlmSpec, SpecError
from .search import INITS, PIXEL_ORDERS, SearchConfig
from .target import Freedoms, TargetSpec
from .variants import Variant

__all__ = [
    "ConfigError",
    "JobConfig",
    "AlgorithmSection",
    "SlmSection",
    "TargetSection",
    "PropagationSection",
    "IoSection",
    "parse_config",
    "load_config",
    "dump_config",
    "config_to_dict",
    "build_algorithm",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid job configuration; ``field`` is the dotted path of the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# key -> (kind, default); a default of REQUIRED must be given
REQUIRED = object()
_COMMON = {"seed": ("seed", 0)}
_IFTA = {"iterations": ("posint", REQUIRED), "initial_phase": ("choice:random,flat", "random"), **_COMMON}
_SEARCH = {
    "evaluations": ("posint", REQUIRED),
    "pixel_order": ("choice:" + ",".join(PIXEL_ORDERS), "UniformRandom"),
    "init": ("choice:" + ",".join(INITS), "QuantisedIfft"),
    "resync_interval": ("posint", 1000),
    "trace_every": ("posint", 100),
    "metric": ("choice:MSE,SSIM", "MSE"),
    "phase_sensitive": ("bool", False),
    **_COMMON,
}
ALGORITHM_KEYS = {
    Variant.GS: _IFTA,
    Variant.WEIGHTED_GS: {**_IFTA, "weight_clamp": ("pair", [0.1, 10.0])},
    Variant.LIU_TAGHIZADEH: {**_IFTA, "initial_fraction": ("real", 0.1)},
    Variant.DIRECT_SEARCH: _SEARCH,
    Variant.SIMULATED_ANNEALING: {**_SEARCH, "t0": ("real", REQUIRED), "decay": ("optreal", None)},
    Variant.OSPR: {"subframes": ("posint", REQUIRED), **_COMMON},
    Variant.ADAPTIVE_OSPR: {"subframes": ("posint", REQUIRED), "feedback_gain": ("real", 1.0), **_COMMON},
}
EXPORT_FLAGS = ("hologram_png", "field_dump", "replay_png", "trace_csv", "plot")


@dataclass(frozen=True)
class AlgorithmSection:
    variant: Variant
    params: dict


@dataclass(frozen=True)
class SlmSection:
    mode: str = "phase"
    levels: int = 2
    min_arg: float = 0.0
    max_arg: float = math.pi
    full_circle: bool = False
    min_amp: float = 0.0
    max_amp: float = 1.0
    illumination: str | None = None


@dataclass(frozen=True)
class TargetSection:
    image: str
    normalize: str = "MaxToOne"
    phase_image: str | None = None
    roi: str | None = None
    centered: bool = True
    freedoms: Freedoms = field(default_factory=Freedoms)


@dataclass(frozen=True)
class PropagationSection:
    kind: str = "Fourier"
    fresnel: FresnelParams | None = None


@dataclass(frozen=True)
class IoSection:
    output: str = "out"
    name: str | None = None
    hologram_png: bool = True
    field_dump: bool = True
    replay_png: bool = True
    trace_csv: bool = True
    plot: bool = False


@dataclass(frozen=True)
class JobConfig:
    algorithm: AlgorithmSection
    slm: SlmSection
    target: TargetSection
    propagation: PropagationSection = field(default_factory=PropagationSection)
    precision: Precision = Precision.F64
    io: IoSection = field(default_factory=IoSection)
    schema_version: int = SCHEMA_VERSION
    base_dir: str = field(default=".", compare=False)

    def resolve(self, path: str | None) -> Path | None:
        if path is None:
            return None
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    @property
    def job_name(self) -> str:
        return self.io.name or "job"

    def output_dir(self) -> Path:
        return self.resolve(self.io.output)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _coerce(kind: str, value, where: str):
    if kind == "posint":
        if not _is_int(value) or value < 1:
            raise ConfigError(where, f"must be an integer >= 1, got {value!r}")
        return value
    if kind == "seed":
        if not _is_int(value) or not 0 <= value < 2**64:
            raise ConfigError(where, f"must be an integer in [0, 2^64), got {value!r}")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(where, f"must be true or false, got {value!r}")
        return value
    if kind == "real":
        if not _is_real(value):
            raise ConfigError(where, f"must be a finite number, got {value!r}")
        return float(value)
    if kind == "optreal":
        return None if value is None else _coerce("real", value, where)
    if kind == "pair":
        if not isinstance(value, (list, tuple)) or len(value) != 2 or not all(_is_real(v) for v in value):
            raise ConfigError(where, f"must be a list of two numbers, got {value!r}")
        return [float(v) for v in value]
    if kind.startswith("choice:"):
        options = kind[len("choice:"):].split(",")
        if value not in options:
            raise ConfigError(where, f"must be one of {options}, got {value!r}")
        return value
    if kind == "str":
        if not isinstance(value, str) or not value:
            raise ConfigError(where, f"must be a non-empty string, got {value!r}")
        return value
    if kind == "optstr":
        return None if value is None else _coerce("str", value, where)
    raise AssertionError(kind)


def _mapping(value, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(where, f"must be a mapping, got {type(value).__name__}")
    return value


def _section(raw: dict, where: str, schema: dict) -> dict:
    """Validate ``raw`` against ``schema`` (key -> (kind, default)); unknown keys are errors."""
    raw = _mapping(raw, where)
    for key in raw:
        if key not in schema:
            raise ConfigError(f"{where}.{key}", f"unknown key; expected one of {sorted(schema)}")
    out = {}
    for key, (kind, default) in schema.items():
        if key in raw:
            out[key] = _coerce(kind, raw[key], f"{where}.{key}")
        elif default is REQUIRED:
            raise ConfigError(f"{where}.{key}", "is required")
        else:
            out[key] = default
    return out


def _parse_algorithm(raw) -> AlgorithmSection:
    if not isinstance(raw, dict) or len(raw) != 1:
        raise ConfigError("algorithm", "must be a mapping with exactly one variant key, e.g. {GS: {iterations: 25}}")
    (name, params), = raw.items()
    try:
        variant = Variant.parse(name)
    except ValueError:
        raise ConfigError("algorithm", f"unknown variant {name!r}; expected one of {[v.value for v in Variant]}") from None
    where = f"algorithm.{variant.value}"
    params = _section(params, where, ALGORITHM_KEYS[variant])
    if variant is Variant.LIU_TAGHIZADEH and not 0 < params["initial_fraction"] <= 1:
        raise ConfigError(f"{where}.initial_fraction", "must be in (0, 1]")
    if variant is Variant.WEIGHTED_GS:
        lo, hi = params["weight_clamp"]
        if not 0 < lo <= hi:
            raise ConfigError(f"{where}.weight_clamp", "must satisfy 0 < low <= high")
    if variant is Variant.SIMULATED_ANNEALING:
        if not params["t0"] > 0:
            raise ConfigError(f"{where}.t0", "must be > 0")
        if params["decay"] is not None and not 0 < params["decay"] < 1:
            raise ConfigError(f"{where}.decay", "must be in (0, 1)")
    if variant is Variant.ADAPTIVE_OSPR and not 0 <= params["feedback_gain"] <= 1:
        raise ConfigError(f"{where}.feedback_gain", "must be in [0, 1]")
    return AlgorithmSection(variant, params)


_SLM_SCHEMA = {
    "mode": ("choice:phase,amplitude", "phase"),
    "levels": ("posint", REQUIRED),
    "min_arg": ("real", 0.0),
    "max_arg": ("real", math.pi),
    "full_circle": ("bool", False),
    "min_amp": ("real", 0.0),
    "max_amp": ("real", 1.0),
    "illumination": ("optstr", None),
}
_FREEDOM_SCHEMA = {
    "amplitude_outside_roi": ("bool", True),
    "phase": ("bool", True),
    "scale": ("bool", False),
}
_TARGET_SCHEMA = {
    "image": ("str", REQUIRED),
    "normalize": ("choice:MaxToOne,UnitEnergy", "MaxToOne"),
    "phase_image": ("optstr", None),
    "roi": ("optstr", None),
    "centered": ("bool", True),
}
_IO_SCHEMA = {"output": ("str", "out"), "name": ("optstr", None), "export": (None, None)}
_FRESNEL_SCHEMA = {k: ("real", REQUIRED) for k in ("wavelength", "distance", "pixel_pitch_x", "pixel_pitch_y")}


def _parse_slm(raw) -> SlmSection:
    values = _section(raw, "slm", _SLM_SCHEMA)
    try:
        SlmSpec(**{k: v for k, v in values.items() if k != "illumination"})
    except SpecError as exc:
        raise ConfigError(f"slm.{exc.field}", str(exc).split(": ", 1)[1]) from None
    return SlmSection(**values)


def _parse_target(raw) -> TargetSection:
    raw = dict(_mapping(raw, "target"))
    freedoms = _section(raw.pop("freedoms", None), "target.freedoms", _FREEDOM_SCHEMA)
    values = _section(raw, "target", _TARGET_SCHEMA)
    return TargetSection(freedoms=Freedoms(**freedoms), **values)


def _parse_propagation(raw) -> PropagationSection:
    if raw is None or raw == "Fourier" or raw == {"Fourier": None} or raw == {"Fourier": {}}:
        return PropagationSection()
    if isinstance(raw, dict) and list(raw) == ["Fresnel"]:
        values = _section(raw["Fresnel"], "propagation.Fresnel", _FRESNEL_SCHEMA)
        try:
            params = FresnelParams(**values)
        except ValueError as exc:
            raise ConfigError("propagation.Fresnel", str(exc)) from None
        return PropagationSection("Fresnel", params)
    raise ConfigError("propagation", f"must be 'Fourier' or {{Fresnel: {{...}}}}, got {raw!r}")


def _parse_io(raw) -> IoSection:
    raw = dict(_mapping(raw, "io"))
    export = _section(raw.pop("export", None), "io.export", {k: ("bool", k != "plot") for k in EXPORT_FLAGS})
    values = _section(raw, "io", {k: v for k, v in _IO_SCHEMA.items() if k != "export"})
    return IoSection(**values, **export)


def _check_paths(job: JobConfig) -> None:
    refs = {
        "target.image": job.target.image,
        "target.phase_image": job.target.phase_image,
        "target.roi": job.target.roi,
        "slm.illumination": job.slm.illumination,
    }
    for where, path in refs.items():
        if path is not None and not job.resolve(path).is_file():
            raise ConfigError(where, f"file not found: {job.resolve(path)}")


def parse_config(text: str, base_dir=".", name: str | None = None) -> JobConfig:
    """Parse and validate a job document; ``name`` is the default job name."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<document>", f"not valid YAML: {exc}") from None
    doc = _mapping(doc, "<document>")
    known = {"schema_version", "algorithm", "slm", "target", "propagation", "precision", "io"}
    for key in doc:
        if key not in known:
            raise ConfigError(str(key), f"unknown top-level key; expected one of {sorted(known)}")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"must be {SCHEMA_VERSION}, got {version!r}")
    for key in ("algorithm", "slm", "target"):
        if key not in doc:
            raise ConfigError(key, "is required")
    try:
        precision = Precision.parse(doc.get("precision", "F64"))
        precision.complex_dtype
    except ValueError as exc:
        raise ConfigError("precision", str(exc)) from None
    io = _parse_io(doc.get("io"))
    if io.name is None and name is not None:
        io = replace(io, name=name)
    job = JobConfig(
        algorithm=_parse_algorithm(doc["algorithm"]),
        slm=_parse_slm(doc["slm"]),
        target=_parse_target(doc["target"]),
        propagation=_parse_propagation(doc.get("propagation")),
        precision=precision,
        io=io,
        schema_version=version,
        base_dir=str(base_dir),
    )
    if job.io.hologram_png and job.slm.levels > 256:
        raise ConfigError("slm.levels", "hologram PNG export holds at most 256 levels; disable io.export.hologram_png")
    _check_paths(job)
    return job


def load_config(path) -> JobConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc}") from None
    return parse_config(text, base_dir=path.parent, name=path.stem)


def config_to_dict(job: JobConfig) -> dict:
    """Plain-data form of a job, the inverse of :func:`parse_config`."""
    io = {"output": job.io.output, "name": job.io.name,
          "export": {k: getattr(job.io, k) for k in EXPORT_FLAGS}}
    if job.propagation.kind == "Fourier":
        propagation = "Fourier"
    else:
        fp = job.propagation.fresnel
        propagation = {"Fresnel": {f.name: getattr(fp, f.name) for f in fields(fp)}}
    target = {f.name: getattr(job.target, f.name) for f in fields(job.target) if f.name != "freedoms"}
    target["freedoms"] = {f.name: getattr(job.target.freedoms, f.name) for f in fields(Freedoms)}
    return {
        "schema_version": job.schema_version,
        "algorithm": {job.algorithm.variant.value: dict(job.algorithm.params)},
        "slm": {f.name: getattr(job.slm, f.name) for f in fields(job.slm)},
        "target": target,
        "propagation": propagation,
        "precision": job.precision.name,
        "io": io,
    }


def dump_config(job: JobConfig) -> str:
    return yaml.safe_dump(config_to_dict(job), sort_keys=False)


def _load_image(job: JobConfig, path: str, what: str, loader):
    try:
        data = loader(job.resolve(path))
    except ValueError as exc:
        raise ConfigError(what, str(exc)) from None
    return data


def build_algorithm(job: JobConfig):
    """Load images and assemble ``(algorithm config, propagator)`` for a job."""
    t = job.target
    amp = _load_image(job, t.image, "target.image", lambda p: load_target(p, Normalization.parse(t.normalize)))
    shift = ifftshift if t.centered else (lambda a: a)
    amplitude = shift(amp.data)
    shape = amplitude.shape
    phase = roi = None
    if t.phase_image is not None:
        phase = shift(_load_image(job, t.phase_image, "target.phase_image", load_phase).data)
        if phase.shape != shape:
            raise ConfigError("target.phase_image", f"shape {phase.shape} does not match target {shape}")
    if t.roi is not None:
        mask = _load_image(job, t.roi, "target.roi", load_mask)
        roi = RegionMask(shift(mask.data))
        if roi.shape != shape:
            raise ConfigError("target.roi", f"shape {roi.shape} does not match target {shape}")
        if roi.covered_count == 0:
            raise ConfigError("target.roi", "mask covers no pixels")
    target = TargetSpec(amplitude, phase, roi, t.freedoms)

    illumination = None
    if job.slm.illumination is not None:
        try:
            illumination = read_field(job.resolve(job.slm.illumination), Domain.APERTURE).data
        except ValueError as exc:
            raise ConfigError("slm.illumination", str(exc)) from None
        if illumination.shape != shape:
            raise ConfigError("slm.illumination", f"shape {illumination.shape} does not match target {shape}")
    s = job.slm
    try:
        slm = SlmSpec(s.mode, s.levels, s.min_arg, s.max_arg, s.full_circle, s.min_amp, s.max_amp, illumination)
    except SpecError as exc:
        raise ConfigError(f"slm.{exc.field}", str(exc).split(": ", 1)[1]) from None

    variant, p = job.algorithm.variant, job.algorithm.params
    where = f"algorithm.{variant.value}"
    try:
        if variant.family == "ifta":
            extra = {}
            if variant is Variant.WEIGHTED_GS:
                extra["weight_clamp"] = tuple(p["weight_clamp"])
            if variant is Variant.LIU_TAGHIZADEH:
                extra["lt_initial_fraction"] = p["initial_fraction"]
            cfg = IftaConfig(variant, p["iterations"], slm, target, seed=p["seed"],
                             initial_phase=p["initial_phase"], **extra)
        elif variant.family == "search":
            metric = target.metric_config(kind=p["metric"], phase_sensitive=p["phase_sensitive"])
            extra = {}
            if variant is Variant.SIMULATED_ANNEALING:
                extra = {"sa_t0": p["t0"], "sa_decay": p["decay"]}
            cfg = SearchConfig(variant, p["evaluations"], slm, target, metric, seed=p["seed"],
                               pixel_order=p["pixel_order"], init=p["init"],
                               resync_interval=p["resync_interval"], trace_every=p["trace_every"], **extra)
        else:
            cfg = OsprConfig(variant, p["subframes"], slm, target, seed=p["seed"],
                             feedback_gain=p.get("feedback_gain", 1.0))
    except ValueError as exc:
        raise ConfigError(where, str(exc)) from None
    prop = Propagator(job.propagation.fresnel)
    return cfg, prop


def metric_for(job: JobConfig, target: TargetSpec) -> MetricConfig:
    """Metric the job's trace is reported in."""
    p = job.algorithm.params
    if job.algorithm.variant.family == "search":
        return target.metric_config(kind=p["metric"], phase_sensitive=p["phase_sensitive"])
    return target.metric_config()
