"""Run configuration from TOML.

Every section is optional and falls back to defaults. Unknown sections or
keys are errors, and validation messages carry the dotted field path, for
example ``geometry.n_elements``. ``snr_db = "none"`` means noiseless.

Example::

    seed = 7

    [geometry]
    n_elements = 8
    element_spacing = 0.11

    [estimator]
    algorithm = "ivdst"
    k = 1

    [pixel]
    frequencies = [0.5]
    amplitudes = [[1.0, 0.0]]
    snr_db = 30.0
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

import tomli

from .bench import SWEEP_KINDS, SweepConfig
from .errors import ConfigError, TomoAnmError
from .estimators.grid import GridConfig
from .estimators.ivdst import IvdstConfig
from .estimators.registry import ALGORITHMS
from .estimators.sdp import AdmmConfig
from .tomosar import ArrayGeometry, SceneConfig

_INT, _FLOAT, _BOOL, _STR = "integer", "number", "boolean", "string"


@dataclass(frozen=True)
class EstimatorSettings:
    algorithm: str = "ivdst"
    k: int = 1
    ivdst: IvdstConfig = field(default_factory=IvdstConfig)
    sdp: AdmmConfig = field(default_factory=AdmmConfig)
    grid: GridConfig = field(default_factory=GridConfig)

    def config_for(self, algorithm: str):
        return {"ivdst": self.ivdst, "sdp": self.sdp, "omp": self.grid, "ist": self.grid}[algorithm]


@dataclass(frozen=True)
class PixelSettings:
    """A single synthetic pixel: lines plus optional noise."""

    frequencies: tuple = (0.5,)
    amplitudes: tuple = (1 + 0j,)
    snr_db: Optional[float] = None


@dataclass(frozen=True)
class OutputSettings:
    directory: str = "."
    prefix: str = "tomoanm"

    def path(self, suffix: str) -> Path:
        return Path(self.directory) / f"{self.prefix}{suffix}"


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)
    estimator: EstimatorSettings = field(default_factory=EstimatorSettings)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    scene: SceneConfig = field(default_factory=SceneConfig)
    pixel: PixelSettings = field(default_factory=PixelSettings)
    output: OutputSettings = field(default_factory=OutputSettings)
    amplitude_floor: Optional[float] = None
    k_max: int = 3


def _check_type(path: str, value: Any, kind: str):
    if kind == _INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path} must be an integer, got {value!r}")
        return value
    if kind == _FLOAT:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path} must be a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(f"{path} must be finite, got {value!r}")
        return float(value)
    if kind == _BOOL:
        if not isinstance(value, bool):
            raise ConfigError(f"{path} must be true or false, got {value!r}")
        return value
    if not isinstance(value, str):
        raise ConfigError(f"{path} must be a string, got {value!r}")
    return value


def _snr(path: str, value: Any) -> Optional[float]:
    if isinstance(value, str) and value.lower() == "none":
        return None
    return _check_type(path, value, _FLOAT)


def _table(path: str, value: Any) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path} must be a table")
    return value


def _section(path: str, raw: dict, schema: dict, nested: tuple = ()) -> dict:
    """Type-checked scalar fields of one table; ``nested`` names allowed sub-tables."""
    out = {}
    for key, value in raw.items():
        full = f"{path}.{key}" if path else key
        if key in nested:
            continue
        if key not in schema:
            raise ConfigError(f"unknown key {full!r}")
        kind = schema[key]
        if callable(kind):
            out[key] = kind(full, value)
        else:
            out[key] = _check_type(full, value, kind)
    return out


def _build(path: str, cls, kwargs: dict):
    try:
        return cls(**kwargs)
    except (TomoAnmError, ValueError, TypeError) as exc:
        raise ConfigError(f"{path}.{exc}" if path else str(exc)) from exc


def _float_list(path, value):
    if not isinstance(value, list):
        raise ConfigError(f"{path} must be a list, got {value!r}")
    return tuple(_check_type(f"{path}[{i}]", v, _FLOAT) for i, v in enumerate(value))


def _str_list(path, value):
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path} must be a non-empty list of strings, got {value!r}")
    out = tuple(_check_type(f"{path}[{i}]", v, _STR) for i, v in enumerate(value))
    for v in out:
        if v not in ALGORITHMS:
            raise ConfigError(f"{path} names unknown algorithm {v!r}; choose from {', '.join(ALGORITHMS)}")
    return out


def _complex_list(path, value):
    if not isinstance(value, list):
        raise ConfigError(f"{path} must be a list of [re, im] pairs")
    out = []
    for i, pair in enumerate(value):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigError(f"{path}[{i}] must be an [re, im] pair, got {pair!r}")
        out.append(complex(_check_type(f"{path}[{i}]", pair[0], _FLOAT),
                           _check_type(f"{path}[{i}]", pair[1], _FLOAT)))
    return tuple(out)


def _azimuth_extent(path, value):
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(f"{path} must be a [start, stop] pair of integers")
    return tuple(_check_type(f"{path}[{i}]", v, _INT) for i, v in enumerate(value))


def _optional_float(path, value):
    if isinstance(value, str) and value.lower() == "none":
        return None
    return _check_type(path, value, _FLOAT)


def _algorithm(path, value):
    value = _check_type(path, value, _STR)
    if value not in ALGORITHMS:
        raise ConfigError(f"{path} names unknown algorithm {value!r}; choose from {', '.join(ALGORITHMS)}")
    return value


def _kind(path, value):
    value = _check_type(path, value, _STR)
    if value not in SWEEP_KINDS:
        raise ConfigError(f"{path} must be one of {', '.join(SWEEP_KINDS)}, got {value!r}")
    return value


_GEOMETRY = {"n_elements": _INT, "element_spacing": _FLOAT, "wavelength": _FLOAT,
             "carrier_frequency": _FLOAT, "reference_range": _FLOAT, "view_angle": _FLOAT}
_IVDST = {"step_size": _FLOAT, "shrink_weight": _optional_float, "max_iters": _INT,
          "rel_tol": _FLOAT, "continuation": _FLOAT, "restart": _BOOL}
_SDP = {f.name: (_INT if f.name == "max_iters" else _FLOAT) for f in fields(AdmmConfig)}
_GRID = {"grid_size": _INT, "ist_threshold": _optional_float, "ist_max_iters": _INT,
         "omp_sparsity": _INT, "noise_sigma": _optional_float}
_ESTIMATOR = {"algorithm": _algorithm, "k": _INT}
_SWEEP = {"kind": _kind, "grid": _float_list, "algorithms": _str_list, "trials": _INT,
          "targets": _INT, "snr_db": _snr, "frequency": _optional_float,
          "min_separation": _optional_float, "grid_factor": _INT, "eps": _optional_float}
_SCENE = {"azimuth_size": _INT, "range_size": _INT, "azimuth_spacing": _FLOAT,
          "slant_spacing": _FLOAT, "near_slant_range": _FLOAT, "building_azimuth": _azimuth_extent,
          "building_ground_range": _FLOAT, "building_depth": _FLOAT, "building_height": _FLOAT,
          "facade_spacing": _FLOAT, "snr_db": _snr}
_PIXEL = {"frequencies": _float_list, "amplitudes": _complex_list, "snr_db": _snr}
_OUTPUT = {"directory": _STR, "prefix": _STR}
_RECONSTRUCT = {"k_max": _INT, "amplitude_floor": _optional_float}
_TOP = {"seed": _INT}
_SECTIONS = ("geometry", "estimator", "sweep", "scene", "pixel", "output", "reconstruct")


def _geometry(raw: dict) -> ArrayGeometry:
    values = _section("geometry", raw, _GEOMETRY)
    if "carrier_frequency" in values:
        if "wavelength" in values:
            raise ConfigError("geometry.wavelength and geometry.carrier_frequency are exclusive")
        carrier = values.pop("carrier_frequency")
        if not carrier > 0:
            raise ConfigError(f"geometry.carrier_frequency must be positive, got {carrier}")
        values["wavelength"] = 299_792_458.0 / carrier
    return _build("geometry", ArrayGeometry, values)


def _estimator(raw: dict) -> EstimatorSettings:
    values = _section("estimator", raw, _ESTIMATOR, nested=("ivdst", "sdp", "grid"))
    for name, schema, cls in (("ivdst", _IVDST, IvdstConfig), ("sdp", _SDP, AdmmConfig),
                              ("grid", _GRID, GridConfig)):
        sub = _table(f"estimator.{name}", raw.get(name, {}))
        values[name] = _build(f"estimator.{name}", cls, _section(f"estimator.{name}", sub, schema))
    return _build("estimator", EstimatorSettings, values)


def _check_writable(path: str) -> None:
    p = Path(path).resolve()
    while not p.exists():
        p = p.parent
    if not p.is_dir() or not os.access(p, os.W_OK):
        raise ConfigError(f"output.directory {path!r} is not a writable directory")


def parse_config(text: str) -> RunConfig:
    """Validate TOML text into a :class:`RunConfig`."""
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    for key in raw:
        if key not in _TOP and key not in _SECTIONS:
            raise ConfigError(f"unknown key {key!r}")
    top = _section("", {k: v for k, v in raw.items() if k in _TOP}, _TOP)
    geometry = _geometry(_table("geometry", raw.get("geometry", {})))
    estimator = _estimator(_table("estimator", raw.get("estimator", {})))
    if not 1 <= estimator.k < geometry.n_elements:
        raise ConfigError(f"estimator.k must lie in [1, {geometry.n_elements - 1}], got {estimator.k}")

    rec = _section("reconstruct", _table("reconstruct", raw.get("reconstruct", {})), _RECONSTRUCT)
    k_max = rec.get("k_max", 3)
    if not 1 <= k_max < geometry.n_elements:
        raise ConfigError(f"reconstruct.k_max must lie in [1, {geometry.n_elements - 1}], got {k_max}")
    floor = rec.get("amplitude_floor")
    if floor is not None and floor < 0:
        raise ConfigError(f"reconstruct.amplitude_floor must be non-negative, got {floor}")
    sweep_raw = _section("sweep", _table("sweep", raw.get("sweep", {})), _SWEEP)
    configs = {"ivdst": estimator.ivdst, "sdp": estimator.sdp}
    if "grid" in raw.get("estimator", {}):
        configs.update(omp=estimator.grid, ist=estimator.grid)
    scene = _build("scene", SceneConfig, {
        "geometry": geometry, **_section("scene", _table("scene", raw.get("scene", {})), _SCENE)})
    sweep = _build("sweep", SweepConfig, {"n_elements": geometry.n_elements, "configs": configs,
                                          "scene": scene, "k_max": k_max, **sweep_raw})

    pixel_values = _section("pixel", _table("pixel", raw.get("pixel", {})), _PIXEL)
    pixel = PixelSettings(**pixel_values)
    if "amplitudes" not in pixel_values:
        pixel = PixelSettings(pixel.frequencies, (1 + 0j,) * len(pixel.frequencies), pixel.snr_db)
    if len(pixel.frequencies) != len(pixel.amplitudes):
        raise ConfigError("pixel.amplitudes must have one entry per pixel.frequencies entry")
    for i, f in enumerate(pixel.frequencies):
        if not 0 <= f < 1:
            raise ConfigError(f"pixel.frequencies[{i}] must lie in [0, 1), got {f}")
    if len(set(pixel.frequencies)) != len(pixel.frequencies):
        raise ConfigError("pixel.frequencies must be distinct")

    output = OutputSettings(**_section("output", _table("output", raw.get("output", {})), _OUTPUT))
    _check_writable(output.directory)
    return RunConfig(top.get("seed", 0), geometry, estimator, sweep, scene, pixel, output, floor, k_max)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
