"""TomoSAR forward model, building-scene simulator and per-pixel volume
reconstruction.

Elevation ``s`` is measured along the axis perpendicular to slant range,
relative to the ground point of each range cell (a flattened stack). Channel
``n`` sits at cross-track baseline ``b_n = n d_s`` and sees a scatterer at
elevation ``s`` with phase ``4 pi s b_n / (lambda r0)``, so the normalized
frequency is ``f = 2 s d_s / (lambda r0)``.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigError, DomainError, ShapeError, TomoAnmError
from .estimators.ivdst import NOISE_FLOOR, noise_level
from .estimators.registry import check_algorithm, run_estimator
from .spectral import steering_matrix

SPEED_OF_LIGHT = 299_792_458.0
THREADS_ENV = "TOMO_ANM_THREADS"


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform cross-track array. Defaults: 8 elements, 0.11 m spacing, 9.6 GHz."""

    n_elements: int = 8
    element_spacing: float = 0.11
    wavelength: float = SPEED_OF_LIGHT / 9.6e9
    reference_range: float = 1000.0
    view_angle: float = 45.0

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 2:
            raise ConfigError(f"n_elements must be an integer >= 2, got {self.n_elements}")
        for name in ("element_spacing", "wavelength", "reference_range"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be positive, got {value}")
        if not 0 < self.view_angle < 90:
            raise ConfigError(f"view_angle must lie in (0, 90) degrees, got {self.view_angle}")
        object.__setattr__(self, "n_elements", int(self.n_elements))

    @property
    def baselines(self) -> np.ndarray:
        return np.arange(self.n_elements) * self.element_spacing

    @property
    def aperture(self) -> float:
        return (self.n_elements - 1) * self.element_spacing

    @property
    def unambiguous_span(self) -> float:
        """Elevation extent ``lambda r0 / (2 d_s)`` mapped onto one frequency cycle."""
        return self.wavelength * self.reference_range / (2.0 * self.element_spacing)

    def with_elements(self, n: int) -> "ArrayGeometry":
        return ArrayGeometry(n, self.element_spacing, self.wavelength,
                             self.reference_range, self.view_angle)


def freq_from_elevation(s, geom: ArrayGeometry):
    """``2 s d_s / (lambda r0)`` reduced modulo 1."""
    f = np.mod(2.0 * np.asarray(s, dtype=float) * geom.element_spacing
               / (geom.wavelength * geom.reference_range), 1.0)
    f = np.where(f >= 1.0, 0.0, f)
    return float(f) if f.ndim == 0 else f


def elevation_from_freq(f, geom: ArrayGeometry):
    s = geom.unambiguous_span * np.asarray(f, dtype=float)
    return float(s) if s.ndim == 0 else s


def rayleigh_resolution(geom: ArrayGeometry) -> float:
    """Elevation resolution ``lambda r0 / (2 (N - 1) d_s)``."""
    return geom.wavelength * geom.reference_range / (2.0 * geom.aperture)


@dataclass(frozen=True)
class Scatterer:
    elevation: float
    reflectivity: complex

    def __post_init__(self):
        if not math.isfinite(self.elevation):
            raise DomainError(f"elevation must be finite, got {self.elevation}")
        if not np.isfinite(self.reflectivity):
            raise DomainError(f"reflectivity must be finite, got {self.reflectivity}")
        object.__setattr__(self, "elevation", float(self.elevation))
        object.__setattr__(self, "reflectivity", complex(self.reflectivity))


class PixelEcho(NamedTuple):
    g: np.ndarray
    noise_sigma: float


def _check_span(scatterers: Sequence[Scatterer], geom: ArrayGeometry) -> None:
    span = geom.unambiguous_span
    for sc in scatterers:
        if not 0.0 <= sc.elevation < span:
            raise DomainError(
                f"elevation {sc.elevation:.3f} m outside the unambiguous span [0, {span:.3f})"
            )


def _noise(rng: np.random.Generator, n: int) -> np.ndarray:
    # element-major draws: the first n' < n elements match an n'-element draw
    w = rng.standard_normal((n, 2))
    return (w[:, 0] + 1j * w[:, 1]) / math.sqrt(2.0)


def pixel_echo(scatterers: Sequence[Scatterer], geom: ArrayGeometry,
               snr_db: Optional[float] = None, seed: int = 0) -> PixelEcho:
    """``g = sum_k gamma_k a(f_k) + w`` for one azimuth-range pixel.

    The noise power is ``sum_k |gamma_k|^2 / 10^(snr_db / 10)``, so the SNR
    is defined on the total signal power of the pixel. ``snr_db=None`` is
    noiseless.
    """
    _check_span(scatterers, geom)
    return _echo(scatterers, geom, snr_db, np.random.default_rng(seed))


def _echo(scatterers, geom, snr_db, rng) -> PixelEcho:
    n = geom.n_elements
    if scatterers:
        freqs = freq_from_elevation([sc.elevation for sc in scatterers], geom)
        gamma = np.array([sc.reflectivity for sc in scatterers], dtype=complex)
        g = steering_matrix(freqs, n) @ gamma
        power = float(np.sum(np.abs(gamma) ** 2))
    else:
        g = np.zeros(n, dtype=complex)
        power = 0.0
    if snr_db is None:
        return PixelEcho(g, 0.0)
    sigma = math.sqrt(power / 10.0 ** (snr_db / 10.0))
    return PixelEcho(g + sigma * _noise(rng, n), sigma)


@dataclass(frozen=True)
class SLCStack:
    """Co-registered single-look complex images, shape ``(N, azimuth, range)``."""

    data: np.ndarray
    geometry: ArrayGeometry

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        if data.ndim != 3 or min(data.shape) < 1:
            raise ShapeError(f"SLC stack must be a non-empty 3-D array, got shape {data.shape}")
        if data.shape[0] != self.geometry.n_elements:
            raise ShapeError(
                f"stack has {data.shape[0]} channels, geometry has {self.geometry.n_elements}"
            )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def pixel(self, azimuth: int, rng_bin: int) -> np.ndarray:
        return self.data[:, azimuth, rng_bin]

    def truncate(self, n: int) -> "SLCStack":
        """The first ``n`` channels."""
        return SLCStack(self.data[:n], self.geometry.with_elements(n))


@dataclass(frozen=True)
class PointCloud:
    """Reconstructed scatterers: pixel indices, elevation (m) and intensity."""

    azimuth: np.ndarray
    range_bin: np.ndarray
    height: np.ndarray
    intensity: np.ndarray
    azimuth_spacing: float = 1.0
    ground_range_spacing: float = 1.0

    def __post_init__(self):
        arrays = [np.array(getattr(self, k), dtype=t).ravel() for k, t in
                  (("azimuth", int), ("range_bin", int), ("height", float), ("intensity", float))]
        if len({a.size for a in arrays}) != 1:
            raise ShapeError("point cloud columns differ in length")
        if np.any(arrays[3] < 0) or not np.all(np.isfinite(arrays[2])):
            raise DomainError("point intensities must be >= 0 and heights finite")
        for key, arr in zip(("azimuth", "range_bin", "height", "intensity"), arrays):
            arr.setflags(write=False)
            object.__setattr__(self, key, arr)

    @classmethod
    def empty(cls, azimuth_spacing: float = 1.0, ground_range_spacing: float = 1.0) -> "PointCloud":
        return cls(np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0),
                   azimuth_spacing, ground_range_spacing)

    def __len__(self) -> int:
        return self.height.size

    def xyz(self) -> np.ndarray:
        """Columns x (azimuth m), y (ground range m), z (height as stored)."""
        return np.column_stack([self.azimuth * self.azimuth_spacing,
                                self.range_bin * self.ground_range_spacing, self.height])


@dataclass(frozen=True)
class SceneConfig:
    """Box building on flat ground seen from the near side.

    Facade returns come from horizontal features (floor lines) every
    ``facade_spacing`` metres up the near wall; the roof is a continuous
    return at the building height. Ground behind the building is shadowed.
    """

    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)
    azimuth_size: int = 21
    range_size: int = 64
    azimuth_spacing: float = 3.0
    slant_spacing: float = 3.0
    near_slant_range: float = 0.0
    building_azimuth: tuple[int, int] = (5, 16)
    building_ground_range: float = 80.0
    building_depth: float = 30.0
    building_height: float = 45.0
    facade_spacing: float = 15.0
    snr_db: Optional[float] = 30.0

    def __post_init__(self):
        for name in ("azimuth_size", "range_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("azimuth_spacing", "slant_spacing", "building_depth", "facade_spacing"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("building_height", "building_ground_range", "near_slant_range"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative, got {getattr(self, name)}")
        a0, a1 = self.building_azimuth
        if not 0 <= a0 <= a1 <= self.azimuth_size:
            raise ConfigError(f"building_azimuth {self.building_azimuth} lies outside the scene")
        top = self.building_height / math.sin(math.radians(self.geometry.view_angle))
        if self.building_height > 0 and top >= self.geometry.unambiguous_span:
            raise ConfigError(
                f"building_height {self.building_height} m maps to elevation {top:.1f} m, beyond "
                f"the unambiguous span {self.geometry.unambiguous_span:.1f} m"
            )

    @property
    def ground_range_spacing(self) -> float:
        return self.slant_spacing / math.sin(math.radians(self.geometry.view_angle))


class Scene(NamedTuple):
    stack: SLCStack
    truth: list  # truth[a][r] -> list[Scatterer]


def _pixel_scatterers(cfg: SceneConfig, building_row: bool) -> list[list[tuple[float, int]]]:
    """Per range cell: ``(elevation, kind)`` pairs, kind 0 ground, 1 facade, 2 roof."""
    theta = math.radians(cfg.geometry.view_angle)
    sin_t, cos_t = math.sin(theta), math.cos(theta)
    h, y0, y1 = cfg.building_height, cfg.building_ground_range, cfg.building_ground_range + cfg.building_depth
    has_building = building_row and h > 0
    centres = cfg.near_slant_range + cfg.slant_spacing * np.arange(cfg.range_size)
    cells: list[list[tuple[float, int]]] = [[] for _ in range(cfg.range_size)]

    def elevation(y, z, rc):
        # offset along the elevation axis from the ground point of cell rc
        return y * cos_t + z * sin_t - rc * cos_t / sin_t

    for j, rc in enumerate(centres):
        y = rc / sin_t
        hidden = has_building and y0 <= y <= y1 + h * sin_t / cos_t
        if not hidden:
            cells[j].append((0.0, 0))
        if has_building:
            y_roof = (rc + h * cos_t) / sin_t
            if y0 <= y_roof <= y1:
                cells[j].append((elevation(y_roof, h, rc), 2))
    if has_building:
        levels = np.arange(1, int(math.ceil(h / cfg.facade_spacing))) * cfg.facade_spacing
        for z in levels[levels < h]:
            r = y0 * sin_t - z * cos_t
            j = int(round((r - cfg.near_slant_range) / cfg.slant_spacing))
            if 0 <= j < cfg.range_size:
                cells[j].append((elevation(y0, z, centres[j]), 1))
    for cell in cells:
        cell.sort()
    return cells


def simulate_building_scene(cfg: Optional[SceneConfig] = None, seed: int = 0) -> Scene:
    """SLC stack and ground-truth scatterers of a box building scene.

    Reflectivities have unit magnitude and uniform random phase. Pixel
    ``(a, r)`` draws phases and noise from its own generator seeded by
    ``(seed, a, r)``, so the result does not depend on the channel count
    beyond truncation.
    """
    cfg = cfg or SceneConfig()
    geom = cfg.geometry
    a0, a1 = cfg.building_azimuth
    rows = {flag: _pixel_scatterers(cfg, flag) for flag in (False, True)}
    data = np.zeros((geom.n_elements, cfg.azimuth_size, cfg.range_size), dtype=complex)
    truth = []
    for a in range(cfg.azimuth_size):
        cells = rows[a0 <= a < a1]
        truth_row = []
        for r, cell in enumerate(cells):
            rng = np.random.default_rng([seed, a, r])
            phases = rng.uniform(0.0, 2.0 * math.pi, len(cell))
            scatterers = [Scatterer(s, complex(np.exp(1j * p))) for (s, _), p in zip(cell, phases)]
            _check_span(scatterers, geom)
            data[:, a, r] = _echo(scatterers, geom, cfg.snr_db, rng).g
            truth_row.append(scatterers)
        truth.append(truth_row)
    return Scene(SLCStack(data, geom), truth)


class ReconstructionDiagnostics(NamedTuple):
    pixels: int
    failed: int
    failures: list  # (azimuth, range, message)


class Reconstruction(NamedTuple):
    cloud: PointCloud
    diagnostics: ReconstructionDiagnostics


def worker_count() -> int:
    value = os.environ.get(THREADS_ENV)
    if value is None:
        return 1
    try:
        n = int(value)
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {value!r}") from exc
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {value!r}")
    return n


def reconstruct_volume(stack: SLCStack, algorithm: str = "ivdst", config=None, k_max: int = 1,
                       amplitude_floor: Optional[float] = None, azimuth_spacing: float = 1.0,
                       ground_range_spacing: float = 1.0) -> Reconstruction:
    """Per-pixel spectral estimation merged into one point cloud.

    ``amplitude_floor=None`` uses three times the noise level estimated in
    each pixel. Pixels whose estimator raises are skipped and reported in
    the diagnostics. Pixels run on up to ``TOMO_ANM_THREADS`` threads;
    results are merged in pixel order.
    """
    check_algorithm(algorithm)
    n, n_az, n_rg = stack.shape
    if not 1 <= k_max <= n - 1:
        raise DomainError(f"k_max must lie in [1, {n - 1}], got {k_max}")
    if amplitude_floor is not None and amplitude_floor < 0:
        raise DomainError(f"amplitude_floor must be non-negative, got {amplitude_floor}")
    geom = stack.geometry

    def one(index):
        a, r = divmod(index, n_rg)
        g = stack.data[:, a, r]
        try:
            spec = run_estimator(algorithm, g, k_max, config)
        except (TomoAnmError, np.linalg.LinAlgError, ArithmeticError) as exc:
            return a, r, None, f"{type(exc).__name__}: {exc}"
        floor = amplitude_floor
        if floor is None:
            rms = float(np.linalg.norm(g)) / math.sqrt(n)
            floor = 3.0 * max(noise_level(g, k_max), NOISE_FLOOR * rms)
        mag = np.abs(spec.amplitudes)
        keep = (mag >= floor) & (mag > 0)
        return a, r, (elevation_from_freq(spec.frequencies[keep], geom), mag[keep]), None

    indices = range(n_az * n_rg)
    workers = worker_count()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(one, indices))
        else:
            results = [one(i) for i in indices]

    cols: list[list] = [[], [], [], []]
    failures = []
    for a, r, found, err in results:
        if err is not None:
            failures.append((a, r, err))
            continue
        heights, mags = found
        cols[0].extend([a] * heights.size)
        cols[1].extend([r] * heights.size)
        cols[2].extend(heights.tolist())
        cols[3].extend(mags.tolist())
    cloud = PointCloud(*cols, azimuth_spacing=azimuth_spacing, ground_range_spacing=ground_range_spacing)
    return Reconstruction(cloud, ReconstructionDiagnostics(n_az * n_rg, len(failures), failures))
