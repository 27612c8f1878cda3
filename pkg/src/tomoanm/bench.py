"""Scoring and Monte-Carlo benchmark sweeps.

Every trial draws its targets and noise from a generator seeded by
``(master seed, grid index, trial index)``; all algorithms in a trial see
the same observation. Runtime is measured around the estimator call only.
"""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConfigError, DomainError, TomoAnmError
from .estimators.grid import GridConfig
from .estimators.registry import ALGORITHMS, check_algorithm, run_estimator
from .spectral import LineSpectrum, circular_distance
from .tomosar import (
    ArrayGeometry,
    PointCloud,
    SceneConfig,
    freq_from_elevation,
    reconstruct_volume,
    simulate_building_scene,
)

MISSING_PENALTY = 0.5
SWEEP_KINDS = ("snr", "elements", "sparseness", "scene")


class Match(NamedTuple):
    rmse: float
    pairs: list  # (estimate index, truth index)
    errors: np.ndarray  # matched distances, then one 0.5 per unmatched line
    unmatched: int


def circular_match_rmse(est, truth) -> Match:
    """RMSE of circular frequency errors under the best one-to-one matching.

    The matching minimizes the sum of squared circular distances. When the
    counts differ, every line left without a partner contributes an error
    of 0.5 cycles and ``unmatched`` reports how many there were.
    """
    est = np.asarray(est, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    unmatched = abs(est.size - truth.size)
    if est.size == 0 or truth.size == 0:
        errors = np.full(unmatched, MISSING_PENALTY)
        pairs = []
    else:
        dist = circular_distance(est[:, None], truth[None, :])
        rows, cols = linear_sum_assignment(dist ** 2)
        pairs = list(zip(rows.tolist(), cols.tolist()))
        errors = np.concatenate([dist[rows, cols], np.full(unmatched, MISSING_PENALTY)])
    rmse = float(math.sqrt(np.mean(errors ** 2))) if errors.size else 0.0
    return Match(rmse, pairs, errors, unmatched)


def crlb_single_tone(n: int, snr_db: float) -> float:
    """Frequency variance bound ``6 / ((2 pi)^2 snr n (n^2 - 1))`` for one complex tone."""
    if n < 2:
        raise DomainError(f"CRLB needs n >= 2, got {n}")
    snr = 10.0 ** (snr_db / 10.0)
    return 6.0 / ((2.0 * math.pi) ** 2 * snr * n * (n * n - 1))


@dataclass(frozen=True)
class TrialResult:
    algorithm: str
    truth: LineSpectrum
    estimate: LineSpectrum
    runtime: float
    seed: tuple
    n_elements: int
    failed: bool = False

    def __post_init__(self):
        if not self.runtime >= 0:
            raise DomainError(f"runtime must be non-negative, got {self.runtime}")

    @property
    def match(self) -> Match:
        return circular_match_rmse(self.estimate.frequencies, self.truth.frequencies)


def success_rate(trials: Sequence[TrialResult], eps: Optional[float] = None) -> float:
    """Fraction of trials whose largest matched error is below ``eps``.

    ``eps=None`` uses half a Rayleigh bin, ``1 / (2 N)``, per trial.
    """
    if len(trials) == 0:
        raise DomainError("success rate of an empty trial list")
    if eps is not None and not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    hits = 0
    for t in trials:
        errors = t.match.errors
        worst = float(errors.max()) if errors.size else 0.0
        hits += worst < (eps if eps is not None else 1.0 / (2 * t.n_elements))
    return hits / len(trials)


class SweepRow(NamedTuple):
    param: float
    algorithm: str
    rmse_mean: float
    success_rate: float
    runtime_mean_s: float
    runtime_median_s: float
    trials: int


@dataclass(frozen=True)
class SweepTable:
    """One row per (grid value, algorithm), sorted by both.

    ``rmse_mean`` is the root of the squared matched error averaged over
    trials: cycles for the spectral sweeps, metres of elevation for scenes.
    """

    kind: str
    rows: tuple

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise ConfigError(f"unknown sweep kind {self.kind!r}")
        rows = tuple(sorted((SweepRow(*r) for r in self.rows), key=lambda r: (r.param, r.algorithm)))
        for r in rows:
            if r.trials < 1 or not 0.0 <= r.success_rate <= 1.0:
                raise DomainError(f"invalid sweep row {r}")
        object.__setattr__(self, "rows", rows)

    def __len__(self) -> int:
        return len(self.rows)

    def algorithms(self) -> list[str]:
        return sorted({r.algorithm for r in self.rows})

    def series(self, algorithm: str) -> list[SweepRow]:
        return [r for r in self.rows if r.algorithm == algorithm]


def _default_grid(kind: str) -> tuple:
    return {
        "snr": tuple(float(s) for s in range(-10, 41, 5)),
        "elements": (4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0),
        "sparseness": (0.1, 0.2, 0.25, 0.3, 0.4, 0.5),
        "scene": (30.0,),
    }[kind]


@dataclass(frozen=True)
class SweepConfig:
    """Monte-Carlo sweep setup.

    ``grid`` holds SNRs in dB (snr, scene), element counts (elements) or
    ratios K/N (sparseness). ``frequency=None`` draws fresh random targets
    per trial; a value pins a single target there. ``snr_db=None`` is
    noiseless for the non-SNR sweeps.
    """

    kind: str = "snr"
    grid: Optional[tuple] = None
    algorithms: tuple = ALGORITHMS
    trials: int = 200
    n_elements: int = 8
    targets: int = 1
    snr_db: Optional[float] = 30.0
    frequency: Optional[float] = None
    min_separation: Optional[float] = None
    grid_factor: int = 8
    eps: Optional[float] = None
    configs: dict = field(default_factory=dict)
    scene: Optional[SceneConfig] = None
    k_max: int = 3

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise ConfigError(f"kind must be one of {', '.join(SWEEP_KINDS)}, got {self.kind!r}")
        grid = _default_grid(self.kind) if self.grid is None else tuple(float(v) for v in self.grid)
        if not grid:
            raise ConfigError("grid must be non-empty")
        object.__setattr__(self, "grid", grid)
        if not self.algorithms:
            raise ConfigError("algorithms must be non-empty")
        for a in self.algorithms:
            check_algorithm(a)
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.n_elements < 2:
            raise ConfigError(f"n_elements must be >= 2, got {self.n_elements}")
        if self.targets < 1:
            raise ConfigError(f"targets must be >= 1, got {self.targets}")
        if self.frequency is not None and not 0 <= self.frequency < 1:
            raise ConfigError(f"frequency must lie in [0, 1), got {self.frequency}")
        if self.grid_factor < 1:
            raise ConfigError(f"grid_factor must be >= 1, got {self.grid_factor}")


def trial_rng(seed: int, grid_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, grid_index, trial])


def random_frequencies(rng: np.random.Generator, k: int, min_sep: float) -> np.ndarray:
    """``k`` uniformly placed frequencies with circular separation >= ``min_sep``."""
    slack = 1.0 - k * min_sep
    if slack < 0:
        raise DomainError(f"{k} frequencies cannot be {min_sep} apart on the unit circle")
    base = np.sort(rng.uniform(0.0, slack, k)) + min_sep * np.arange(k)
    return np.sort(np.mod(base + rng.uniform(), 1.0))


def draw_trial(rng: np.random.Generator, n: int, k: int, snr_db: Optional[float],
               frequency: Optional[float] = None, min_sep: Optional[float] = None):
    """Truth spectrum with unit-magnitude random-phase amplitudes, and its noisy samples."""
    if frequency is not None and k == 1:
        freqs = np.array([frequency])
    else:
        freqs = random_frequencies(rng, k, 1.0 / n if min_sep is None else min_sep)
    amps = np.exp(2j * np.pi * rng.uniform(size=k))
    truth = LineSpectrum(freqs, amps)
    g = truth.synthesize(n)
    sigma = 0.0
    if snr_db is not None:
        sigma = math.sqrt(k / 10.0 ** (snr_db / 10.0))
        w = rng.standard_normal((n, 2))
        g = g + sigma * (w[:, 0] + 1j * w[:, 1]) / math.sqrt(2.0)
    return truth, g, sigma


def _estimator_config(cfg: SweepConfig, algorithm: str, n: int, sigma: float):
    base = cfg.configs.get(algorithm)
    if algorithm in ("omp", "ist"):
        base = base or GridConfig(grid_size=cfg.grid_factor * n)
        if base.noise_sigma is None:
            base = replace(base, noise_sigma=sigma)
    return base


def timed_estimate(algorithm: str, g, k: int, config=None):
    """``(spectrum, seconds, failed)``; estimator errors yield an empty spectrum."""
    start = time.perf_counter()
    try:
        spec = run_estimator(algorithm, g, k, config)
        failed = False
    except (TomoAnmError, np.linalg.LinAlgError, ArithmeticError):
        spec, failed = LineSpectrum.empty(), True
    return spec, time.perf_counter() - start, failed


def _summarize(param: float, algorithm: str, trials: list[TrialResult], eps) -> SweepRow:
    sq = np.concatenate([t.match.errors ** 2 for t in trials])
    runtimes = [t.runtime for t in trials]
    return SweepRow(param, algorithm, float(math.sqrt(np.mean(sq))) if sq.size else 0.0,
                    success_rate(trials, eps), statistics.fmean(runtimes),
                    statistics.median(runtimes), len(trials))


def run_trials(cfg: SweepConfig, seed: int = 0) -> dict:
    """All trials of a spectral sweep keyed by ``(grid value, algorithm)``."""
    if cfg.kind == "scene":
        raise ConfigError("scene sweeps have no per-trial spectra; use run_sweep")
    out: dict = {}
    for gi, value in enumerate(cfg.grid):
        n, k, snr = cfg.n_elements, cfg.targets, cfg.snr_db
        if cfg.kind == "snr":
            snr = value
        elif cfg.kind == "elements":
            n = int(round(value))
            if n < 2:
                raise ConfigError(f"grid value {value} is below 2 elements")
        else:
            k = max(1, int(round(value * n)))
        if k >= n:
            raise ConfigError(f"{k} targets need more than {n} elements")
        for a in cfg.algorithms:
            out[(value, a)] = []
        for t in range(cfg.trials):
            rng = trial_rng(seed, gi, t)
            truth, g, sigma = draw_trial(rng, n, k, snr, cfg.frequency, cfg.min_separation)
            for a in cfg.algorithms:
                spec, dt, failed = timed_estimate(a, g, k, _estimator_config(cfg, a, n, sigma))
                out[(value, a)].append(TrialResult(a, truth, spec, dt, (seed, gi, t), n, failed))
    return out


class SceneScore(NamedTuple):
    rmse_m: float
    rmse_freq: float
    matched_rmse_m: float
    truth_count: int
    missed: int
    spurious: int
    success_rate: float


def score_scene(cloud: PointCloud, truth: list, geom: ArrayGeometry,
                eps: Optional[float] = None) -> SceneScore:
    """Per-pixel matched elevation error of a point cloud against the truth map.

    In each pixel the strongest points, up to the true scatterer count, are
    matched to the truth; leftover points count as spurious and unmatched
    truth as missed (0.5 cycles of error each).
    """
    eps = 1.0 / (2 * geom.n_elements) if eps is None else eps
    by_pixel: dict = {}
    for a, r, h, i in zip(cloud.azimuth, cloud.range_bin, cloud.height, cloud.intensity):
        by_pixel.setdefault((int(a), int(r)), []).append((i, h))
    sq_all, sq_matched = [], []
    missed = spurious = hits = total = 0
    for a, row in enumerate(truth):
        for r, scatterers in enumerate(row):
            pts = sorted(by_pixel.get((a, r), []), key=lambda p: -p[0])
            k = len(scatterers)
            spurious += max(0, len(pts) - k)
            est = freq_from_elevation(np.array([h for _, h in pts[:k]]), geom)
            ref = freq_from_elevation(np.array([s.elevation for s in scatterers]), geom)
            if k == 0:
                continue
            m = circular_match_rmse(est, ref)
            total += k
            missed += m.unmatched
            sq_all.extend((m.errors ** 2).tolist())
            matched = m.errors[: len(m.pairs)]
            sq_matched.extend((matched ** 2).tolist())
            hits += int(np.sum(matched < eps))
    span = geom.unambiguous_span
    rmse_f = math.sqrt(statistics.fmean(sq_all)) if sq_all else 0.0
    matched_f = math.sqrt(statistics.fmean(sq_matched)) if sq_matched else 0.0
    return SceneScore(rmse_f * span, rmse_f, matched_f * span, total, missed, spurious,
                      hits / total if total else 1.0)


class SceneRun(NamedTuple):
    algorithm: str
    cloud: PointCloud
    score: SceneScore
    runtime: float
    failed_pixels: int


def run_scene(cfg: SweepConfig, seed: int = 0) -> list[list[SceneRun]]:
    """Reconstruct one simulated scene per (grid SNR, trial) with every algorithm."""
    base = cfg.scene or SceneConfig()
    runs = []
    for gi, snr in enumerate(cfg.grid):
        scene_cfg = replace(base, snr_db=snr)
        per_grid = []
        for t in range(cfg.trials):
            scene = simulate_building_scene(scene_cfg, seed=int(np.random.SeedSequence([seed, gi, t]).generate_state(1)[0]))
            for a in cfg.algorithms:
                conf = cfg.configs.get(a)
                if a in ("omp", "ist") and conf is None:
                    conf = GridConfig(grid_size=cfg.grid_factor * scene_cfg.geometry.n_elements)
                start = time.perf_counter()
                rec = reconstruct_volume(scene.stack, a, conf, k_max=cfg.k_max,
                                         azimuth_spacing=scene_cfg.azimuth_spacing,
                                         ground_range_spacing=scene_cfg.ground_range_spacing)
                dt = time.perf_counter() - start
                score = score_scene(rec.cloud, scene.truth, scene_cfg.geometry, cfg.eps)
                per_grid.append(SceneRun(a, rec.cloud, score, dt, rec.diagnostics.failed))
        runs.append(per_grid)
    return runs


def summarize_scene(cfg: SweepConfig, runs: list) -> SweepTable:
    """Rows of elevation RMSE (m), detection rate and runtime per scene run."""
    rows = []
    for value, per_grid in zip(cfg.grid, runs):
        for a in cfg.algorithms:
            mine = [r for r in per_grid if r.algorithm == a]
            times = [r.runtime for r in mine]
            rows.append(SweepRow(value, a, math.sqrt(statistics.fmean(r.score.rmse_m ** 2 for r in mine)),
                                 statistics.fmean(r.score.success_rate for r in mine),
                                 statistics.fmean(times), statistics.median(times), len(mine)))
    return SweepTable(cfg.kind, tuple(rows))


def run_sweep(cfg: SweepConfig, seed: int = 0) -> SweepTable:
    """Monte-Carlo sweep summarized per (grid value, algorithm)."""
    if cfg.kind == "scene":
        return summarize_scene(cfg, run_scene(cfg, seed))
    rows = [_summarize(value, a, trials, cfg.eps) for (value, a), trials in run_trials(cfg, seed).items()]
    return SweepTable(cfg.kind, tuple(rows))
