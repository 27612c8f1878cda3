"""Gridded compressed-sensing baselines: OMP and IST over the dictionary
``A_M = [a(0), a(1/M), ..., a((M-1)/M)]``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DomainError
from ..spectral import LineSpectrum, steering_matrix
from .ivdst import NOISE_FLOOR, noise_level

GRID_FACTOR = 8


@dataclass(frozen=True)
class GridConfig:
    """Dictionary size and baseline settings.

    ``grid_size=None`` selects ``8 N``. ``ist_threshold=None`` selects
    ``3 sigma sqrt(log M)``, with ``sigma`` either ``noise_sigma`` or an
    estimate from the data.
    """

    grid_size: Optional[int] = None
    ist_threshold: Optional[float] = None
    ist_max_iters: int = 5000
    omp_sparsity: int = 1
    noise_sigma: Optional[float] = None

    def __post_init__(self):
        if self.grid_size is not None and self.grid_size < 1:
            raise DomainError(f"grid_size must be positive, got {self.grid_size}")
        if self.ist_threshold is not None and not self.ist_threshold > 0:
            raise DomainError(f"ist_threshold must be positive, got {self.ist_threshold}")
        if self.ist_max_iters < 1:
            raise DomainError(f"ist_max_iters must be >= 1, got {self.ist_max_iters}")
        if self.omp_sparsity < 1:
            raise DomainError(f"omp_sparsity must be >= 1, got {self.omp_sparsity}")
        if self.noise_sigma is not None and self.noise_sigma < 0:
            raise DomainError(f"noise_sigma must be non-negative, got {self.noise_sigma}")

    def grid(self, n: int) -> int:
        m = GRID_FACTOR * n if self.grid_size is None else self.grid_size
        if m < n:
            raise DomainError(f"grid size {m} is smaller than the {n} array elements")
        return m


def dictionary(n: int, m: int) -> np.ndarray:
    return steering_matrix(np.arange(m) / m, n)


def omp_grid(g, k: int, config: Optional[GridConfig] = None) -> LineSpectrum:
    """Orthogonal matching pursuit with a least-squares refit after every pick.

    Stops early once the residual vanishes, so ``k`` may exceed the number of
    atoms needed to explain ``g`` (up to ``k = M``).
    """
    cfg = config or GridConfig()
    g = np.asarray(g, dtype=complex).ravel()
    n = g.size
    m = cfg.grid(n)
    if not 1 <= k <= m:
        raise DomainError(f"sparsity {k} must lie in [1, {m}]")
    a = dictionary(n, m)
    norm_g = np.linalg.norm(g)
    support: list[int] = []
    coef = np.zeros(0, dtype=complex)
    residual = g.copy()
    while len(support) < k and np.linalg.norm(residual) > 1e-12 * norm_g:
        corr = np.abs(a.conj().T @ residual)
        corr[support] = -1.0
        support.append(int(np.argmax(corr)))
        coef, *_ = np.linalg.lstsq(a[:, support], g, rcond=None)
        residual = g - a[:, support] @ coef
    order = np.argsort(support)
    idx = np.asarray(support, dtype=int)[order]
    return LineSpectrum(idx / m, coef[order])


def default_ist_threshold(g, m: int, sigma: Optional[float] = None) -> float:
    g = np.asarray(g, dtype=complex).ravel()
    rms = float(np.linalg.norm(g)) / math.sqrt(g.size)
    if sigma is None:
        sigma = noise_level(g, 1)
    return 3.0 * max(sigma, NOISE_FLOOR * rms) * math.sqrt(math.log(m))


def ist_coefficients(g, config: Optional[GridConfig] = None) -> np.ndarray:
    """Grid coefficients ``x`` (length ``M``) from iterative soft-thresholding."""
    cfg = config or GridConfig()
    g = np.asarray(g, dtype=complex).ravel()
    m = cfg.grid(g.size)
    thr = cfg.ist_threshold
    if thr is None:
        thr = default_ist_threshold(g, m, cfg.noise_sigma)
    x = np.zeros(m, dtype=complex)
    if thr == 0.0:
        return x
    a = dictionary(g.size, m)
    lip = float(np.linalg.eigvalsh(a @ a.conj().T)[-1])
    cut = thr / lip
    for _ in range(cfg.ist_max_iters):
        z = x + a.conj().T @ (g - a @ x) / lip
        mag = np.abs(z)
        x_new = z * (np.maximum(mag - cut, 0.0) / np.where(mag > 0, mag, 1.0))
        change = np.linalg.norm(x_new - x)
        scale = np.linalg.norm(x)
        x = x_new
        if change <= 1e-8 * scale or (scale == 0.0 and change == 0.0):
            break
    return x


def ist_grid(g, config: Optional[GridConfig] = None) -> LineSpectrum:
    """IST support: grid components whose amplitude exceeds the threshold."""
    cfg = config or GridConfig()
    g = np.asarray(g, dtype=complex).ravel()
    m = cfg.grid(g.size)
    thr = cfg.ist_threshold
    if thr is None:
        thr = default_ist_threshold(g, m, cfg.noise_sigma)
    x = ist_coefficients(g, GridConfig(m, thr if thr > 0 else None, cfg.ist_max_iters,
                                       cfg.omp_sparsity, cfg.noise_sigma))
    idx = np.flatnonzero(np.abs(x) > thr)
    return LineSpectrum(idx / m, x[idx])


def strongest_peaks(spectrum: LineSpectrum, k: int, grid_size: int) -> LineSpectrum:
    """The ``k`` largest circular local maxima of a gridded spectrum.

    A single off-grid line spreads over neighbouring grid cells; keeping
    only local maxima reports it once.
    """
    if len(spectrum) == 0:
        return spectrum
    mag = np.zeros(grid_size)
    idx = np.rint(spectrum.frequencies * grid_size).astype(int) % grid_size
    mag[idx] = np.abs(spectrum.amplitudes)
    left, right = np.roll(mag, 1), np.roll(mag, -1)
    peak = (mag > 0) & (mag >= left) & (mag >= right)
    # plateaus count once
    peak &= ~((mag == left) & np.roll(peak, 1))
    cand = np.flatnonzero(peak[idx])
    keep = cand[np.argsort(-mag[idx[cand]], kind="stable")[:k]]
    keep = np.sort(keep)
    return LineSpectrum(spectrum.frequencies[keep], spectrum.amplitudes[keep])
