"""Dense linear-algebra kernels for atomic norm line spectral estimation.

Frequencies are normalized to the circle ``[0, 1)``. A steering vector of
length ``n`` at frequency ``f`` has entries ``exp(2j*pi*f*m)`` for
``m = 0 .. n-1``.

Hermitian Toeplitz matrices are stored by their first row ``u``: entry
``(i, j)`` equals ``u[j - i]`` above the diagonal and ``conj(u[i - j])``
below it, so ``a(f) a(f)^H`` has first row ``exp(-2j*pi*f*k)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import (
    DomainError,
    IllConditionedError,
    NotHermitianError,
    RankDeficientWarning,
    ShapeError,
)

HERMITIAN_TOL = 1e-8
RANK_RTOL = 1e-9


def steering_vector(f: float, n: int) -> np.ndarray:
    """Array manifold of a uniform linear array.

    Parameters
    ----------
    f : float
        Normalized frequency in ``[0, 1)``.
    n : int
        Number of elements.

    Returns
    -------
    a : ndarray of complex, shape (n,)
    """
    if not 0.0 <= f < 1.0:
        raise DomainError(f"frequency {f!r} outside [0, 1)")
    if n < 1:
        raise DomainError(f"element count must be positive, got {n}")
    return np.exp(2j * np.pi * f * np.arange(n))


def steering_matrix(freqs, n: int, rows=None) -> np.ndarray:
    """Columns are steering vectors; ``rows`` optionally selects elements.

    No domain check on ``freqs``, which makes this usable on grids and
    inside optimizers.
    """
    m = np.arange(n) if rows is None else np.asarray(rows)
    return np.exp(2j * np.pi * np.outer(m, np.atleast_1d(freqs)))


def wrap_frequency(f):
    """Reduce frequencies onto ``[0, 1)``."""
    w = np.mod(f, 1.0)
    # mod can round up to exactly 1.0 for tiny negative inputs
    return np.where(w >= 1.0, 0.0, w)


def circular_distance(f, g):
    d = np.mod(np.abs(np.asarray(f) - np.asarray(g)), 1.0)
    return np.minimum(d, 1.0 - d)


@dataclass(frozen=True)
class ToeplitzHermitian:
    """Hermitian Toeplitz matrix held by its first row."""

    first_row: np.ndarray

    def __post_init__(self):
        u = np.array(self.first_row, dtype=complex).ravel()
        if u.size < 1:
            raise ShapeError("Toeplitz first row must be non-empty")
        if not np.all(np.isfinite(u)):
            raise DomainError("Toeplitz first row has non-finite entries")
        u[0] = u[0].real
        u.setflags(write=False)
        object.__setattr__(self, "first_row", u)

    @property
    def size(self) -> int:
        return self.first_row.size

    def matrix(self) -> np.ndarray:
        return _toeplitz_from_row(self.first_row)

    def trace(self) -> float:
        return float(self.size * self.first_row[0].real)


class EigenPairs(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class LineSpectrum:
    """A finite set of spectral lines (frequency, complex amplitude)."""

    frequencies: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        f = np.array(self.frequencies, dtype=float).ravel()
        c = np.array(self.amplitudes, dtype=complex).ravel()
        if f.shape != c.shape:
            raise ShapeError("frequencies and amplitudes differ in length")
        if np.any((f < 0) | (f >= 1)):
            raise DomainError("line frequencies must lie in [0, 1)")
        if f.size > 1 and np.unique(f).size != f.size:
            raise DomainError("line frequencies must be pairwise distinct")
        f.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "amplitudes", c)

    @classmethod
    def empty(cls) -> "LineSpectrum":
        return cls(np.zeros(0), np.zeros(0, dtype=complex))

    def __len__(self) -> int:
        return self.frequencies.size

    def synthesize(self, n: int) -> np.ndarray:
        """Noiseless observation ``sum_k c_k a(f_k)`` on ``n`` elements."""
        return steering_matrix(self.frequencies, n) @ self.amplitudes

    def strongest(self, k: int) -> "LineSpectrum":
        """The ``k`` lines of largest magnitude, in frequency order."""
        keep = np.argsort(-np.abs(self.amplitudes), kind="stable")[:k]
        keep = np.sort(keep)
        return LineSpectrum(self.frequencies[keep], self.amplitudes[keep])

    def above(self, floor: float) -> "LineSpectrum":
        keep = np.abs(self.amplitudes) >= floor
        return LineSpectrum(self.frequencies[keep], self.amplitudes[keep])


def _square(h, name="matrix") -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 1:
        raise ShapeError(f"{name} must be square and non-empty, got shape {h.shape}")
    return h


@lru_cache(maxsize=64)
def _lag_index(n: int):
    i, j = np.indices((n, n))
    return j - i + n - 1


@lru_cache(maxsize=64)
def _superdiagonals(n: int):
    """Flat indices of the upper triangle grouped by lag, group offsets and weights."""
    lag = (np.arange(n)[None, :] - np.arange(n)[:, None]).ravel()
    order = np.argsort(lag, kind="stable")
    order = order[lag[order] >= 0]
    starts = np.searchsorted(lag[order], np.arange(n))
    return order, starts, 0.5 / (n - np.arange(n))


def _toeplitz_from_row(u: np.ndarray) -> np.ndarray:
    full = np.concatenate([u[:0:-1].conj(), u])
    return full[_lag_index(u.size)]


def _toeplitz_row(h: np.ndarray) -> np.ndarray:
    """First row of the Toeplitz projection of the Hermitian part of ``h``."""
    order, starts, weight = _superdiagonals(h.shape[0])
    u = np.add.reduceat((h + h.conj().T).ravel()[order], starts) * weight
    u[0] = u[0].real
    return u


def toeplitz_matrix(first_row) -> np.ndarray:
    return ToeplitzHermitian(first_row).matrix()


def project_to_toeplitz(h) -> ToeplitzHermitian:
    """Frobenius-nearest Hermitian Toeplitz matrix.

    Entry ``k`` of the first row is the mean of the ``k``-th superdiagonal
    of the Hermitian part ``(h + h^H) / 2``.
    """
    return ToeplitzHermitian(_toeplitz_row(_square(h)))


def hermitian_part(h, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """``(h + h^H) / 2``, refusing inputs whose relative asymmetry exceeds ``tol``."""
    h = _square(h)
    scale = np.linalg.norm(h)
    asym = np.linalg.norm(h - h.conj().T)
    if scale > 0 and asym > tol * scale:
        raise NotHermitianError(
            f"relative asymmetry {asym / scale:.3e} exceeds tolerance {tol:.1e}"
        )
    return 0.5 * (h + h.conj().T)


def eig_hermitian(h) -> EigenPairs:
    """Eigendecomposition with eigenvalues sorted in descending order."""
    values, vectors = np.linalg.eigh(hermitian_part(h))
    return EigenPairs(values[::-1].copy(), vectors[:, ::-1].copy())


def numerical_rank(values) -> int:
    """Count of eigenvalues above ``1e-9`` times the largest one."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0
    top = values.max()
    if top <= 0:
        return 0
    return int(np.count_nonzero(values > RANK_RTOL * top))


def shrink_eigenvalues(values, tau: float) -> np.ndarray:
    """Soft-threshold eigenvalues: ``max(value - tau, 0)``."""
    if tau < 0:
        raise DomainError(f"shrinkage threshold must be non-negative, got {tau}")
    values = np.asarray(values, dtype=float)
    return np.maximum(values - tau, 0.0)


def psd_truncate(z, r: int) -> np.ndarray:
    """Keep the ``r`` algebraically largest eigenpairs, clamping negatives to zero."""
    z = hermitian_part(z)
    n = z.shape[0]
    if not 1 <= r <= n:
        raise DomainError(f"truncation rank {r} outside [1, {n}]")
    return _psd_truncate(z, r)


def _psd_truncate(z: np.ndarray, r: int) -> np.ndarray:
    # a full eigh beats a partial one at the sizes used here (N <= 256)
    values, vectors = np.linalg.eigh(z)
    values = np.maximum(values[-r:], 0.0)
    vectors = vectors[:, -r:]
    out = (vectors * values) @ vectors.conj().T
    return 0.5 * (out + out.conj().T)


def _polish(f: float, coeffs: np.ndarray, lags: np.ndarray, steps: int = 8) -> float:
    # roots on the circle are double, so np.roots is only sqrt(eps) accurate;
    # Newton on the derivative of the real null spectrum restores full accuracy
    w = 2j * np.pi * lags
    for _ in range(steps):
        z = coeffs * np.exp(w * f)
        d1, d2 = float(np.real(np.sum(w * z))), float(np.real(np.sum(w * w * z)))
        if d2 <= 0.0:
            break
        step = d1 / d2
        if abs(step) > 1e-3:
            break
        f -= step
        if abs(step) < 1e-15:
            break
    return float(wrap_frequency(f))


def _root_music(noise: np.ndarray, k: int) -> np.ndarray:
    n = noise.shape[0]
    c = noise @ noise.conj().T
    # a(f)^H C a(f) = sum_d z^d * (sum of d-th superdiagonal), z = exp(2j pi f)
    coeffs = np.array([np.trace(c, offset=d) for d in range(n - 1, -n, -1)])
    roots = np.roots(coeffs)
    lags = np.arange(n - 1, -n, -1)
    roots = roots[np.abs(roots) <= 1.0 + 1e-12] if np.any(np.abs(roots) <= 1.0) else roots
    order = np.argsort(np.abs(1.0 - np.abs(roots)))
    chosen: list[float] = []
    for z in roots[order]:
        f = float(_polish(wrap_frequency(np.angle(z) / (2 * np.pi)), coeffs, lags))
        # a double root on the circle splits into two nearby roots that polish to one null
        if any(circular_distance(f, g) < 1e-7 for g in chosen):
            continue
        chosen.append(f)
        if len(chosen) == k:
            break
    return np.sort(np.array(chosen))


def vandermonde_decompose(t: ToeplitzHermitian, k: int) -> np.ndarray:
    """Frequencies of the ``k`` strongest atoms of a PSD Toeplitz matrix (root-MUSIC).

    Warns with :class:`RankDeficientWarning` when the numerical rank of ``t``
    is below ``k``; the returned frequencies are then a best effort.
    """
    n = t.size
    if not 1 <= k < n:
        raise DomainError(f"model order {k} must satisfy 1 <= k < {n}")
    values, vectors = eig_hermitian(t.matrix())
    rank = numerical_rank(values)
    if rank < k:
        warnings.warn(
            f"Toeplitz matrix has numerical rank {rank} < {k} requested lines",
            RankDeficientWarning,
            stacklevel=2,
        )
    return _root_music(vectors[:, k:], k)


def recover_amplitudes(y, freqs, rows=None, max_cond: float = 1e12) -> LineSpectrum:
    """Least-squares amplitudes of the given lines in ``y``.

    ``rows`` lists the element indices ``y`` was observed on; by default
    ``y`` covers elements ``0 .. len(y)-1``.
    """
    y = np.asarray(y, dtype=complex).ravel()
    freqs = np.asarray(freqs, dtype=float).ravel()
    if freqs.size == 0:
        return LineSpectrum.empty()
    if freqs.size > y.size:
        raise DomainError(f"{freqs.size} lines cannot be fit to {y.size} samples")
    n = y.size if rows is None else int(np.max(rows)) + 1
    a = steering_matrix(freqs, n, rows)
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > max_cond:
        raise IllConditionedError(
            f"steering matrix condition number {cond:.3e} exceeds {max_cond:.1e}"
        )
    amps, *_ = np.linalg.lstsq(a, y, rcond=None)
    return LineSpectrum(freqs, amps)
