"""Accelerated atomic norm minimization by iterative Vandermonde
decomposition and shrinkage-thresholding (IVDST).

Each iteration replaces the interior-point SDP solve with a momentum step,
a gradient step on the data fit, eigenvalue shrinkage of the Toeplitz block
and a low-rank PSD projection of the bordered matrix
``[[tr(L), y^H], [y, T]]``. The lower-right block of the projection is
mapped back onto the Toeplitz subspace at the end of every iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

from ..errors import DivergenceError, DomainError, ShapeError
from ..spectral import (
    LineSpectrum,
    ToeplitzHermitian,
    _psd_truncate,
    _toeplitz_from_row,
    _toeplitz_row,
    numerical_rank,
    recover_amplitudes,
    vandermonde_decompose,
)
from .state import AnmState, SamplingMask, bordered

DIVERGENCE_FACTOR = 1e6
# relative noise floor assumed for noiseless data
NOISE_FLOOR = 1e-3


@dataclass(frozen=True)
class IvdstConfig:
    """Parameters of the IVDST iteration.

    Attributes
    ----------
    step_size : float
        Gradient step ``delta`` on the data-fit term, in ``(0, 1]``.
    shrink_weight : float or None
        Final eigenvalue threshold ``tau``. ``None`` selects
        ``delta * sqrt(N) * sigma``, with ``sigma`` estimated by
        :func:`noise_level`.
    max_iters, rel_tol : int, float
        Stop when the relative change of ``(y, v, T)`` drops below
        ``rel_tol`` at the final threshold, or after ``max_iters``.
    continuation : float
        The threshold starts at ``max(tau, rms(g) / 2)`` and is multiplied
        by this factor every iteration until it reaches ``tau``.
        ``1.0`` keeps it at ``tau`` throughout.
    restart : bool
        Reset the momentum sequence when a step opposes the extrapolation
        direction.
    """

    step_size: float = 1.0
    shrink_weight: Optional[float] = None
    max_iters: int = 2000
    rel_tol: float = 1e-6
    continuation: float = 0.8
    restart: bool = True

    def __post_init__(self):
        if not 0 < self.step_size <= 1:
            raise DomainError(f"step_size must lie in (0, 1], got {self.step_size}")
        if self.shrink_weight is not None and not self.shrink_weight > 0:
            raise DomainError(f"shrink_weight must be positive, got {self.shrink_weight}")
        if self.max_iters < 1:
            raise DomainError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if not 0 < self.continuation <= 1:
            raise DomainError(f"continuation must lie in (0, 1], got {self.continuation}")


class IvdstResult(NamedTuple):
    toeplitz: ToeplitzHermitian
    spectrum: LineSpectrum
    iterations: int
    state: AnmState
    converged: bool
    shrink_weight: float


def momentum_weights(count: int) -> np.ndarray:
    """``t_0 .. t_{count-1}`` of the recursion ``t_i = (1 + sqrt(4 t_{i-1}^2 + 1)) / 2``."""
    t = np.empty(count)
    t[0] = 1.0
    for i in range(1, count):
        t[i] = _next_weight(t[i - 1])
    return t


def _next_weight(t: float) -> float:
    return 0.5 * (1.0 + math.sqrt(4.0 * t * t + 1.0))


def noise_level(g, k: int) -> float:
    """Noise standard deviation of ``g`` assuming ``k`` spectral lines.

    A sum of ``k`` complex exponentials has a rank-``k`` Hankel matrix, so
    the energy in the trailing singular values is noise. Returns 0 when the
    Hankel matrix has no more than ``k`` singular values.
    """
    g = np.asarray(g, dtype=complex).ravel()
    rows = g.size // 2 + 1
    cols = g.size - rows + 1
    if min(rows, cols) <= k:
        return 0.0
    s = np.linalg.svd(scipy.linalg.hankel(g[:rows], g[rows - 1:]), compute_uv=False)
    return math.sqrt(float(np.sum(s[k:] ** 2)) / ((rows - k) * (cols - k)))


def default_shrink_weight(g, k: int, n: int, step_size: float = 1.0) -> float:
    g = np.asarray(g, dtype=complex).ravel()
    rms = float(np.linalg.norm(g)) / math.sqrt(max(g.size, 1))
    sigma = max(noise_level(g, k), NOISE_FLOOR * rms)
    return step_size * math.sqrt(n) * sigma


def _relative_change(new, old) -> float:
    num = sum(np.linalg.norm(a - b) ** 2 for a, b in zip(new, old))
    den = sum(np.linalg.norm(b) ** 2 for b in old)
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return math.sqrt(num / den)


def _norm(theta) -> float:
    return math.sqrt(sum(np.linalg.norm(a) ** 2 for a in theta))


def _opposes(bar, new, old) -> bool:
    """Gradient restart test: the step ``new - old`` points against ``bar - new``."""
    return sum(float(np.vdot(b - a, a - c).real) for b, a, c in zip(bar, new, old)) > 0


def ivdst_anm(g, mask: Optional[SamplingMask] = None, k: int = 1,
              config: Optional[IvdstConfig] = None) -> IvdstResult:
    """Estimate ``k`` spectral lines from (possibly subsampled) samples ``g``.

    Parameters
    ----------
    g : array_like of complex
        Samples on the observed elements of the array.
    mask : SamplingMask, optional
        Observed elements; all ``len(g)`` elements by default.
    k : int
        Model order, ``1 <= k < N``.
    config : IvdstConfig, optional

    Returns
    -------
    IvdstResult
        Hermitian PSD Toeplitz matrix, line spectrum with least-squares
        amplitudes, iteration count, final ``(y, v, T)`` state and the
        threshold used.
    """
    cfg = config or IvdstConfig()
    g = np.asarray(g, dtype=complex).ravel()
    mask = mask or SamplingMask.full(g.size)
    if g.size != mask.count:
        raise ShapeError(f"{g.size} samples for {mask.count} observed indices")
    n = mask.ambient_size
    if not 1 <= k < n:
        raise DomainError(f"model order {k} must satisfy 1 <= k < {n}")
    delta = cfg.step_size

    tau = cfg.shrink_weight
    if tau is None:
        tau = default_shrink_weight(g, k, n, delta)
    rms = float(np.linalg.norm(g)) / math.sqrt(g.size)
    thr = max(tau, 0.5 * rms) if cfg.continuation < 1 else tau

    # P^{-1} of a row selection taken as its adjoint (zero fill)
    y = mask.adjoint(g)
    u = _toeplitz_row(np.outer(y, y.conj()))
    v = float(u[0].real)

    theta = (y, np.array([v]), u)
    prev = theta
    norm0 = _norm(theta)
    t_prev = 1.0
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        t_cur = _next_weight(t_prev)
        w = (t_prev - 1.0) / t_cur
        bar = tuple(a + w * (a - b) for a, b in zip(theta, prev))
        y_bar, _, u_bar = bar

        y_g = y_bar - delta * mask.adjoint(mask.apply(y_bar) - g)
        values, vectors = np.linalg.eigh(_toeplitz_from_row(u_bar))
        shrunk = np.maximum(values - thr, 0.0)
        rank = int(np.count_nonzero(shrunk))
        t_shrunk = (vectors * shrunk) @ vectors.conj().T

        z = _psd_truncate(bordered(shrunk.sum(), y_g, t_shrunk), rank + 1)
        y_new = z[1:, 0].copy()
        v_new = float(z[0, 0].real)
        u_new = _toeplitz_row(z[1:, 1:])
        # Toeplitz re-projection can leave the bordered matrix slightly
        # indefinite; a diagonal load restores feasibility and keeps T
        # Toeplitz with unchanged eigenvectors.
        dip = np.linalg.eigvalsh(bordered(v_new, y_new, _toeplitz_from_row(u_new)))[0]
        if dip < 0:
            v_new -= dip
            u_new[0] -= dip

        new = (y_new, np.array([v_new]), u_new)
        size = _norm(new)
        if not math.isfinite(size) or (norm0 > 0 and size > DIVERGENCE_FACTOR * norm0):
            raise DivergenceError(
                f"IVDST state norm grew from {norm0:.3e} to {size:.3e}; "
                f"reduce step size delta={delta}"
            )
        change = _relative_change(new, theta)
        restart = cfg.restart and _opposes(bar, new, theta)
        prev, theta = theta, new
        t_prev = 1.0 if restart else t_cur
        if thr == tau and change < cfg.rel_tol:
            converged = True
            break
        thr = max(tau, thr * cfg.continuation)

    y, v_arr, u = theta
    toep = ToeplitzHermitian(u)
    state = AnmState(y=y, v=float(v_arr[0]), t=toep)
    spectrum = extract_spectrum(toep, g, k, mask.observed_indices)
    return IvdstResult(toep, spectrum, it, state, converged, tau)


def extract_spectrum(toep: ToeplitzHermitian, g, k: int, rows=None) -> LineSpectrum:
    """Frequencies from the Toeplitz matrix, amplitudes fit to the data."""
    values = np.linalg.eigvalsh(toep.matrix())
    if numerical_rank(values) == 0:
        return LineSpectrum.empty()
    freqs = vandermonde_decompose(toep, k)
    return recover_amplitudes(g, freqs, rows=rows)
