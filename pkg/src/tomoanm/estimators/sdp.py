"""Exact atomic norm SDP solved by ADMM.

Solves::

    minimize    v + trace(T(u)) / N
    subject to  [[v, g^H], [g, T(u)]] >= 0

with the observation ``g`` held fixed. The splitting alternates between the
affine set of bordered matrices ``W(v, u)`` with Toeplitz lower-right block
and the PSD cone, so each iteration costs one full Hermitian
eigendecomposition of size ``N + 1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from ..errors import ConvergenceWarning, DomainError
from ..spectral import LineSpectrum, ToeplitzHermitian, _toeplitz_from_row, _toeplitz_row
from .ivdst import extract_spectrum
from .state import AnmState, bordered


@dataclass(frozen=True)
class AdmmConfig:
    penalty: float = 1.0
    max_iters: int = 100000
    primal_tol: float = 1e-6
    dual_tol: float = 1e-6

    def __post_init__(self):
        for name in ("penalty", "primal_tol", "dual_tol"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if self.max_iters < 1:
            raise DomainError(f"max_iters must be >= 1, got {self.max_iters}")


class SdpResult(NamedTuple):
    state: AnmState
    spectrum: LineSpectrum
    objective: float
    converged: bool
    iterations: int
    primal_residual: float
    dual_residual: float


def _project_psd(z: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(z)
    return (vectors * np.maximum(values, 0.0)) @ vectors.conj().T


def _fro(x: np.ndarray) -> float:
    flat = x.ravel()
    return math.sqrt(np.vdot(flat, flat).real)


def sdp_anm(g, config: Optional[AdmmConfig] = None, k: int = 1) -> SdpResult:
    """Atomic norm of ``g`` by SDP, plus ``k`` lines from its Toeplitz certificate.

    Stops once the Frobenius norms of the primal residual ``W - Z`` and the
    dual residual ``rho (Z - Z_prev)`` fall below the tolerances. If ``max_iters`` is hit first, a
    :class:`ConvergenceWarning` is issued and ``converged`` is False.
    """
    cfg = config or AdmmConfig()
    g = np.asarray(g, dtype=complex).ravel()
    n = g.size
    if n < 2:
        raise DomainError("SDP needs at least two samples")
    if not 1 <= k < n:
        raise DomainError(f"model order {k} must satisfy 1 <= k < {n}")
    rho = cfg.penalty

    # warm start from the rank-one certificate |g| a a^H / |g|
    gn = float(np.linalg.norm(g))
    z = bordered(gn, g, np.outer(g, g.conj()) / gn) if gn > 0 else np.zeros((n + 1, n + 1), complex)
    lam = np.zeros_like(z)
    converged = False
    r_prim = r_dual = math.inf
    it = 0
    for it in range(1, cfg.max_iters + 1):
        # affine step: argmin v + u0 + rho/2 |W(v, u) - (z - lam)|^2
        q = z - lam
        v = q[0, 0].real - 1.0 / rho
        u = _toeplitz_row(q[1:, 1:])
        u[0] -= 1.0 / (rho * n)
        w = bordered(v, g, _toeplitz_from_row(u))

        z_old = z
        z = _project_psd(w + lam)
        gap = w - z
        lam += gap

        r_prim = _fro(gap)
        r_dual = rho * _fro(z - z_old)
        if r_prim < cfg.primal_tol and r_dual < cfg.dual_tol:
            converged = True
            break

    if not converged:
        warnings.warn(
            f"ADMM stopped after {it} iterations with primal residual {r_prim:.3e} "
            f"and dual residual {r_dual:.3e}",
            ConvergenceWarning,
            stacklevel=2,
        )

    # return an exactly feasible point: load the diagonal if w is indefinite
    dip = float(np.linalg.eigvalsh(w)[0])
    if dip < 0:
        v -= dip
        u[0] -= dip
    toep = ToeplitzHermitian(u)
    state = AnmState(y=g.copy(), v=float(v), t=toep)
    objective = float(v + toep.first_row[0].real)
    spectrum = extract_spectrum(toep, g, k)
    return SdpResult(state, spectrum, objective, converged, it, r_prim, r_dual)
