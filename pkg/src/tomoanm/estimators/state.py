from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, ShapeError
from ..spectral import ToeplitzHermitian


@dataclass(frozen=True)
class SamplingMask:
    """Row selection ``P``: which of ``ambient_size`` elements were observed."""

    observed_indices: np.ndarray
    ambient_size: int

    def __post_init__(self):
        idx = np.array(self.observed_indices, dtype=int).ravel()
        n = int(self.ambient_size)
        if idx.size < 1:
            raise DomainError("sampling mask observes no elements")
        if np.any(np.diff(idx) <= 0):
            raise DomainError("observed indices must be strictly increasing")
        if idx[0] < 0 or idx[-1] >= n:
            raise DomainError(f"observed indices must lie in [0, {n})")
        idx.setflags(write=False)
        object.__setattr__(self, "observed_indices", idx)
        object.__setattr__(self, "ambient_size", n)

    @classmethod
    def full(cls, n: int) -> "SamplingMask":
        return cls(np.arange(n), n)

    @property
    def count(self) -> int:
        return self.observed_indices.size

    def apply(self, x: np.ndarray) -> np.ndarray:
        """``P x``"""
        return x[self.observed_indices]

    def adjoint(self, g: np.ndarray) -> np.ndarray:
        """``P^H g``: zero-filled embedding into the ambient array."""
        if g.shape[0] != self.count:
            raise ShapeError(f"expected {self.count} samples, got {g.shape[0]}")
        y = np.zeros(self.ambient_size, dtype=complex)
        y[self.observed_indices] = g
        return y


def bordered(v: float, y: np.ndarray, t: np.ndarray) -> np.ndarray:
    """The matrix ``[[v, y^H], [y, T]]``."""
    n = y.size
    z = np.empty((n + 1, n + 1), dtype=complex)
    z[0, 0] = v
    z[0, 1:] = y.conj()
    z[1:, 0] = y
    z[1:, 1:] = t
    return z


@dataclass(frozen=True)
class AnmState:
    """Decision variables ``(y, v, T)`` of the atomic norm SDP."""

    y: np.ndarray
    v: float
    t: ToeplitzHermitian

    def bordered(self) -> np.ndarray:
        return bordered(self.v, self.y, self.t.matrix())

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.bordered())[0])
