"""Experimental model-order selection. Every estimator takes K explicitly;
this helper only suggests a value."""

from __future__ import annotations

import numpy as np
import scipy.linalg


def estimate_order(g, max_order: int, gap: float = 10.0) -> int:
    """Largest ``k <= max_order`` at which the Hankel singular values drop by ``gap``.

    Returns 0 when no such drop exists. Experimental: the cutoff is a
    heuristic and is not used by any estimator.
    """
    g = np.asarray(g, dtype=complex).ravel()
    rows = g.size // 2 + 1
    s = np.linalg.svd(scipy.linalg.hankel(g[:rows], g[rows - 1:]), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    best = 0
    for k in range(1, min(max_order, s.size - 1) + 1):
        if s[k - 1] > gap * max(s[k], 1e-300):
            best = k
    return best
