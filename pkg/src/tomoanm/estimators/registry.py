"""Uniform ``(g, k, config) -> LineSpectrum`` entry points keyed by algorithm id."""

from __future__ import annotations

import warnings
from dataclasses import replace
from typing import Callable, Optional

import numpy as np

from ..errors import ConfigError, RankDeficientWarning
from ..spectral import LineSpectrum
from .grid import GridConfig, ist_grid, omp_grid, strongest_peaks
from .ivdst import IvdstConfig, ivdst_anm, noise_level
from .sdp import AdmmConfig, sdp_anm

ALGORITHMS = ("ivdst", "sdp", "omp", "ist")


def _ivdst(g, k, config):
    return ivdst_anm(g, k=k, config=config).spectrum


def _sdp(g, k, config):
    return sdp_anm(g, config=config, k=k).spectrum


def _omp(g, k, config):
    return omp_grid(g, k, config)


def _ist(g, k, config):
    cfg = config or GridConfig()
    if cfg.ist_threshold is None and cfg.noise_sigma is None:
        # the default threshold needs a noise level; estimate it at model order k
        cfg = replace(cfg, noise_sigma=noise_level(g, k))
    return strongest_peaks(ist_grid(g, cfg), k, cfg.grid(np.size(g)))


_RUNNERS: dict[str, Callable] = {"ivdst": _ivdst, "sdp": _sdp, "omp": _omp, "ist": _ist}
_CONFIGS = {"ivdst": IvdstConfig, "sdp": AdmmConfig, "omp": GridConfig, "ist": GridConfig}


def check_algorithm(name: str) -> str:
    if name not in _RUNNERS:
        raise ConfigError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")
    return name


def run_estimator(name: str, g, k: int, config: Optional[object] = None) -> LineSpectrum:
    """Estimate ``k`` lines from full-array samples ``g``.

    IST reports its ``k`` strongest local peaks. Rank-deficiency warnings
    are silenced: asking for more lines than present is routine here.
    """
    check_algorithm(name)
    if config is not None and not isinstance(config, _CONFIGS[name]):
        raise ConfigError(f"{name} expects {_CONFIGS[name].__name__}, got {type(config).__name__}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficientWarning)
        return _RUNNERS[name](np.asarray(g, dtype=complex), k, config)
