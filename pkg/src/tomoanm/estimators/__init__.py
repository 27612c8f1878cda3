"""Line spectral estimators: IVDST-ANM, SDP-ANM (ADMM), OMP and IST."""

from .grid import GridConfig, ist_coefficients, ist_grid, omp_grid, strongest_peaks
from .ivdst import IvdstConfig, IvdstResult, ivdst_anm, momentum_weights, noise_level
from .order import estimate_order
from .registry import ALGORITHMS, run_estimator
from .sdp import AdmmConfig, SdpResult, sdp_anm
from .state import AnmState, SamplingMask

__all__ = [
    "ALGORITHMS", "AdmmConfig", "AnmState", "GridConfig", "IvdstConfig", "IvdstResult", "SamplingMask",
    "SdpResult", "estimate_order", "ist_coefficients", "ist_grid", "ivdst_anm",
    "momentum_weights", "noise_level", "omp_grid", "run_estimator", "sdp_anm", "strongest_peaks",
]
