"""Gridless TomoSAR spectral estimation with accelerated atomic norm minimization."""

from .errors import (
    ConfigError,
    ConvergenceWarning,
    DivergenceError,
    DomainError,
    FormatError,
    IllConditionedError,
    NotHermitianError,
    RankDeficientWarning,
    ShapeError,
    TomoAnmError,
)
from .spectral import (
    EigenPairs,
    LineSpectrum,
    ToeplitzHermitian,
    eig_hermitian,
    project_to_toeplitz,
    psd_truncate,
    recover_amplitudes,
    shrink_eigenvalues,
    steering_vector,
    vandermonde_decompose,
)

__version__ = "0.1.0"
__all__ = [
    "ConfigError", "ConvergenceWarning", "DivergenceError", "DomainError", "FormatError",
    "IllConditionedError", "NotHermitianError", "RankDeficientWarning", "ShapeError", "TomoAnmError",
    "EigenPairs", "LineSpectrum", "ToeplitzHermitian", "eig_hermitian", "project_to_toeplitz",
    "psd_truncate", "recover_amplitudes", "shrink_eigenvalues", "steering_vector",
    "vandermonde_decompose",
]
