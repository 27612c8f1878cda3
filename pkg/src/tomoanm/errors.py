"""Exception and warning types raised across the package."""


class TomoAnmError(Exception):
    """Base class for all package errors."""


class DomainError(TomoAnmError, ValueError):
    """An argument lies outside the domain of the operation."""


class ShapeError(TomoAnmError, ValueError):
    """An array argument has the wrong shape."""


class NotHermitianError(TomoAnmError, ValueError):
    """A matrix expected to be Hermitian is too asymmetric."""


class IllConditionedError(TomoAnmError, ValueError):
    """A least-squares system is too ill-conditioned to solve reliably."""


class DivergenceError(TomoAnmError, ArithmeticError):
    """An iterative solver blew up."""


class ConfigError(TomoAnmError, ValueError):
    """Invalid run or scene configuration."""


class FormatError(TomoAnmError, ValueError):
    """Base class for malformed input files."""


class BadMagicError(FormatError):
    pass


class VersionMismatchError(FormatError):
    pass


class TruncatedFileError(FormatError):
    pass


class RankDeficientWarning(UserWarning):
    """Fewer significant eigenvalues than requested spectral lines."""


class ConvergenceWarning(UserWarning):
    """An iterative solver stopped before meeting its tolerances."""
