"""Exception hierarchy shared across the toolkit.

Exit-code mapping used by the CLI: parameter/config problems -> 2,
data problems -> 3, numerical failures -> 4.
"""


class TrendLabError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ParameterError(TrendLabError):
    """Invalid parameter or configuration value."""

    exit_code = 2


class SpectrumError(ParameterError):
    """Indicator kind has no linear sensitivity spectrum."""


class TruncationError(ParameterError):
    """A truncated expansion keeps too little mass at the requested order."""


class DataError(TrendLabError):
    """Missing, malformed, or insufficient input data."""

    exit_code = 3


class NumericalError(TrendLabError):
    """Numerical failure (singular matrix, non-convergence, ...)."""

    exit_code = 4


class MatrixError(NumericalError):
    """Matrix fails a validity requirement (symmetry, PSD, conditioning)."""


class FitError(NumericalError):
    """Curve fit failed to converge; carries the grid scan for diagnosis."""

    def __init__(self, message, grid_scan=None):
        super().__init__(message)
        self.grid_scan = grid_scan
