"""Exception hierarchy.

The CLI maps these onto exit codes: usage errors exit 1, :class:`SpecError`
and :class:`DataError` exit 2, :class:`NumericalError` exits 3.
"""


class BreakLabError(Exception):
    """Base class for all breaklab errors."""


class SpecError(BreakLabError):
    """Invalid specification, configuration, or argument value."""


class DataError(BreakLabError):
    """Input data cannot be used (missing file, bad shape, degenerate sample)."""


class SingularDesignError(DataError):
    """Design matrix is rank deficient.

    ``column`` is the zero-based index of the first column that is linearly
    dependent on the ones before it.
    """

    def __init__(self, column, message=None):
        self.column = int(column)
        super().__init__(message or f"design matrix is rank deficient at column {column}")


class DegenerateSampleError(DataError):
    """Residual variance is zero, so self-normalized statistics are undefined."""


class BreakIndexError(SpecError):
    """Candidate break index leaves a regime with too few observations."""


class TableLookupError(SpecError):
    """Critical-value table does not cover the requested entry.

    Raised instead of interpolating across trimming, dimension, or level.
    """


class NumericalError(BreakLabError):
    """Internal numerical failure (singular regime fit, non-finite statistic)."""
