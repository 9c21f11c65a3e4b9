"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes (usage 2, numerical 3, I/O 4).
"""


class TvqcError(Exception):
    """Base class for all package errors."""


class DomainError(TvqcError, ValueError):
    """A parameter is outside its mathematical domain."""


class UsageError(TvqcError, ValueError):
    """Invalid call: bad mode/model name, mismatched sizes, bad grids."""


class NumericalError(TvqcError, RuntimeError):
    """A numerical routine failed to converge or lost validity."""


class FitError(NumericalError):
    """Curve fit did not converge; carries residual diagnostics."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class SchemaError(TvqcError, ValueError):
    """An input file violates its schema; carries the offending row."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row
