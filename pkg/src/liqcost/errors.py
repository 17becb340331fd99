"""Exception types shared across the package.

The CLI maps these onto exit codes (config -> 2, numerical/depth -> 3) and
the service maps them onto HTTP errors, so keep the hierarchy flat.
"""


class LiqcostError(Exception):
    pass


class DomainError(LiqcostError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(LiqcostError, ValueError):
    """A run configuration is internally inconsistent or incomplete."""


class NumericalError(LiqcostError, RuntimeError):
    """A computation could not be completed at the requested resolution."""


class InsufficientDepthError(NumericalError):
    """A requested trade size exceeds the displayed depth of the book."""

    def __init__(self, message, max_fillable):
        super().__init__(message)
        self.max_fillable = max_fillable
