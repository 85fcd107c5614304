"""Exception types shared across the package."""


class MicrocavityError(Exception):
    """Base class for numerical failures raised by this package."""


class ContrastError(MicrocavityError, ValueError):
    """Intensities are inconsistent with an impedance-mismatched empty cavity."""


class SaturationError(MicrocavityError, ValueError):
    """A correction or inversion is outside its invertible range."""


class StatisticError(MicrocavityError, ValueError):
    """A count statistic is undefined for the given window."""


class FitError(MicrocavityError, RuntimeError):
    """Parameter search failed; ``diagnostics`` carries the search history."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
