"""Error types shared across the package."""


class MacorrError(Exception):
    """Base class for all package errors."""


class ParameterError(MacorrError):
    """A configuration or parameter invariant is violated."""


class ResolutionError(MacorrError):
    """Spectral content exceeds the alias-free frequency budget.

    Raised instead of silently aliasing: a loud failure here protects the
    rate measurements downstream.
    """

    def __init__(self, message, tail_fraction=None, budget=None):
        super().__init__(message)
        self.tail_fraction = tail_fraction
        self.budget = budget


class CalibrationError(MacorrError):
    """A positivity/pinching guard failed; constants need recalibration.

    Carries the iteration index and the offending minimum value so the
    caller can decide how to recalibrate.
    """

    def __init__(self, message, index=None, min_value=None):
        super().__init__(message)
        self.index = index
        self.min_value = min_value
