"""Exception hierarchy."""


class RinLinkError(Exception):
    """Base class for all errors raised by rinlink."""


class NonPositiveER(RinLinkError, ValueError):
    """Extinction ratio in dB must be strictly positive."""


class ThresholdError(RinLinkError, ArithmeticError):
    """A decision threshold could not be computed."""


class EqualVariances(ThresholdError):
    """Conditional variances of a symbol pair coincide; use the AWGN form."""


class NegativeDiscriminant(ThresholdError):
    """The MAP densities of a symbol pair never cross."""


class ZeroProbability(ThresholdError):
    """A symbol with zero prior probability takes part in a threshold."""


class NonMonotoneThresholds(ThresholdError):
    """Adjacent decision regions collapsed; slicing is not equivalent to MAP."""


class SolverFailure(RinLinkError, RuntimeError):
    """A shaping optimization found no feasible point.

    ``best`` carries the best iterate seen (possibly ``None``).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(RinLinkError, ValueError):
    """Invalid run configuration. ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
