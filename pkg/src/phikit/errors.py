"""Exception types shared by all modules."""


class PhiKitError(Exception):
    """Base class for toolkit errors."""


class InvalidInput(PhiKitError, ValueError):
    """Rejected input: non-finite samples, bad indices, mismatched grids."""


class ScaleOutOfRange(PhiKitError, ValueError):
    """A dilation or cube scale cannot be represented on the grid."""


class InvalidProfile(PhiKitError, ValueError):
    """Radial profile breakpoints violate the admissibility ordering."""


class HypothesisViolation(PhiKitError, ValueError):
    """The inputs violate a hypothesis of the estimate being checked."""


class CalibrationFailure(PhiKitError, RuntimeError):
    """A constant fit did not reach the required residual."""


class ConfigError(PhiKitError, ValueError):
    """Invalid run configuration."""


class CoverageWarning(UserWarning):
    """Input energy lies partly outside the covered frequency annuli."""


class NotStabilized(PhiKitError, RuntimeError):
    """Regularized pairings did not settle before the scale limit."""
