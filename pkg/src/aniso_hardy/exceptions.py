"""Exception and warning types raised across the package."""


class AnisoHardyError(Exception):
    """Base class for all errors raised by this package."""


class NotExpansive(AnisoHardyError, ValueError):
    """A matrix has an eigenvalue of modulus <= 1."""


class Singular(AnisoHardyError, ValueError):
    """A matrix has zero determinant."""


class PreconditionError(AnisoHardyError, ValueError):
    """An argument violates a documented precondition."""


class ContainmentFailure(AnisoHardyError):
    """No admissible ``r`` passed the sampled ellipsoid containment check."""


class PropertyViolation(AnisoHardyError, AssertionError):
    """A sampled inequality or identity failed.

    ``witness`` carries whatever data reproduces the failure (points, both
    sides of an inequality, ...).
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NonConvergence(AnisoHardyError, RuntimeError):
    """An iterative solver could not bracket or converge."""


class DegenerateProfile(AnisoHardyError, RuntimeError):
    """Moment projection annihilated every seeded profile."""


class TailDivergence(AnisoHardyError, ArithmeticError):
    """An analytic tail bound is not summable for the configured exponents."""


class ConfigError(AnisoHardyError, ValueError):
    """A run configuration failed schema or precondition validation."""


class WindowExceeded(UserWarning):
    """A quasi-norm level fell outside the search window; value is an estimate."""


class ResolutionLoss(UserWarning):
    """Resampling reduced the sample density below the configured minimum."""
