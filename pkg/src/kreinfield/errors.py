"""Exception hierarchy.

Every failure mode that carries numerical meaning gets its own class so
callers (and the CLI exit-code logic) can tell a configuration problem
from a genuine spectral obstruction.
"""


class KreinFieldError(Exception):
    """Base class for all library errors."""


class ConfigError(KreinFieldError, ValueError):
    """Malformed scenario or invalid argument."""


class NotPositive(KreinFieldError):
    """The discretized eps^2 is not positive definite."""


class ClusterNotIsolated(KreinFieldError):
    """An eigenvalue cluster is not separated from the rest of the spectrum."""


class AmbiguousRealness(KreinFieldError):
    """An eigenvalue sits in the dead band between 'real' and 'complex'."""


class ConstructionFailed(KreinFieldError):
    """A definitizing polynomial failed its a-posteriori positivity check."""


class ResolventBlowup(KreinFieldError):
    """A quadrature node came too close to the spectrum."""


class NotAdmissible(KreinFieldError):
    """An interval endpoint collides with an eigenvalue."""


class InconsistentClassification(KreinFieldError):
    """Energy-form positivity and spectral data disagree."""


class Overflow(KreinFieldError, OverflowError):
    """Exponential growth of an overcritical mode exceeds double range."""


class StepTooLarge(KreinFieldError):
    """Explicit time step violates the RK4 stability bound."""


class WindowTooShort(KreinFieldError):
    """Time window cannot resolve the requested spectral gap."""


class NotAState(KreinFieldError):
    """The covariance form is not dominating, so no quasi-free state exists."""


class HypothesisViolated(KreinFieldError):
    """An operation was called outside the regime where it is meaningful."""
