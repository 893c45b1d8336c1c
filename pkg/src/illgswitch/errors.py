"""Exception hierarchy shared across the package.

Every error that should abort a CLI run maps to a stable process exit
code, so scripts driving the command line can branch on failure class.
"""


class IllgswitchError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(IllgswitchError):
    """Malformed, incomplete, or contradictory experiment configuration."""

    exit_code = 2


class ThresholdError(IllgswitchError):
    """An asymptotic validity gate failed (mu above its threshold).

    Carries the computed threshold so callers can report how far off
    the requested parameters are.
    """

    exit_code = 3

    def __init__(self, message, mu=None, threshold=None):
        super().__init__(message)
        self.mu = mu
        self.threshold = threshold


class HypothesisError(IllgswitchError):
    """A structural hypothesis on the applied field does not hold.

    Raised for degenerate fields (no transverse component) and for
    fields whose rotated anisotropy matrix is not diagonal where a
    simplified closed form requires it.
    """

    exit_code = 3


class PoleProximityError(IllgswitchError):
    """A spherical-chart operation was requested too close to a pole."""

    exit_code = 3


class InfeasiblePlanError(IllgswitchError):
    """No switching plan exists for the requested parameters."""

    exit_code = 4


class IntegrationError(IllgswitchError):
    """The numerical integrator failed (step underflow or budget)."""

    exit_code = 5

    def __init__(self, message, last_t=None, last_state=None):
        super().__init__(message)
        self.last_t = last_t
        self.last_state = last_state


class ValidationError(IllgswitchError):
    """One or more bundled validation checks failed."""

    exit_code = 6
