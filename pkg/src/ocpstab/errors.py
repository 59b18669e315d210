"""Exception hierarchy shared by all ocpstab modules."""


class OCPError(Exception):
    """Base class for every error raised by ocpstab."""


class ConfigurationError(OCPError, ValueError):
    """Invalid user-supplied configuration (grid, parameters, file content)."""


class ContractViolation(OCPError, ValueError):
    """A caller broke a documented precondition (shape, index, range)."""


class DomainError(ContractViolation):
    """Argument outside the domain of a function, e.g. t outside [0, T]."""


class BlowUpError(OCPError):
    """Scheme evaluated at (or numerically at) its singular point.

    Attributes
    ----------
    gamma_dt : float or None
        The offending value of gamma * dt, when known.
    step : int or None
        Step index at which a forward propagation overflowed.
    """

    def __init__(self, message, gamma_dt=None, step=None, partial=None):
        super().__init__(message)
        self.gamma_dt = gamma_dt
        self.step = step
        self.partial = partial


class SingularPropagationError(BlowUpError):
    """The 2x2 step system cannot be inverted (s + p q == 0)."""


class NoThresholdError(OCPError):
    """No oscillation threshold exists: every alpha oscillates at this dt."""


class SolverError(OCPError):
    """A linear or nonlinear solve failed."""

    def __init__(self, message, gamma_dt=None):
        super().__init__(message)
        self.gamma_dt = gamma_dt


class ConvergenceError(SolverError):
    """Newton iteration did not reach the tolerance.

    ``history`` holds the residual norm after each iteration.
    """

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class SingularConfigurationError(OCPError):
    """Geometry for which the spring direction is undefined (coincident masses)."""
