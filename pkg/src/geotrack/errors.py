"""Exception hierarchy shared across the package."""


class GeotrackError(Exception):
    """Base class for all package errors."""


class ContractError(GeotrackError, ValueError):
    """A caller broke an operation's precondition (shape, sign, base point)."""


class DomainError(GeotrackError, ValueError):
    """Input lies outside the mathematical domain (e.g. a non-SPD matrix)."""


class DegenerateInputError(DomainError):
    """Formula is degenerate for the supplied constants (e.g. delta = 0)."""


class ConfigurationError(GeotrackError, ValueError):
    """Algorithm parameters violate the prerequisites of the tracking bounds."""


class ScheduleError(GeotrackError, ValueError):
    """A doubling-schedule period has no feasible (alpha, eta) pair."""

    def __init__(self, message, period=None):
        super().__init__(message)
        self.period = period


class CalibrationError(GeotrackError, RuntimeError):
    """Drift-speed bisection failed to hit the requested variation."""


class SolverError(GeotrackError, RuntimeError):
    """An inner iterative solver did not converge."""
