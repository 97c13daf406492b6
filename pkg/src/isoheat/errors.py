"""Exception hierarchy shared by all isoheat modules."""


class IsoheatError(Exception):
    """Base class for every error raised by the package."""


class DomainError(IsoheatError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(IsoheatError, RuntimeError):
    """A quadrature or iteration failed to reach its tolerance.

    Attributes:
        estimate: best value found before giving up.
        error: error bound reported by the failing routine.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class UnderflowError(IsoheatError, ArithmeticError):
    """The requested quantity is not representable in double precision.

    Attributes:
        asymptotic: optional closed-form approximation of the quantity, given
            as a string or a dict of log-scale values.
    """

    def __init__(self, message, asymptotic=None):
        super().__init__(message)
        self.asymptotic = asymptotic


class CalibrationError(IsoheatError):
    """A calibrated profile violates the bound it was calibrated against."""

    def __init__(self, message, violating_volume=None):
        super().__init__(message)
        self.violating_volume = violating_volume


class NumericalConsistencyError(IsoheatError):
    """An internal identity failed, signalling a quadrature or logic fault."""


class FitError(IsoheatError):
    """A regression was requested on degenerate data."""


class WindowError(IsoheatError):
    """A curve was requested outside the window the model can resolve."""
