"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument is outside the documented range."""


class NumericalDomainError(ArithmeticError):
    """An integrand, objective or stencil produced a non-finite value or left its domain."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class InsufficientDataError(ValueError):
    """A series is too short to support the requested diagnostic."""
