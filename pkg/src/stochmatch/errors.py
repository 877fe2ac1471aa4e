"""Exception types raised across the workbench."""

from typing import Optional


class StochMatchError(Exception):
    """Base class for all workbench errors."""


class InvalidParameterError(StochMatchError, ValueError):
    """A parameter is outside the range an operation accepts."""


class UsageError(StochMatchError, ValueError):
    """An experiment configuration is incomplete or inconsistent."""


class InstanceFormatError(StochMatchError, ValueError):
    """An instance file is malformed or has the wrong schema."""

    def __init__(self, message: str, location: Optional[str] = None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class CapacityError(StochMatchError, RuntimeError):
    """A problem is too large for the exact solver asked to handle it."""


class ContractViolationError(StochMatchError, RuntimeError):
    """A policy returned a server it was not allowed to pick."""


class AccountingError(StochMatchError, ArithmeticError):
    """The primal-dual identity drifted beyond tolerance."""
