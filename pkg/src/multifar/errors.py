"""Exception and warning types shared across the package."""

from __future__ import annotations


class MultifarError(Exception):
    """Base class for all package-specific errors."""


class GeometryError(MultifarError):
    """A scene violates a geometric invariant (overlap, transmitter inside a sphere, ...)."""


class InputError(MultifarError):
    """An input document (geometry or sweep JSON) is malformed."""


class ConfigError(MultifarError):
    """A configuration object carries invalid values."""


class InversionError(MultifarError):
    """Numerical Laplace inversion failed (overflow or non-finite node values)."""


class ConvergenceError(MultifarError):
    """A series or limit did not converge within its budget.

    ``partial`` carries the best value obtained so far, when one exists.
    """

    def __init__(self, message: str, partial: float | None = None):
        super().__init__(message)
        self.partial = partial


class SingularSystemError(MultifarError):
    """The coupling system of a multi-receiver transform is numerically singular."""


class MetricUndefinedError(MultifarError):
    """A ratio metric is undefined at the requested time (zero denominator)."""


class StepSizeWarning(UserWarning):
    """Simulation step size is coarse relative to the receiver radius."""
