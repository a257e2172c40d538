"""Exception hierarchy for shotflat.

Every error raised by the package derives from ``ShotflatError`` and from
``ValueError``, so callers that only care about bad input can keep catching
``ValueError``.
"""

from typing import Optional


class ShotflatError(ValueError):
    """Base class for all shotflat errors."""


class DomainError(ShotflatError):
    """A physical parameter is outside its allowed range."""


class ScenarioError(ShotflatError):
    """A scenario file could not be parsed or validated."""


class ScenarioParseError(ScenarioError):
    """Syntax error in a scenario file."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(ScenarioError):
    """A scenario key holds a value outside its allowed range."""

    def __init__(self, key: str, value, allowed: str):
        self.key = key
        self.value = value
        self.allowed = allowed
        super().__init__(f"{key} = {value!r} is invalid, allowed range {allowed}")


class InsufficientDataError(DomainError):
    """A time series is too short for the requested spectral estimate."""


class StitchGapError(ShotflatError):
    """Spectrum spans leave part of the frequency range uncovered."""

    def __init__(self, low_hz: float, high_hz: float):
        self.low_hz = low_hz
        self.high_hz = high_hz
        super().__init__(f"spans leave {low_hz:g}-{high_hz:g} Hz uncovered")


class BinMismatchError(ShotflatError):
    """Two traces do not share the same frequency bins."""


class UnmappedSourceError(ShotflatError):
    """A noise source names a port the budget does not know."""


class ClippingError(DomainError):
    """The beam is not contained in the photodiode active area."""


class LinearizationError(DomainError):
    """Scattered power too large for the linearized beat model."""


class InfeasibleBalanceError(DomainError):
    """No splitting ratio or gain ratio nulls the local oscillator term."""


class FeasibilityError(ShotflatError):
    """The configured duration cannot support the span plan."""


class LengthMismatchError(ShotflatError):
    """Two series that must be combined differ in length or rate."""
