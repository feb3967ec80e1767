"""Exception and warning types raised across the package."""

from __future__ import annotations


class MubandError(Exception):
    """Base class for every error raised by muband."""


class TooFewPointsError(MubandError, ValueError):
    pass


class RangeError(MubandError, ValueError):
    pass


class DomainError(MubandError, ValueError):
    """A closed form was evaluated at or beyond one of its poles."""


class DimensionError(MubandError, ValueError):
    pass


class BoundaryProximityError(MubandError, ValueError):
    pass


class NonpositiveError(MubandError, ValueError):
    """A weight or warp that must be positive is not."""


class ConstraintViolation(MubandError, ValueError):
    """Model parameters violate an admissibility constraint."""


class InvalidAlphaError(MubandError, ValueError):
    pass


class NoCriticalPointError(MubandError):
    """The first-variation residual has constant nonzero sign on the band.

    ``sign`` is +1 or -1.
    """

    def __init__(self, message: str, sign: int):
        super().__init__(message)
        self.sign = sign


class ConfigError(MubandError, ValueError):
    pass


class MalformedCSVError(MubandError, ValueError):
    pass


class NonmonotoneError(MalformedCSVError):
    """The t column of a band file is not strictly increasing."""


class GridTooCoarseWarning(UserWarning):
    pass


class HypothesisViolationWarning(UserWarning):
    pass
