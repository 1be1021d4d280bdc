"""Exception hierarchy for oscring."""


class OscRingError(Exception):
    """Base class for all errors raised by this package."""


class InternalError(OscRingError):
    """A numerical invariant that should hold by construction was violated."""


class DimensionMismatch(OscRingError, ValueError):
    pass


class SingularEvolution(OscRingError):
    """The evolution denominator is numerically singular (invalid state)."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class NonPositiveBath(OscRingError):
    """Real part of the bath block (or of the whole Omega) is not positive definite."""


class NonPositiveReduced(OscRingError):
    """Reduced state violates 0 <= r12 <= Re r11."""


class NonPositiveInitial(OscRingError):
    """The assembled initial Omega is not positive definite."""


class OddBathSize(OscRingError, ValueError):
    pass


class GridMismatch(OscRingError, ValueError):
    pass


class GridTooCoarse(OscRingError):
    pass


class ParseError(OscRingError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(OscRingError, ValueError):
    pass
