"""Exception hierarchy shared by all modules."""


class SpatialError(Exception):
    """Base class for errors raised by spatialhl."""


class InvalidInput(SpatialError, ValueError):
    pass


class NotPositiveDefinite(SpatialError, ValueError):
    pass


class Underdetermined(SpatialError, ValueError):
    """Raised when n <= p for an estimator that needs n > p."""


class DegenerateCovariance(SpatialError, ArithmeticError):
    pass


class DegenerateWalshAverage(SpatialError, ArithmeticError):
    """A Walsh average is exactly zero where a finite inverse norm is required."""

    def __init__(self, i, j):
        super().__init__(f"Walsh average of rows {i} and {j} is exactly zero")
        self.pair = (i, j)


class ParseError(SpatialError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
