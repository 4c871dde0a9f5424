"""Exception hierarchy shared by every module of the package."""


class GeotoolError(Exception):
    """Base class for all errors raised by geotool."""


class DegenerateMetric(GeotoolError, ArithmeticError):
    """The metric matrix is not positive definite at the queried point."""


class SingularGradient(GeotoolError, ArithmeticError):
    """A constraint gradient vanished where a normal direction is required."""


class NoConvergence(GeotoolError, RuntimeError):
    """An iterative solver exhausted its step budget."""


class NonFinite(GeotoolError, FloatingPointError):
    """A state or output component became NaN or infinite.

    ``time`` holds the simulated time of the first failure when known.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ParseError(GeotoolError, ValueError):
    """A scenario document could not be parsed."""

    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field


class ValidationError(GeotoolError, ValueError):
    """A value violates a documented invariant; ``field`` names it."""

    def __init__(self, field, message=""):
        super().__init__(f"{field}: {message}" if message else field)
        self.field = field
