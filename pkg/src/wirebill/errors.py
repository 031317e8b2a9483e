"""Exception hierarchy shared by all modules."""


class WireBilliardError(Exception):
    """Base class for every error raised by the package."""


class SpecError(WireBilliardError, ValueError):
    """A curve spec or experiment config failed validation.

    ``field`` holds a dotted path to the offending entry (``"params.eps"``).
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class CurveConstructionError(SpecError):
    """The spec is well-formed but describes a degenerate curve."""


class DiagonalChordError(WireBilliardError, ValueError):
    """A chord whose endpoints coincide (the diagonal is not a chord)."""


class NicenessError(WireBilliardError):
    """An operation needing a nice curve was called on a curve that fails the test."""


class NumericalError(WireBilliardError, RuntimeError):
    """A numerical procedure failed; ``operation`` names where."""

    def __init__(self, operation, message):
        self.operation = operation
        super().__init__(f"{operation}: {message}")


class ConvergenceError(NumericalError):
    pass
