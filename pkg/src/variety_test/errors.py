"""Exception types raised across the package."""

from __future__ import annotations


class VarietyTestError(Exception):
    """Base class for all errors raised by this package."""


# polynomial core
class DegreeExceeded(VarietyTestError, ValueError):
    pass


class IndexOutOfRange(VarietyTestError, IndexError):
    pass


class ShapeMismatch(VarietyTestError, ValueError):
    pass


class NotOrthogonal(VarietyTestError, ValueError):
    pass


class NotOnSphere(VarietyTestError, ValueError):
    pass


# discriminant
class OutsideDisk(VarietyTestError, ValueError):
    pass


class NotOnBoundary(VarietyTestError, ValueError):
    pass


# geometry / risk
class NoFeasiblePoint(VarietyTestError):
    """Z(p) meets the closed unit disk in no numerically detectable point."""


class EmptyCloud(VarietyTestError, ValueError):
    pass


class TooFewPoints(VarietyTestError, ValueError):
    pass


class EpsilonOutOfRange(VarietyTestError, ValueError):
    pass


class DeltaOutOfRange(VarietyTestError, ValueError):
    pass


# covering
class BudgetExhausted(VarietyTestError):
    pass


class NotHypersurface(VarietyTestError, ValueError):
    pass


class NonPositiveT(VarietyTestError, ValueError):
    pass


# tester
class InsufficientSamples(VarietyTestError):
    def __init__(self, have: int, required: int):
        self.have = have
        self.required = required
        super().__init__(f"need at least {required} samples, got {have}")


class NetUnavailable(VarietyTestError):
    pass


class CrossedDiscriminant(VarietyTestError):
    pass


class PreconditionError(VarietyTestError, ValueError):
    pass


# io
class ParseError(VarietyTestError, ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class SchemaMismatch(VarietyTestError, ValueError):
    pass
