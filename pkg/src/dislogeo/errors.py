"""Exception hierarchy shared by all modules."""


class DislogeoError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(DislogeoError, ValueError):
    pass


class ExpressionSyntaxError(DislogeoError, ValueError):
    """Malformed expression text; carries the 0-based character position."""

    def __init__(self, message, position, text=""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}" + (f" in {text!r}" if text else ""))


class UnknownIdentifier(DislogeoError, ValueError):
    def __init__(self, name, position=None):
        self.name = name
        self.position = position
        where = "" if position is None else f" at position {position}"
        super().__init__(f"unknown identifier {name!r}{where}")


class EvaluationError(DislogeoError, ArithmeticError):
    """Domain error during evaluation (division by zero, log of nonpositive, ...)."""


class NumericError(DislogeoError):
    """Base for geometric/numeric failures that are not configuration mistakes."""


class PointError(NumericError):
    """A numeric failure attributable to a specific point."""

    def __init__(self, message, point=None):
        self.point = None if point is None else tuple(float(x) for x in point)
        if self.point is not None:
            message = f"{message} at point {self.point}"
        super().__init__(message)


class SingularFrame(PointError):
    pass


class OutsideDomain(PointError):
    pass


class NotPositiveDefinite(PointError):
    pass


class DegeneratePatch(PointError):
    pass


class DegenerateDistribution(PointError):
    pass


class CriticalPoint(PointError):
    pass


class NonPositiveDeterminant(NumericError):
    pass


class OpenLoop(NumericError):
    pass


class NegativeDensity(PointError):
    pass


class NonPositivePsi(NumericError):
    pass


class NonConstantAmbientCurvature(NumericError):
    pass


class IntegrationFailure(NumericError):
    pass


class NegativeTemperature(NumericError):
    pass
