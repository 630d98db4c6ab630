"""Exception types raised across the package."""


class LSSError(Exception):
    """Base class for all package errors."""


class NonIntegrableTail(LSSError, ValueError):
    pass


class DivergentIntegral(LSSError, ArithmeticError):
    pass


class DivergentSeries(LSSError, ValueError):
    pass


class DivergentMoment(LSSError, ValueError):
    pass


class NotConverged(LSSError, ArithmeticError):
    pass


class MissingJumpList(LSSError, ValueError):
    pass


class OutOfWindow(LSSError, ValueError):
    pass


class InsufficientWindow(LSSError, ValueError):
    pass


class TooShort(LSSError, ValueError):
    pass


class CriticalRegime(LSSError, ValueError):
    pass


class ZeroVariation(LSSError, ValueError):
    pass


class ZeroDenominator(LSSError, ZeroDivisionError):
    pass


class NonPositiveRatio(LSSError, ValueError):
    pass


class ConfigInvalid(LSSError, ValueError):
    pass


class SigmaBoundExceeded(LSSError, ValueError):
    """A simulated volatility path leaves its asserted bound."""
