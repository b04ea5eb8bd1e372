"""Exception hierarchy shared by all qindep modules."""


class QIndepError(Exception):
    """Base class for every error raised by this package."""


class DivisorMayBeZero(QIndepError, ZeroDivisionError):
    pass


class AmbiguousEnclosure(QIndepError):
    pass


class PrecisionExhausted(QIndepError):
    pass


class ReduciblePolynomial(QIndepError, ValueError):
    pass


class RootIsolationFailed(PrecisionExhausted):
    pass


class FieldMismatch(QIndepError, ValueError):
    pass


class DivisionByZeroElement(QIndepError, ZeroDivisionError):
    pass


class Undecidable(QIndepError):
    pass


class DomainViolation(QIndepError, ValueError):
    pass


class DenominatorVanishes(QIndepError, ZeroDivisionError):
    pass


class ThresholdNotReached(QIndepError, ValueError):
    pass


class NonIncreasingA(QIndepError, ValueError):
    pass


class DegenerateBasis(QIndepError, ValueError):
    pass


class PrecisionTooLow(QIndepError, ValueError):
    pass


class UsageError(QIndepError, ValueError):
    pass
