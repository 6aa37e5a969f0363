"""Exception hierarchy shared by every module of the package."""


class QTildeError(Exception):
    """Base class for all library errors."""


class SpecError(QTildeError):
    """A matrix or measure specification is malformed or invalid."""


class ColumnSumViolation(SpecError):
    pass


class NonPositiveEntry(SpecError):
    pass


class Condition2Violation(SpecError):
    """The product of column maxima of a Q-matrix does not vanish."""


class AlphabetMismatch(SpecError):
    pass


class DigitOutOfRange(QTildeError, ValueError):
    pass


class DepthOverflow(QTildeError, ArithmeticError):
    pass


class IncompatibleTail(QTildeError):
    """A tail combination falls outside the symbolic taxonomy."""


class UndeclaredTail(QTildeError):
    pass


class InconclusiveVerdict(QTildeError):
    pass


class SpecInconsistency(QTildeError):
    pass


class NotConstantColumns(QTildeError):
    pass


class CoverTooLarge(QTildeError):
    pass


class UndefinedRatio(QTildeError, ZeroDivisionError):
    pass


class DegenerateScales(QTildeError, ValueError):
    pass
