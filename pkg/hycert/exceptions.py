""":mod:`hycert.exceptions` --- Errors raised by hycert
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

Outcomes that are part of normal operation (an inconclusive check, an
infeasible program) are values from :mod:`hycert.verdicts`, never
exceptions.

"""


class HycertError(Exception):
    """Base class of every error raised by this package."""


class IntervalError(HycertError, ArithmeticError):
    pass


class NotRadiusMatrixError(HycertError, ValueError):
    pass


class RankDeficientError(HycertError, ValueError):
    pass


class BasisTooSmallError(HycertError, ValueError):
    pass


class DimensionMismatchError(HycertError, ValueError):
    pass


class NotExactError(HycertError, ValueError):
    pass


class NumericalFailure(HycertError):
    """The interior-point solver stopped without a usable answer.

    ``iterate`` holds the last primal iterate (or ``None``).
    """

    def __init__(self, message: str, iterate=None) -> None:
        super().__init__(message)
        self.iterate = iterate


class ApproximationError(HycertError, ValueError):
    pass


class ExprDomainError(HycertError, ValueError):
    def __init__(self, message: str, node=None) -> None:
        if node is not None:
            message = '{0} (at {1})'.format(message, node)
        super().__init__(message)
        self.node = node


class SystemSyntaxError(HycertError):
    def __init__(self, message: str, line: int, column: int = 1) -> None:
        super().__init__(
            '{0} at line {1}, column {2}'.format(message, line, column)
        )
        self.line = line
        self.column = column


class SystemSemanticError(HycertError, ValueError):
    pass


class CertificateFormatError(HycertError, ValueError):
    pass


class OutsideBoxError(HycertError, ValueError):
    """An expansion point does not lie in its box."""
