""":mod:`hycert.verdicts` --- Outcomes of numeric and exact checks
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

Every check in this package is sound but incomplete, so a failed check
is a value (:class:`Inconclusive`, :class:`Reject`, ...) rather than an
exception.  Negative outcomes are falsy.

"""
import enum
from typing import Any, NamedTuple, Optional


class PsdVerdict(enum.Enum):
    POSITIVE_DEFINITE = 'positive definite'
    POSITIVE_SEMIDEFINITE = 'positive semidefinite'
    INCONCLUSIVE = 'inconclusive'

    def __bool__(self) -> bool:
        return self is not PsdVerdict.INCONCLUSIVE


class VerifiedUniqueRoot(NamedTuple):
    #: the box proven to contain exactly one root
    box: Any
    #: the Krawczyk image, a tighter enclosure of that root
    enclosure: Any = None


class Inconclusive(NamedTuple):
    reason: str
    stage: Optional[str] = None

    def __bool__(self) -> bool:
        return False

    def __str__(self) -> str:
        if self.stage:
            return '{0}: {1}'.format(self.stage, self.reason)
        return self.reason


class Infeasible(NamedTuple):
    reason: str
    #: positive lower bound of the slack proven by the dual iterate
    dual_bound: Optional[float] = None

    def __bool__(self) -> bool:
        return False


class Failure(NamedTuple):
    reason: str
    best: Any = None

    def __bool__(self) -> bool:
        return False


class Accept(NamedTuple):
    conditions: int = 0


class Reject(NamedTuple):
    reason: str
    condition: Optional[str] = None

    def __bool__(self) -> bool:
        return False

    def __str__(self) -> str:
        if self.condition:
            return '{0}: {1}'.format(self.condition, self.reason)
        return self.reason
