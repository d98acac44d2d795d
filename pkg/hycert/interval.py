""":mod:`hycert.interval` --- Exact rational interval arithmetic
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

Intervals, interval vectors and interval matrices whose endpoints are
:class:`fractions.Fraction`.  Every operation returns the exact set image,
so no directed rounding is involved.  Endpoints can grow large over a long
computation; :meth:`Interval.outward` rounds them outward to a bounded
denominator between stages.

Exact (non-interval) matrices are numpy ``object`` arrays of
:class:`~fractions.Fraction`.

"""
import math
import numbers
import operator
from fractions import Fraction
from typing import Iterable, Iterator, List, Optional, Sequence, Union

import numpy as np

from .exceptions import DimensionMismatchError, IntervalError

__all__ = (
    'OUTWARD_DENOMINATOR', 'Interval', 'IntervalMatrix', 'IntervalVector',
    'SymRationalMatrix', 'as_interval', 'as_rational_array',
    'interval_arith', 'matvec', 'round_down', 'round_up', 'sqrt_lower',
    'sqrt_upper', 'to_fraction',
)

#: Denominator cap used when rounding endpoints outward between stages.
OUTWARD_DENOMINATOR = 2 ** 64

Rational = Union[int, Fraction]


def to_fraction(value) -> Fraction:
    """Convert ``value`` to an exact :class:`~fractions.Fraction`.

    Floats are converted exactly (their binary value), strings are parsed
    as decimal or ``p/q`` literals.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError('cannot convert a boolean to a rational')
    if isinstance(value, numbers.Integral):
        return Fraction(int(value))
    if isinstance(value, numbers.Rational):
        return Fraction(int(value.numerator), int(value.denominator))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, numbers.Real):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError('cannot convert {0!r} to a rational'.format(value))
        return Fraction(value)
    raise TypeError('cannot convert {0!r} to a rational'.format(value))


def round_down(value: Fraction,
               max_denominator: int = OUTWARD_DENOMINATOR) -> Fraction:
    if value.denominator <= max_denominator:
        return value
    return Fraction(math.floor(value * max_denominator), max_denominator)


def round_up(value: Fraction,
             max_denominator: int = OUTWARD_DENOMINATOR) -> Fraction:
    if value.denominator <= max_denominator:
        return value
    return Fraction(math.ceil(value * max_denominator), max_denominator)


def _exact_sqrt(value: Fraction) -> Optional[Fraction]:
    p, q = value.numerator, value.denominator
    rp, rq = math.isqrt(p), math.isqrt(q)
    if rp * rp == p and rq * rq == q:
        return Fraction(rp, rq)
    return None


def sqrt_upper(value, scale: int = OUTWARD_DENOMINATOR) -> Fraction:
    """Rational upper bound of ``sqrt(value)``; exact on rational squares."""
    value = to_fraction(value)
    if value < 0:
        raise ValueError('square root of a negative number')
    exact = _exact_sqrt(value)
    if exact is not None:
        return exact
    p, q = value.numerator, value.denominator
    # sqrt(p/q) = sqrt(p*q) / q
    root = math.isqrt(p * q * scale * scale)
    if root * root < p * q * scale * scale:
        root += 1
    return Fraction(root, q * scale)


def sqrt_lower(value, scale: int = OUTWARD_DENOMINATOR) -> Fraction:
    """Rational lower bound of ``sqrt(value)``; exact on rational squares."""
    value = to_fraction(value)
    if value < 0:
        raise ValueError('square root of a negative number')
    exact = _exact_sqrt(value)
    if exact is not None:
        return exact
    p, q = value.numerator, value.denominator
    return Fraction(math.isqrt(p * q * scale * scale), q * scale)


class Interval(object):
    """Closed interval ``[lo, hi]`` with rational endpoints.

    Instances are treated as immutable values.  Plain numbers mix freely
    with intervals and are promoted to point intervals.
    """

    __slots__ = ('lo', 'hi')

    def __init__(self, lo, hi=None) -> None:
        lo = to_fraction(lo)
        hi = lo if hi is None else to_fraction(hi)
        if lo > hi:
            raise ValueError(
                'interval endpoints out of order: [{0}, {1}]'.format(lo, hi)
            )
        self.lo = lo
        self.hi = hi

    @classmethod
    def point(cls, value) -> 'Interval':
        return cls(value, value)

    @classmethod
    def from_midrad(cls, mid, rad) -> 'Interval':
        mid, rad = to_fraction(mid), to_fraction(rad)
        if rad < 0:
            raise ValueError('negative interval radius: {0}'.format(rad))
        return cls(mid - rad, mid + rad)

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def rad(self) -> Fraction:
        return (self.hi - self.lo) / 2

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mag(self) -> Fraction:
        """Largest absolute value of a member."""
        return max(abs(self.lo), abs(self.hi))

    @property
    def mig(self) -> Fraction:
        """Smallest absolute value of a member."""
        if self.lo <= 0 <= self.hi:
            return Fraction(0)
        return min(abs(self.lo), abs(self.hi))

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, value) -> bool:
        if isinstance(value, Interval):
            return self.lo <= value.lo and value.hi <= self.hi
        value = to_fraction(value)
        return self.lo <= value <= self.hi

    def issubset(self, other: 'Interval') -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def is_interior_of(self, other: 'Interval') -> bool:
        return other.lo < self.lo and self.hi < other.hi

    def hull(self, other) -> 'Interval':
        other = as_interval(other)
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def intersection(self, other) -> Optional['Interval']:
        other = as_interval(other)
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            return None
        return Interval(lo, hi)

    def outward(self,
                max_denominator: int = OUTWARD_DENOMINATOR) -> 'Interval':
        return Interval(round_down(self.lo, max_denominator),
                        round_up(self.hi, max_denominator))

    def sqrt(self) -> 'Interval':
        if self.lo < 0:
            raise IntervalError('square root of an interval reaching below 0')
        return Interval(sqrt_lower(self.lo), sqrt_upper(self.hi))

    def __add__(self, other) -> 'Interval':
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __sub__(self, other) -> 'Interval':
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __rsub__(self, other) -> 'Interval':
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other) -> 'Interval':
        other = _coerce(other)
        if other is None:
            return NotImplemented
        if self.is_point and other.is_point:
            return Interval.point(self.lo * other.lo)
        products = (self.lo * other.lo, self.lo * other.hi,
                    self.hi * other.lo, self.hi * other.hi)
        return Interval(min(products), max(products))

    __rmul__ = __mul__

    def __truediv__(self, other) -> 'Interval':
        other = _coerce(other)
        if other is None:
            return NotImplemented
        if other.lo <= 0 <= other.hi:
            raise IntervalError(
                'interval division by zero-containing interval'
            )
        return self * Interval(1 / other.hi, 1 / other.lo)

    def __rtruediv__(self, other) -> 'Interval':
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other / self

    def __neg__(self) -> 'Interval':
        return Interval(-self.hi, -self.lo)

    def __pos__(self) -> 'Interval':
        return self

    def __pow__(self, exponent: int) -> 'Interval':
        if not isinstance(exponent, numbers.Integral) or exponent < 0:
            return NotImplemented
        exponent = int(exponent)
        if exponent == 0:
            return Interval.point(1)
        lo, hi = self.lo ** exponent, self.hi ** exponent
        if exponent % 2:
            return Interval(lo, hi)
        if self.lo <= 0 <= self.hi:
            return Interval(0, max(lo, hi))
        return Interval(min(lo, hi), max(lo, hi))

    def __abs__(self) -> 'Interval':
        return Interval(self.mig, self.mag)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))

    def __repr__(self) -> str:
        return '{0!s}({1!r}, {2!r})'.format(
            self.__class__.__name__, str(self.lo), str(self.hi)
        )

    def __str__(self) -> str:
        return '[{0}, {1}]'.format(self.lo, self.hi)


def _coerce(value) -> Optional[Interval]:
    if isinstance(value, Interval):
        return value
    try:
        return Interval.point(value)
    except TypeError:
        return None


def as_interval(value) -> Interval:
    if isinstance(value, Interval):
        return value
    if isinstance(value, (tuple, list)) and len(value) == 2:
        return Interval(*value)
    return Interval.point(value)


_OPERATIONS = {
    'add': operator.add,
    'sub': operator.sub,
    'mul': operator.mul,
    'div': operator.truediv,
}


def interval_arith(a, b, op: str) -> Interval:
    """Apply ``op`` (one of add, sub, mul, div) to two intervals."""
    try:
        func = _OPERATIONS[op]
    except KeyError:
        raise ValueError('unknown interval operation: {0!r}'.format(op))
    return func(as_interval(a), as_interval(b))


class IntervalVector(object):
    __slots__ = ('_items',)

    def __init__(self, items: Iterable) -> None:
        self._items = tuple(as_interval(item) for item in items)

    @classmethod
    def point(cls, values: Iterable) -> 'IntervalVector':
        return cls(Interval.point(v) for v in values)

    @classmethod
    def from_midrad(cls, mid: Sequence, rad) -> 'IntervalVector':
        if isinstance(rad, (int, float, Fraction, str)):
            rad = [rad] * len(mid)
        if len(rad) != len(mid):
            raise DimensionMismatchError('midpoint and radius lengths differ')
        return cls(Interval.from_midrad(m, r) for m, r in zip(mid, rad))

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self._items)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return IntervalVector(self._items[index])
        return self._items[index]

    def mid(self) -> List[Fraction]:
        return [item.mid for item in self._items]

    def rad(self) -> List[Fraction]:
        return [item.rad for item in self._items]

    @property
    def is_point(self) -> bool:
        return all(item.is_point for item in self._items)

    def _check(self, other) -> 'IntervalVector':
        if not isinstance(other, IntervalVector):
            other = IntervalVector(other)
        if len(other) != len(self):
            raise DimensionMismatchError(
                'vector lengths differ: {0} and {1}'.format(
                    len(self), len(other)
                )
            )
        return other

    def __add__(self, other) -> 'IntervalVector':
        other = self._check(other)
        return IntervalVector(a + b for a, b in zip(self, other))

    __radd__ = __add__

    def __sub__(self, other) -> 'IntervalVector':
        other = self._check(other)
        return IntervalVector(a - b for a, b in zip(self, other))

    def __rsub__(self, other) -> 'IntervalVector':
        return self._check(other) - self

    def __neg__(self) -> 'IntervalVector':
        return IntervalVector(-a for a in self)

    def scale(self, factor) -> 'IntervalVector':
        return IntervalVector(a * factor for a in self)

    def contains(self, point: Sequence) -> bool:
        if len(point) != len(self):
            return False
        return all(a.contains(x) for a, x in zip(self, point))

    def issubset(self, other: 'IntervalVector') -> bool:
        other = self._check(other)
        return all(a.issubset(b) for a, b in zip(self, other))

    def is_interior_of(self, other: 'IntervalVector') -> bool:
        other = self._check(other)
        return all(a.is_interior_of(b) for a, b in zip(self, other))

    def hull(self, other) -> 'IntervalVector':
        other = self._check(other)
        return IntervalVector(a.hull(b) for a, b in zip(self, other))

    def intersection(self, other) -> Optional['IntervalVector']:
        other = self._check(other)
        items = [a.intersection(b) for a, b in zip(self, other)]
        if any(item is None for item in items):
            return None
        return IntervalVector(items)

    def outward(self,
                max_denominator: int = OUTWARD_DENOMINATOR) -> 'IntervalVector':
        return IntervalVector(a.outward(max_denominator) for a in self)

    def widen(self, factor) -> 'IntervalVector':
        """Scale every radius by ``factor`` around the midpoints."""
        factor = to_fraction(factor)
        return IntervalVector(
            Interval.from_midrad(a.mid, a.rad * factor) for a in self
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntervalVector):
            return NotImplemented
        return self._items == other._items

    def __hash__(self) -> int:
        return hash(self._items)

    def __repr__(self) -> str:
        return '{0!s}({1!r})'.format(self.__class__.__name__, list(self._items))

    def __str__(self) -> str:
        return '({0})'.format(', '.join(str(a) for a in self._items))


def as_rational_array(matrix) -> np.ndarray:
    """Return ``matrix`` as a 2-D numpy object array of fractions."""
    if isinstance(matrix, SymRationalMatrix):
        return matrix.entries
    rows = [[to_fraction(x) for x in row] for row in matrix]
    if not rows:
        return np.empty((0, 0), dtype=object)
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise DimensionMismatchError('matrix rows have different lengths')
    out = np.empty((len(rows), width), dtype=object)
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            out[i, j] = x
    return out


def matvec(matrix, vector) -> IntervalVector:
    """Exact product of a rational matrix with an interval vector."""
    matrix = as_rational_array(matrix)
    if not isinstance(vector, IntervalVector):
        vector = IntervalVector(vector)
    if matrix.shape[1] != len(vector):
        raise DimensionMismatchError(
            'cannot multiply {0}x{1} matrix by vector of length {2}'.format(
                matrix.shape[0], matrix.shape[1], len(vector)
            )
        )
    out = []
    for row in matrix:
        acc = Interval.point(0)
        for a, v in zip(row, vector):
            if a:
                acc = acc + v * a
        out.append(acc)
    return IntervalVector(out)


class SymRationalMatrix(object):
    """Symmetric matrix with exact rational entries."""

    __slots__ = ('_entries',)

    def __init__(self, entries) -> None:
        arr = as_rational_array(entries)
        if arr.shape[0] != arr.shape[1]:
            raise DimensionMismatchError('symmetric matrix must be square')
        n = arr.shape[0]
        for i in range(n):
            for j in range(i + 1, n):
                if arr[i, j] != arr[j, i]:
                    raise ValueError(
                        'matrix is not symmetric at ({0}, {1})'.format(i, j)
                    )
        self._entries = arr

    @classmethod
    def identity(cls, order: int) -> 'SymRationalMatrix':
        return cls.diag([1] * order)

    @classmethod
    def zeros(cls, order: int) -> 'SymRationalMatrix':
        return cls.diag([0] * order)

    @classmethod
    def diag(cls, values: Sequence) -> 'SymRationalMatrix':
        n = len(values)
        return cls([[values[i] if i == j else 0 for j in range(n)]
                    for i in range(n)])

    @classmethod
    def from_upper(cls, order: int, values: Sequence) -> 'SymRationalMatrix':
        """Build from upper-triangular entries listed row by row."""
        if len(values) != order * (order + 1) // 2:
            raise DimensionMismatchError(
                'expected {0} upper-triangular entries, got {1}'.format(
                    order * (order + 1) // 2, len(values)
                )
            )
        rows = [[0] * order for _ in range(order)]
        it = iter(values)
        for i in range(order):
            for j in range(i, order):
                rows[i][j] = rows[j][i] = next(it)
        return cls(rows)

    @property
    def order(self) -> int:
        return self._entries.shape[0]

    @property
    def entries(self) -> np.ndarray:
        return self._entries.copy()

    def __getitem__(self, index):
        return self._entries[index]

    def upper(self) -> List[Fraction]:
        n = self.order
        return [self._entries[i, j] for i in range(n) for j in range(i, n)]

    def to_float(self) -> np.ndarray:
        return self._entries.astype(float)

    def shift(self, value) -> 'SymRationalMatrix':
        """Return ``W - value * I``."""
        value = to_fraction(value)
        arr = self._entries.copy()
        for i in range(self.order):
            arr[i, i] -= value
        return SymRationalMatrix(arr)

    def norm_inf(self) -> Fraction:
        if not self.order:
            return Fraction(0)
        return max(sum((abs(x) for x in row), Fraction(0))
                   for row in self._entries)

    def is_nonnegative(self) -> bool:
        return all(x >= 0 for x in self._entries.flat)

    def __add__(self, other) -> 'SymRationalMatrix':
        if not isinstance(other, SymRationalMatrix):
            return NotImplemented
        return SymRationalMatrix(self._entries + other._entries)

    def __sub__(self, other) -> 'SymRationalMatrix':
        if not isinstance(other, SymRationalMatrix):
            return NotImplemented
        return SymRationalMatrix(self._entries - other._entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymRationalMatrix):
            return NotImplemented
        return (self._entries.shape == other._entries.shape and
                bool(np.all(self._entries == other._entries)))

    def __hash__(self) -> int:
        return hash(tuple(self._entries.flat))

    def __repr__(self) -> str:
        return '{0!s}({1!r})'.format(
            self.__class__.__name__,
            [[str(x) for x in row] for row in self._entries]
        )


class IntervalMatrix(object):
    """Dense matrix of :class:`Interval` entries."""

    __slots__ = ('_rows',)

    def __init__(self, rows) -> None:
        rows = tuple(tuple(as_interval(x) for x in row) for row in rows)
        if rows and any(len(row) != len(rows[0]) for row in rows):
            raise DimensionMismatchError('matrix rows have different lengths')
        self._rows = rows

    @classmethod
    def point(cls, matrix) -> 'IntervalMatrix':
        arr = as_rational_array(matrix)
        return cls([[Interval.point(x) for x in row] for row in arr])

    @classmethod
    def from_midrad(cls, mid, rad) -> 'IntervalMatrix':
        mid, rad = as_rational_array(mid), as_rational_array(rad)
        if mid.shape != rad.shape:
            raise DimensionMismatchError('midpoint and radius shapes differ')
        return cls([[Interval.from_midrad(m, r) for m, r in zip(mrow, rrow)]
                    for mrow, rrow in zip(mid, rad)])

    @property
    def shape(self):
        return (len(self._rows), len(self._rows[0]) if self._rows else 0)

    def __getitem__(self, index) -> Interval:
        i, j = index
        return self._rows[i][j]

    def __iter__(self):
        return iter(self._rows)

    def mid(self) -> np.ndarray:
        return as_rational_array([[x.mid for x in row] for row in self._rows])

    def rad(self) -> np.ndarray:
        return as_rational_array([[x.rad for x in row] for row in self._rows])

    def is_symmetric(self) -> bool:
        n, m = self.shape
        if n != m:
            return False
        return all(self._rows[i][j] == self._rows[j][i]
                   for i in range(n) for j in range(i + 1, n))

    def midpoint_matrix(self) -> SymRationalMatrix:
        return SymRationalMatrix(self.mid())

    def radius_matrix(self) -> SymRationalMatrix:
        return SymRationalMatrix(self.rad())

    def __add__(self, other) -> 'IntervalMatrix':
        if not isinstance(other, IntervalMatrix):
            other = IntervalMatrix.point(other)
        if other.shape != self.shape:
            raise DimensionMismatchError('matrix shapes differ')
        return IntervalMatrix([[a + b for a, b in zip(ra, rb)]
                               for ra, rb in zip(self._rows, other._rows)])

    __radd__ = __add__

    def matvec(self, vector) -> IntervalVector:
        if not isinstance(vector, IntervalVector):
            vector = IntervalVector(vector)
        if self.shape[1] != len(vector):
            raise DimensionMismatchError('matrix and vector sizes differ')
        out = []
        for row in self._rows:
            acc = Interval.point(0)
            for a, v in zip(row, vector):
                acc = acc + a * v
            out.append(acc)
        return IntervalVector(out)

    def contains(self, matrix) -> bool:
        arr = as_rational_array(matrix)
        if arr.shape != self.shape:
            return False
        return all(self._rows[i][j].contains(arr[i, j])
                   for i in range(arr.shape[0]) for j in range(arr.shape[1]))

    def issubset(self, other: 'IntervalMatrix') -> bool:
        if other.shape != self.shape:
            return False
        return all(a.issubset(b) for ra, rb in zip(self._rows, other._rows)
                   for a, b in zip(ra, rb))

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntervalMatrix):
            return NotImplemented
        return self._rows == other._rows

    def __hash__(self) -> int:
        return hash(self._rows)

    def __repr__(self) -> str:
        return '{0!s}({1!r})'.format(
            self.__class__.__name__,
            [[str(x) for x in row] for row in self._rows]
        )
