from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hycert.exceptions import DimensionMismatchError, IntervalError
from hycert.interval import (Interval, IntervalMatrix, IntervalVector,
                             SymRationalMatrix, interval_arith, matvec,
                             sqrt_lower, sqrt_upper, to_fraction)

rationals = st.fractions(min_value=-100, max_value=100, max_denominator=50)


@st.composite
def intervals(draw):
    a, b = draw(rationals), draw(rationals)
    return Interval(min(a, b), max(a, b))


@st.composite
def members(draw, interval):
    t = draw(st.fractions(min_value=0, max_value=1, max_denominator=20))
    return interval.lo + t * interval.width


def test_to_fraction():
    assert to_fraction('0.96') == Fraction(24, 25)
    assert to_fraction('151/99') == Fraction(151, 99)
    assert to_fraction(0.5) == Fraction(1, 2)
    assert to_fraction(3) == 3
    with pytest.raises(TypeError):
        to_fraction(True)
    with pytest.raises(ValueError):
        to_fraction(float('inf'))


def test_interval_arith():
    assert interval_arith(Interval(1, 2), Interval(3, 4), 'add') == \
        Interval(4, 6)
    assert interval_arith(Interval(-1, 2), Interval(3, 4), 'mul') == \
        Interval(-4, 8)
    assert interval_arith((1, 2), (3, 4), 'sub') == Interval(-3, -1)
    assert interval_arith((1, 2), (4, 4), 'div') == \
        Interval(Fraction(1, 4), Fraction(1, 2))
    with pytest.raises(ValueError):
        interval_arith((1, 2), (3, 4), 'pow')


def test_division_by_zero_interval():
    with pytest.raises(IntervalError) as e:
        Interval(1, 2) / Interval(-1, 1)
    assert 'interval division by zero-containing interval' in str(e.value)


def test_mid_rad():
    coefficient = Interval('0.96', '1.04')
    assert coefficient.mid == 1
    assert coefficient.rad == Fraction(1, 25)
    assert Interval.from_midrad(1, '0.04') == coefficient
    with pytest.raises(ValueError):
        Interval(2, 1)


def test_even_power_through_zero():
    assert Interval(-1, 2) ** 2 == Interval(0, 4)
    assert Interval(-3, -2) ** 2 == Interval(4, 9)
    assert Interval(-1, 2) ** 3 == Interval(-1, 8)
    assert Interval(-1, 2) ** 0 == Interval(1)


def test_mag_mig_abs():
    x = Interval(-3, 2)
    assert x.mag == 3
    assert x.mig == 0
    assert abs(Interval(-3, -2)) == Interval(2, 3)


def test_hull_and_intersection():
    a, b = Interval(0, 1), Interval(2, 3)
    assert a.hull(b) == Interval(0, 3)
    assert a.intersection(b) is None
    assert Interval(0, 2).intersection(Interval(1, 3)) == Interval(1, 2)
    assert Interval(1, 2).is_interior_of(Interval(0, 3))
    assert not Interval(0, 2).is_interior_of(Interval(0, 3))


def test_sqrt_bounds():
    assert sqrt_upper(Fraction(9, 4)) == Fraction(3, 2)
    assert sqrt_lower(2) ** 2 <= 2 <= sqrt_upper(2) ** 2
    assert Interval(4, 9).sqrt() == Interval(2, 3)
    with pytest.raises(IntervalError):
        Interval(-1, 1).sqrt()


def test_outward_rounding_contains():
    x = Interval(Fraction(1, 3), Fraction(2, 3))
    rounded = x.outward(100)
    assert x.issubset(rounded)
    assert rounded.lo.denominator <= 100


def test_str():
    assert str(Interval(Fraction(1, 2), 2)) == '[1/2, 2]'


@given(st.data(), intervals(), intervals(),
       st.sampled_from(['add', 'sub', 'mul']))
def test_inclusion(data, a, b, op):
    x = data.draw(members(a))
    y = data.draw(members(b))
    exact = {'add': x + y, 'sub': x - y, 'mul': x * y}[op]
    assert interval_arith(a, b, op).contains(exact)


@given(intervals(), intervals(), intervals())
def test_inclusion_monotone(a, b, c):
    wide = a.hull(c)
    assert (a * b).issubset(wide * b)
    assert (a + b).issubset(wide + b)


def test_vector_operations():
    v = IntervalVector([(1, 2), (3, 4)])
    assert v.mid() == [Fraction(3, 2), Fraction(7, 2)]
    assert v.rad() == [Fraction(1, 2), Fraction(1, 2)]
    assert v.contains([1, 4])
    assert not v.contains([0, 4])
    assert (v - v)[0] == Interval(-1, 1)
    assert IntervalVector.point([1, 2]).is_interior_of(
        IntervalVector.from_midrad([1, 2], Fraction(1, 10))
    )
    with pytest.raises(DimensionMismatchError):
        v + IntervalVector([(0, 1)])


def test_matvec():
    result = matvec([[1, 0], [1, -1]], IntervalVector([(1, 2), (3, 4)]))
    assert result[0] == Interval(1, 2)
    assert result[1] == Interval(-3, -1)
    with pytest.raises(DimensionMismatchError):
        matvec([[1, 0, 0]], IntervalVector([(1, 2)]))


def test_sym_rational_matrix():
    w = SymRationalMatrix.from_upper(2, [4, 2, 1])
    assert w[0, 1] == w[1, 0] == 2
    assert w.upper() == [4, 2, 1]
    assert w.shift(1) == SymRationalMatrix([[3, 2], [2, 0]])
    assert w.norm_inf() == 6
    assert SymRationalMatrix.identity(2) + SymRationalMatrix.zeros(2) == \
        SymRationalMatrix.diag([1, 1])
    with pytest.raises(ValueError):
        SymRationalMatrix([[1, 2], [3, 1]])


def test_interval_matrix():
    m = IntervalMatrix([[1, (-2, 2)], [(-2, 2), 1]])
    assert m.is_symmetric()
    assert m.midpoint_matrix() == SymRationalMatrix.identity(2)
    assert m.radius_matrix() == SymRationalMatrix([[0, 2], [2, 0]])
    assert m.contains([[1, 2], [2, 1]])
    assert IntervalMatrix.point([[1, 0], [0, 1]]).issubset(m)
    product = m.matvec([1, 1])
    assert product[0] == Interval(-1, 3)
