from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hycert.exceptions import BasisTooSmallError, DimensionMismatchError
from hycert.expr import parse
from hycert.interval import Interval, IntervalMatrix, SymRationalMatrix
from hycert.poly import (IPoly, InvariantTemplate, MonomialVector, ParamPoly,
                         PolyMap, coefficient_match, gram_to_poly,
                         gram_unknowns, lie_derivative, monomial_basis,
                         prune_basis)

X = ('x',)
XY = ('x1', 'x2')


def poly(text: str, variables=XY) -> IPoly:
    return parse(text, variables).to_ipoly()


def test_arithmetic():
    x = IPoly.variable(X, 'x')
    assert (x + 1) * (x - 1) == poly('x^2 - 1', X)
    assert (x * Interval(1, 2)) * (x * Interval(1, 2)) == \
        IPoly(X, {(2,): Interval(1, 4)})
    assert x + IPoly.zero(X) == x
    assert (x + 1) ** 2 == poly('x^2 + 2*x + 1', X)
    assert (x - x).is_zero


def test_mixed_variables_align():
    x1 = IPoly.variable(('x1',), 'x1')
    x2 = IPoly.variable(('x2',), 'x2')
    total = x1 + x2
    assert total.variables == XY
    assert total == poly('x1 + x2')


def test_render():
    x = IPoly.variable(X, 'x')
    assert str((x + 1) ** 2) == '1 + 2*x + x^2'
    assert str(-x * Fraction(3, 2)) == '-3/2*x'
    assert str(IPoly(X, {(1,): Interval(-1, 1)})) == '[-1,1]*x'
    assert str(IPoly.zero(X)) == '0'


def test_degree_and_exactness():
    p = poly('x1^3 + x1*x2 + 1')
    assert p.degree == 3
    assert p.is_exact
    assert p.exact_coefficients()[(1, 1)] == 1
    q = p + IPoly(XY, {(0, 1): Interval('0.99', '1.01')})
    assert not q.is_exact
    assert q.midpoint().coefficient((0, 1)) == 1
    assert q.radius().coefficient((0, 1)) == Fraction(1, 100)


def test_evaluate():
    p = poly('x1^2 + x2')
    assert p.evaluate([2, 3]) == Interval(7)
    assert p.evaluate({'x1': (-1, 1), 'x2': 0}) == Interval(0, 1)
    assert p.evaluate_float([[2.0, 3.0], [0.0, 0.0]]).tolist() == [7.0, 0.0]
    with pytest.raises(DimensionMismatchError):
        p.evaluate([1])


def test_diff_and_substitute():
    p = poly('x1^2*x2 + x2')
    assert p.diff('x1') == poly('2*x1*x2')
    assert p.diff('y').is_zero
    shifted = p.substitute({'x1': poly('x1 - 1')})
    assert shifted == poly('(x1 - 1)^2*x2 + x2')


def test_lie_derivative_rotation():
    phi = poly('x1^2 + x2^2')
    field = [poly('x2'), poly('-x1')]
    assert lie_derivative(phi, field).is_zero


def test_lie_derivative_interval_field():
    field = [IPoly(XY, {(0, 1): Interval('0.99', '1.01')}), poly('x1^5')]
    assert lie_derivative(poly('x1'), field) == field[0]


def test_lie_derivative_contains_midpoint_value():
    phi = poly('151/99 + 152/99*x1 + 62/33*x2 + 4/9*x1^2 + 106/99*x1*x2')
    field = [
        IPoly(XY, {(0, 1): Interval('0.99', '1.01')}),
        IPoly(XY, {(1, 0): Interval('-1.04', '-0.96'),
                   (3, 0): Interval('0.32', '0.347'),
                   (0, 1): Interval('-1.02', '-0.98')}),
    ]
    derivative = lie_derivative(phi, field)
    midpoint = lie_derivative(phi, [f.midpoint() for f in field])
    point = [Fraction(3, 2), 0]
    assert derivative.evaluate(point).contains(midpoint.evaluate(point))


rationals = st.fractions(min_value=-10, max_value=10, max_denominator=20)
exact_polys = st.dictionaries(
    st.tuples(st.integers(0, 3), st.integers(0, 3)), rationals, max_size=6
).map(lambda terms: IPoly(XY, terms))


@given(exact_polys, exact_polys, rationals, rationals, exact_polys,
       exact_polys, exact_polys)
def test_lie_derivative_is_linear(p, q, a, b, f1, f2, g1):
    field = [f1, f2]
    combined = lie_derivative(p * a + q * b, field)
    expected = lie_derivative(p, field) * a + lie_derivative(q, field) * b
    assert (combined - expected).is_zero
    # and linear in the field
    other = [g1, f1]
    summed = lie_derivative(p, [f + g for f, g in zip(field, other)])
    assert (summed - lie_derivative(p, field) -
            lie_derivative(p, other)).is_zero


def test_lie_derivative_field_size():
    with pytest.raises(DimensionMismatchError):
        lie_derivative(poly('x1'), [poly('x1')])


def test_monomial_basis():
    assert monomial_basis(2, 1).monomials == ((0, 0), (1, 0), (0, 1))
    assert monomial_basis(1, 0).monomials == ((0,),)
    assert len(monomial_basis(2, 2)) == 6
    assert monomial_basis(2, 2).variables == XY
    with pytest.raises(ValueError):
        monomial_basis(2, -1)


def test_monomial_vector():
    m = MonomialVector([(1, 0), (0, 0)], XY)
    assert m.monomials == ((0, 0), (1, 0))
    assert m.index((1, 0)) == 1
    assert m.product_span() == [(0, 0), (1, 0), (2, 0)]
    assert m.without([0]).monomials == ((1, 0),)
    with pytest.raises(ValueError):
        MonomialVector([(1, 0), (1, 0)], XY)


def test_gram_to_poly():
    m = monomial_basis(1, 1, X)
    assert gram_to_poly(m, [[1, 1], [1, 1]]) == poly('x^2 + 2*x + 1', X)
    assert gram_to_poly(m, SymRationalMatrix.zeros(2)).is_zero
    interval = gram_to_poly(m, IntervalMatrix([[1, (0, 1)], [(0, 1), 1]]))
    assert interval.coefficient((1,)) == Interval(0, 2)
    with pytest.raises(DimensionMismatchError):
        gram_to_poly(m, [[1]])


def test_coefficient_match():
    m = monomial_basis(1, 1, X)
    match = coefficient_match(poly('x^2', X), m)
    assert gram_unknowns(2) == [(0, 0), (0, 1), (1, 1)]
    # rows 1, x, x^2; unknowns W00, W01, W11
    assert match.matrix.tolist() == [[1, 0, 0], [0, 2, 0], [0, 0, 1]]
    assert list(match.rhs) == [Interval(0), Interval(0), Interval(1)]


def test_coefficient_match_self():
    m = monomial_basis(2, 1)
    w = SymRationalMatrix.from_upper(3, [2, 1, 0, 3, 1, 4])
    match = coefficient_match(gram_to_poly(m, w), m, w)
    assert all(v == Interval(0) for v in match.rhs)


def test_coefficient_match_basis_too_small():
    with pytest.raises(BasisTooSmallError) as e:
        coefficient_match(poly('x^4', X), monomial_basis(1, 1, X))
    assert 'monomial basis too small' in str(e.value)


def test_prune_basis():
    # x^2 is absent and cannot be produced, so x is dropped
    pruned = prune_basis(poly('1 + y^2', ('x', 'y')),
                         monomial_basis(2, 1, ('x', 'y')))
    assert pruned.monomials == ((0, 0), (0, 1))


def test_param_poly():
    template = InvariantTemplate(XY, 1)
    assert template.size == 3
    assert list(template.parameters) == [0, 1, 2]
    phi = template.as_param_poly()
    assert phi.parameters() == [0, 1, 2]
    derivative = lie_derivative(phi, [poly('x2'), poly('-x1')])
    assert derivative.instantiate([5, 1, 2]) == poly('x2 - 2*x1')
    shifted = phi - poly('1/100')
    assert shifted.instantiate([0, 0, 0]) == IPoly.constant(XY, '-1/100')
    assert ParamPoly.from_ipoly(poly('x1')).is_constant


def test_param_poly_offset_and_products():
    template = InvariantTemplate(XY, 1, offset=3)
    phi = template.as_param_poly()
    assert phi.parameters() == [3, 4, 5]
    assert template.instantiate({3: 1, 4: 0, 5: 0}) == IPoly.constant(XY, 1)
    with pytest.raises(ValueError):
        phi * phi
    with pytest.raises(ValueError):
        phi.to_ipoly()
    assert (phi * 2).instantiate({3: 1, 4: 1, 5: 0}) == poly('2 + 2*x1')


def test_param_poly_substitute():
    phi = InvariantTemplate(XY, 1).as_param_poly()
    reset = phi.substitute({'x1': poly('x1 + 1')})
    assert reset.instantiate([0, 1, 0]) == poly('x1 + 1')


def test_poly_map():
    f = PolyMap([poly('x1^2 - x2'), poly('x1*x2')])
    jacobian = f.jacobian_enclosure([1, 2])
    assert jacobian[0, 0] == Interval(2)
    assert jacobian[0, 1] == Interval(-1)
    assert jacobian[1, 0] == Interval(2)
    assert f.jacobian_midpoint([1, 2]).tolist() == [[2, -1], [2, 1]]
    shifted = f - [Interval(1), Interval(2)]
    assert list(shifted.evaluate([1, 2])) == [Interval(-2), Interval(0)]
    restricted = f.restrict({'x2': 1})
    assert restricted.variables == ('x1',)
    assert list(restricted.evaluate([3])) == [Interval(8), Interval(3)]
