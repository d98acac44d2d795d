import math
from fractions import Fraction

import pytest

from hycert.exceptions import ExprDomainError
from hycert.expr import eval_interval, from_ipoly, parse, split_terms
from hycert.interval import Interval, IntervalVector

X = ('x',)
XY = ('x', 'y')


def test_exp_enclosure():
    result = eval_interval(parse('exp(x)', X), [Interval(0, 1)])
    assert result.lo <= 1
    assert result.hi >= Fraction(math.e)
    assert result.hi - Fraction(math.e) < Fraction(1, 10 ** 10)


def test_sqrt_enclosure():
    result = eval_interval(parse('sqrt(x)', X), [Interval(4, 9)])
    assert result.lo <= 2 and result.hi >= 3
    assert result.width < 1 + Fraction(1, 10 ** 9)


def test_cos_enclosure():
    result = eval_interval(parse('cos(x)', X), IntervalVector([Interval(0, 3)]))
    assert result.contains(Fraction(math.cos(3)))
    assert result.contains(1)
    assert result.hi <= 1 + Fraction(1, 10 ** 10)


def test_mapping_box_and_extra_values():
    e = parse('a*x + y', XY, parameters=('a',))
    result = eval_interval(e, {'x': Interval(1, 2), 'y': 3},
                           extra={'a': Interval(-1, 1)})
    assert result == Interval(1, 5)


def test_domain_errors():
    with pytest.raises(ExprDomainError):
        eval_interval(parse('sqrt(x)', X), [Interval(-1, 1)])
    with pytest.raises(ExprDomainError):
        eval_interval(parse('ln(x)', X), [Interval(0, 1)])
    with pytest.raises(ExprDomainError):
        eval_interval(parse('1/x', X), [Interval(-1, 1)])


def test_parse_unknown_variable():
    with pytest.raises(ExprDomainError) as e:
        parse('x + y', X)
    assert "unknown variable 'y'" in str(e.value)


def test_parse_syntax_error():
    with pytest.raises(ExprDomainError):
        parse('x +', X)


def test_decimals_are_exact():
    p = parse('0.1*x + 1/3', X).to_ipoly()
    assert p.coefficient((1,)) == Interval.point(Fraction(1, 10))
    assert p.coefficient((0,)) == Interval.point(Fraction(1, 3))


def test_to_ipoly_with_interval_coefficient():
    e = parse('a*x^2 - x', X, parameters=('a',))
    p = e.to_ipoly({'a': Interval(1, 2)})
    assert p.coefficient((2,)) == Interval(1, 2)
    assert p.coefficient((1,)) == Interval.point(-1)
    with pytest.raises(ExprDomainError):
        parse('exp(x)', X).to_ipoly()


def test_expression_queries():
    e = parse('x^3 + exp(y)', XY)
    assert e.free_variables == ('x', 'y')
    assert parse('exp(y)', XY).free_variables == ('y',)
    assert not e.is_polynomial
    assert parse('x^3 + y', XY).is_polynomial
    assert e.diff('x') == parse('3*x^2', XY)
    assert [str(d) for d in parse('x*y', XY).gradient()] == ['y', 'x']


def test_render_parses_back():
    for text in ('x^2 + 2*x + 1', 'exp(-x) - ln(x + 2)', 'sin(x)*cos(x)'):
        e = parse(text, X)
        assert parse(str(e), X) == e


def test_evaluate_float():
    values = parse('x*y + 1', XY).evaluate_float([[1, 2], [3, 4]])
    assert values.tolist() == [3.0, 13.0]
    assert parse('5', XY).evaluate_float([[1, 2], [3, 4]]).tolist() == \
        [5.0, 5.0]


def test_from_ipoly():
    p = parse('x^2 - 3*x*y + 1/2', XY).to_ipoly()
    assert from_ipoly(p).to_ipoly() == p


def test_split_terms():
    component = split_terms(parse('x^2 + 3*x*exp(x) - exp(x)', X))
    assert not component.is_polynomial
    assert component.poly == parse('x^2', X).to_ipoly()
    (factor, phi), = component.terms
    assert factor == parse('3*x - 1', X).to_ipoly()
    assert phi == parse('exp(x)', X)


def test_split_terms_polynomial():
    component = split_terms(parse('a*x + 1', X, parameters=('a',)),
                            {'a': Interval(0, 1)})
    assert component.is_polynomial
    assert component.poly.coefficient((1,)) == Interval(0, 1)


def test_split_terms_rejects_uncertain_transcendental():
    with pytest.raises(ExprDomainError):
        split_terms(parse('exp(a*x)', X, parameters=('a',)),
                    {'a': Interval(0, 1)})
