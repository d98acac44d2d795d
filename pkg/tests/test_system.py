from fractions import Fraction

import numpy as np
import pytest

from hycert.exceptions import SystemSemanticError, SystemSyntaxError
from hycert.expr import parse
from hycert.interval import Interval, IntervalVector
from hycert.poly import IPoly
from hycert.system import (UncertainParam, classify_and_substitute,
                           integrate_member, member_field, midpoint_system,
                           parse_polynomial, parse_system, print_system)

BOXED = '''\
vars x, y
param u in [-1, 1]
init x^2 + y^2 <= 1/4

location a:
    flow x = u*y
    flow y = -x
    invariant x in [-2, 2]
    invariant y in [-3, 3]
    invariant x + y <= 4
'''


def test_parse_example2(example_system):
    system = example_system('example2')
    assert system.variables == ('x1', 'x2')
    assert system.start == 'l'
    assert [l.name for l in system.locations] == ['l']
    assert system.is_polynomial
    f1, f2 = system.field('l')
    assert f1.coefficient((0, 1)) == Interval(Fraction(99, 100),
                                              Fraction(101, 100))
    assert f2.coefficient((1, 0)) == Interval(Fraction(-104, 100),
                                              Fraction(-96, 100))
    assert f2.coefficient((3, 0)) == Interval(Fraction(32, 100),
                                              Fraction(347, 1000))
    assert system.box('l') is None
    assert len(system.location('l').unsafe) == 1


def test_parse_example4(example_system):
    system = example_system('example4')
    assert system.start == 'l1'
    assert [t.name for t in system.transitions] == ['l1->l2', 'l2->l1']
    assert all(t.reconstructed for t in system.transitions)
    assert system.transitions[0].reset_map() == {}
    assert system.location('l2').unsafe == ()
    assert len(system.location('l1').unsafe) == 2
    with pytest.raises(KeyError):
        system.location('l3')


def test_parse_nonpolynomial(example_system):
    system = example_system('example7')
    assert not system.is_polynomial
    assert system.all_variables == ('x1', 'x2', 'theta')
    assert system.parameters == (
        UncertainParam('theta', Interval(Fraction(98, 100),
                                         Fraction(12, 10))),
    )
    assert system.box('l') == IntervalVector([Interval(-2, 2),
                                              Interval(-2, 2)])
    with pytest.raises(SystemSemanticError):
        system.field('l')
    (factor, phi), = system.location('l').flow[0].terms
    assert phi == parse('exp(x1)', system.all_variables)


def test_box_and_bounds():
    system = parse_system(BOXED)
    assert system.start == 'a'
    assert system.box('a') == IntervalVector([Interval(-2, 2),
                                              Interval(-3, 3)])
    invariant = system.invariant('a')
    assert len(invariant) == 3
    assert invariant[0] == parse('4 - x - y', ('x', 'y')).to_ipoly()
    u = system.parameters[0]
    assert u.constraint == parse('(u + 1)*(1 - u)', ('u',)).to_ipoly()
    assert system.field('a')[0] == parse('u*y', ('x', 'y', 'u')).to_ipoly()


@pytest.mark.parametrize('name', ['example2', 'example3', 'example4',
                                  'example6', 'example7'])
def test_print_roundtrip(example_system, name):
    system = example_system(name)
    text = print_system(system)
    assert parse_system(text) == system
    assert str(system) == text


def test_parse_polynomial(fixture_path):
    with open(fixture_path('example1.poly'), encoding='utf-8') as f:
        psi = parse_polynomial(f.read())
    assert psi.variables == ('x1', 'x2')
    assert psi.coefficient((0, 2)) == Interval(Fraction(11388, 10000),
                                               Fraction(11945, 10000))
    assert psi.coefficient((0, 0)) == Interval.point(Fraction(9574, 10000))
    with pytest.raises(SystemSyntaxError):
        parse_polynomial('vars x\nflow x = 1\n')
    with pytest.raises(SystemSemanticError):
        parse_polynomial('vars x\n')


@pytest.mark.parametrize('text, message', [
    ('vars x\nfoo x\n', 'unknown keyword'),
    ('location l:\n', 'vars must be declared first'),
    ('vars x\nlocation l:\n    flow x = y\n', 'unknown variable'),
    ('vars x\nlocation l:\n    flow x = 1\n    unsafe z in [0, 1]\n',
     'unknown variable'),
    ('vars x\ninit [0, 1]*x >= 0\n', 'interval coefficient outside a flow'),
    ('vars x\nflow x = 1\n', 'flow outside a location block'),
    ('vars x, x\n', 'declared twice'),
    ('vars x\nlocation l:\n    flow x = [2, 1]\n', 'empty interval'),
])
def test_syntax_errors(text, message):
    with pytest.raises(SystemSyntaxError) as e:
        parse_system(text)
    assert message in str(e.value)


def test_syntax_error_line():
    with pytest.raises(SystemSyntaxError) as e:
        parse_system('vars x\n\n# comment\nbogus\n')
    assert e.value.line == 4


@pytest.mark.parametrize('text', [
    'vars x, y\nlocation l:\n    flow x = y\n',
    'vars x\n',
    'vars x\nlocation a:\n    flow x = 1\nlocation b:\n    flow x = 1\n',
    'vars x\nlocation a:\n    flow x = 1\ntransition a -> b:\n',
    'vars x\nparam u in [1, 1]\nlocation a:\n    flow x = u\n',
])
def test_semantic_errors(text):
    with pytest.raises(SystemSemanticError):
        parse_system(text)


def test_substitution_introduces_parameter(example_system):
    system, introduced = classify_and_substitute(example_system('example3'),
                                                 Fraction(9, 100))
    assert introduced == [UncertainParam('u1', Interval(Fraction(-11, 10),
                                                        Fraction(-9, 10)))]
    assert system.all_variables == ('x1', 'x2', 'u1')
    f1, f2 = system.field('l')
    assert f1.coefficient((0, 1, 1)) == Interval.point(1)
    assert f1.coefficient((0, 1, 0)) == Interval.point(0)
    assert f2.coefficient((1, 0, 0)) == Interval(Fraction(298, 100),
                                                 Fraction(302, 100))


def test_substitution_keeps_narrow_coefficients(example_system):
    original = example_system('example2')
    system, introduced = classify_and_substitute(original, Fraction(1, 10))
    assert introduced == []
    assert system is original


def test_substitution_avoids_taken_names():
    text = BOXED.replace('param u', 'param u1').replace('u*y', 'u1*y') \
        .replace('flow y = -x', 'flow y = [-2, 0]*x')
    system, introduced = classify_and_substitute(parse_system(text))
    assert [p.name for p in introduced] == ['u2']
    assert system.all_variables == ('x', 'y', 'u1', 'u2')


def test_midpoint_system(example_system):
    system = midpoint_system(example_system('example2'))
    f1, f2 = system.field('l')
    assert f2.coefficient((3, 0)) == Interval.point(Fraction(3335, 10000))
    assert f1.coefficient((0, 1)) == Interval.point(1)
    assert all(c.is_point for _, c in f2.items())
    with pytest.raises(SystemSemanticError):
        midpoint_system(example_system('example7'))


def test_member_field_stays_in_ranges(example_system, rng):
    system = example_system('example2')
    rhs = member_field(system, 'l', rng)
    dx1, dx2 = rhs(0.0, np.array([0.0, 1.0]))
    assert 0.99 <= dx1 <= 1.01
    assert -1.02 <= dx2 <= -0.98


def test_member_field_nonpolynomial(example_system, rng):
    system = example_system('example7')
    dx1, dx2 = member_field(system, 'l', rng)(0.0, np.array([1.0, 0.0]))
    assert dx1 == pytest.approx(-1 + (np.e - 1) / 2)
    assert dx2 == pytest.approx(-1 + np.cos(1.0))


def test_integrate_member(example_system, rng):
    system = example_system('example2')
    result = integrate_member(system, 'l', [1.5, 0.0], 1.0, rng, samples=20)
    assert result.success
    assert result.y.shape == (2, 20)
    assert result.t[-1] == pytest.approx(1.0)
    assert np.all(np.isfinite(result.y))
