""":mod:`hycert.expr` --- Expressions with non-polynomial terms
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

Right-hand sides are parsed with sympy.  Interval evaluation walks the
sympy tree in exact rational interval arithmetic; ``exp``, ``ln``,
``sin`` and ``cos`` go through :mod:`mpmath`'s interval context and their
endpoints are rounded outward to dyadic rationals.

"""
import logging
from fractions import Fraction
from typing import (Callable, Dict, List, Mapping, NamedTuple, Optional,
                    Sequence, Tuple)

import mpmath
import numpy as np
import sympy
from mpmath import iv, libmp
from sympy.parsing.sympy_parser import (convert_xor, parse_expr, rationalize,
                                        standard_transformations)

from .exceptions import ExprDomainError, IntervalError
from .interval import Interval, IntervalVector, round_down, round_up
from .poly import IPoly

__all__ = (
    'Expr', 'FieldComponent', 'eval_interval', 'from_ipoly', 'parse',
    'split_terms',
)

logger = logging.getLogger(__name__)

#: transcendental endpoints are rounded outward to this denominator
TRANSCENDENTAL_DENOMINATOR = 2 ** 53
#: working precision (bits) of the mpmath interval context
INTERVAL_PRECISION = 80

iv.prec = INTERVAL_PRECISION

TRANSFORMATIONS = standard_transformations + (convert_xor, rationalize)

FUNCTIONS = {
    'sqrt': sympy.sqrt,
    'exp': sympy.exp,
    'ln': sympy.log,
    'log': sympy.log,
    'sin': sympy.sin,
    'cos': sympy.cos,
    'pi': sympy.pi,
    'E': sympy.E,
}


class Expr(object):
    """A real expression over named variables."""

    __slots__ = ('tree', 'variables', '_float', '_gradient')

    def __init__(self, tree, variables: Sequence[str]) -> None:
        self.tree = sympy.sympify(tree)
        self.variables = tuple(variables)
        self._float = None
        self._gradient = None

    @property
    def symbols(self) -> Tuple[sympy.Symbol, ...]:
        return tuple(sympy.Symbol(v) for v in self.variables)

    @property
    def free_variables(self) -> Tuple[str, ...]:
        names = {s.name for s in self.tree.free_symbols}
        return tuple(v for v in self.variables if v in names)

    @property
    def is_polynomial(self) -> bool:
        return bool(self.tree.is_polynomial(*self.symbols))

    def restrict(self, variables: Sequence[str]) -> 'Expr':
        """The same expression over another variable list."""
        return Expr(self.tree, variables)

    def diff(self, name: str) -> 'Expr':
        return Expr(sympy.diff(self.tree, sympy.Symbol(name)), self.variables)

    def gradient(self) -> List['Expr']:
        if self._gradient is None:
            self._gradient = [self.diff(v) for v in self.variables]
        return self._gradient

    def evaluate_interval(self, box) -> Interval:
        return eval_interval(self, box)

    def evaluate_float(self, points) -> np.ndarray:
        """Evaluate at float points, one per row."""
        if self._float is None:
            self._float = sympy.lambdify(self.symbols, self.tree, 'numpy')
        points = np.atleast_2d(np.asarray(points, dtype=float))
        values = self._float(*points.T)
        return np.broadcast_to(np.asarray(values, dtype=float),
                               (points.shape[0],)).copy()

    def to_ipoly(self, coefficients: Optional[Mapping[str, Interval]] = None
                 ) -> IPoly:
        """Convert a polynomial expression; symbols that are not variables
        take their interval from ``coefficients``."""
        coefficients = dict(coefficients or {})
        if not self.is_polynomial:
            raise ExprDomainError('expression is not polynomial', self.tree)
        if not self.variables:
            return IPoly((), {(): _evaluate(self.tree, coefficients)})
        poly = sympy.Poly(self.tree, *self.symbols)
        return IPoly(self.variables, {
            monomial: _evaluate(coefficient, coefficients)
            for monomial, coefficient in poly.terms()
        })

    def __sub__(self, other) -> 'Expr':
        if isinstance(other, IPoly):
            other = from_ipoly(other)
        return Expr(self.tree - other.tree, self.variables)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Expr):
            return NotImplemented
        return self.tree == other.tree and self.variables == other.variables

    def __hash__(self) -> int:
        return hash((self.tree, self.variables))

    def __str__(self) -> str:
        return render(self.tree)

    def __repr__(self) -> str:
        return '{0!s}({1!s})'.format(self.__class__.__name__, self)


def render(tree) -> str:
    """Infix text that :func:`parse` reads back to the same tree."""
    text = sympy.sstr(tree, order='grlex')
    return text.replace('**', '^').replace('log(', 'ln(')


def parse(text: str, variables: Sequence[str],
          parameters: Sequence[str] = ()) -> Expr:
    """Parse infix ``text``; decimals become exact rationals.

    :raises ExprDomainError: on syntax errors or names that are neither
                             variables nor ``parameters``
    """
    names = tuple(variables) + tuple(parameters)
    local = dict(FUNCTIONS)
    local.update((name, sympy.Symbol(name)) for name in names)
    try:
        tree = parse_expr(text.replace('^', '**'), local_dict=local,
                          transformations=TRANSFORMATIONS)
    except Exception as e:
        # the tokenizer raises classes outside the SyntaxError tree
        raise ExprDomainError('cannot parse {0!r}: {1}'.format(text, e))
    unknown = sorted(s.name for s in tree.free_symbols if s.name not in names)
    if unknown:
        raise ExprDomainError('unknown variable {0!r}'.format(unknown[0]),
                              unknown[0])
    return Expr(tree, variables)


def from_ipoly(poly: IPoly) -> Expr:
    symbols = [sympy.Symbol(v) for v in poly.variables]
    tree = sympy.Integer(0)
    for monomial, coefficient in poly.exact_coefficients().items():
        term = sympy.Rational(coefficient.numerator, coefficient.denominator)
        for s, e in zip(symbols, monomial):
            if e:
                term = term * s ** e
        tree = tree + term
    return Expr(tree, poly.variables)


def _to_iv(value: Interval):
    lo = libmp.from_rational(value.lo.numerator, value.lo.denominator,
                             INTERVAL_PRECISION, libmp.round_floor)
    hi = libmp.from_rational(value.hi.numerator, value.hi.denominator,
                             INTERVAL_PRECISION, libmp.round_ceiling)
    return iv.mpf([mpmath.mp.make_mpf(lo), mpmath.mp.make_mpf(hi)])


def _from_iv(value, node) -> Interval:
    lo, hi = value._mpi_
    if lo in (libmp.fninf, libmp.finf, libmp.fnan) or \
            hi in (libmp.fninf, libmp.finf, libmp.fnan):
        raise ExprDomainError('unbounded enclosure', node)
    lo = Fraction(*libmp.to_rational(lo))
    hi = Fraction(*libmp.to_rational(hi))
    return Interval(round_down(lo, TRANSCENDENTAL_DENOMINATOR),
                    round_up(hi, TRANSCENDENTAL_DENOMINATOR))


def _transcendental(func: Callable, argument: Interval, node) -> Interval:
    return _from_iv(func(_to_iv(argument)), node)


def _power(base: Interval, exponent, node) -> Interval:
    if exponent.is_Integer:
        k = int(exponent)
        if k >= 0:
            return base ** k
        try:
            return 1 / base ** -k
        except IntervalError:
            raise ExprDomainError('division by an interval containing 0',
                                  node)
    if exponent.is_Rational and exponent.q == 2:
        if base.lo < 0:
            raise ExprDomainError('square root of a negative interval', node)
        return _power(base.sqrt(), sympy.Integer(exponent.p), node)
    if base.lo <= 0:
        raise ExprDomainError('non-integer power of a non-positive interval',
                              node)
    power = _evaluate(exponent, {})
    return _from_iv(iv.exp(_to_iv(power) * iv.log(_to_iv(base))), node)


def _evaluate(node, values: Mapping[str, Interval]) -> Interval:
    if node.is_Symbol:
        try:
            return values[node.name]
        except KeyError:
            raise ExprDomainError('no value for {0}'.format(node.name), node)
    if node.is_Rational:
        return Interval.point(Fraction(int(node.p), int(node.q)))
    if node.is_Float:
        return Interval.point(Fraction(str(node)))
    if node is sympy.pi:
        return _from_iv(+iv.pi, node)
    if node is sympy.E:
        return _from_iv(+iv.e, node)
    if node.is_Add:
        acc = Interval.point(0)
        for arg in node.args:
            acc = acc + _evaluate(arg, values)
        return acc
    if node.is_Mul:
        acc = Interval.point(1)
        for arg in node.args:
            acc = acc * _evaluate(arg, values)
        return acc
    if node.is_Pow:
        return _power(_evaluate(node.base, values), node.exp, node)
    if isinstance(node, sympy.exp):
        return _transcendental(iv.exp, _evaluate(node.args[0], values), node)
    if isinstance(node, sympy.log):
        argument = _evaluate(node.args[0], values)
        if argument.lo <= 0:
            raise ExprDomainError('logarithm of a non-positive interval', node)
        return _transcendental(iv.log, argument, node)
    if isinstance(node, sympy.sin):
        return _transcendental(iv.sin, _evaluate(node.args[0], values), node)
    if isinstance(node, sympy.cos):
        return _transcendental(iv.cos, _evaluate(node.args[0], values), node)
    raise ExprDomainError('unsupported operation {0}'.format(node.func), node)


def eval_interval(e: Expr, box, extra: Optional[Mapping] = None) -> Interval:
    """Enclosure of the range of ``e`` over ``box``.

    ``box`` is an :class:`~hycert.interval.IntervalVector` (or sequence)
    aligned with ``e.variables``, or a mapping from names to intervals.
    """
    if isinstance(box, Mapping):
        values: Dict[str, Interval] = {
            name: value if isinstance(value, Interval) else Interval(value)
            for name, value in box.items()
        }
    else:
        box = box if isinstance(box, IntervalVector) else IntervalVector(box)
        values = dict(zip(e.variables, box))
    if extra:
        values.update(extra)
    return _evaluate(e.tree, values)


class FieldComponent(NamedTuple):
    """``poly + sum_j coefficient_j * phi_j`` with polynomial coefficients
    and non-polynomial ``phi_j``."""

    poly: IPoly
    terms: Tuple[Tuple[IPoly, Expr], ...] = ()

    @property
    def is_polynomial(self) -> bool:
        return not self.terms


def split_terms(e: Expr, coefficients: Optional[Mapping[str, Interval]] = None
                ) -> FieldComponent:
    """Separate the polynomial part of ``e`` from products with
    non-polynomial factors."""
    coefficients = dict(coefficients or {})
    symbols = e.symbols
    expanded = sympy.expand(e.tree, power_exp=False, power_base=False,
                            log=False)
    poly = sympy.Integer(0)
    groups: Dict[object, object] = {}
    for term in sympy.Add.make_args(expanded):
        if term.is_polynomial(*symbols):
            poly = poly + term
            continue
        factor, phi = sympy.Integer(1), sympy.Integer(1)
        for part in sympy.Mul.make_args(term):
            if part.is_polynomial(*symbols):
                factor = factor * part
            else:
                phi = phi * part
        if any(s.name in coefficients for s in phi.free_symbols):
            raise ExprDomainError('uncertain coefficient inside a '
                                  'non-polynomial term', phi)
        groups[phi] = groups.get(phi, sympy.Integer(0)) + factor
    variables = e.variables
    terms = tuple(
        (Expr(factor, variables).to_ipoly(coefficients), Expr(phi, variables))
        for phi, factor in sorted(groups.items(), key=lambda kv: str(kv[0]))
    )
    return FieldComponent(Expr(poly, variables).to_ipoly(coefficients), terms)
