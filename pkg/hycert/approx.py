""":mod:`hycert.approx` --- Polynomial enclosures of non-polynomial terms
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

A term ``phi`` on a box is replaced by a least-squares polynomial ``g``
fitted on a regular mesh, plus an interval ``[-mu, mu]`` with

    |phi(x) - g(x)| <= n/(n+1) * beta * diam + mu0

for every ``x`` in the box.  ``mu0`` bounds the fit residual at the mesh
points, ``beta`` bounds the gradient norm of ``phi - g`` and ``diam`` is
the diameter of a mesh cell.  Cells are cubes of side ``s``, so ``diam``
is ``s * sqrt(n)`` rounded up and equals ``s`` for a single variable.

"""
import itertools
import logging
from fractions import Fraction
from typing import Dict, List, NamedTuple, Sequence, Tuple, Union

import numpy as np

from .exceptions import ApproximationError, ExprDomainError, IntervalError
from .expr import Expr, FieldComponent, eval_interval, split_terms
from .helpers import locked_cached_property
from .interval import (Interval, IntervalVector, sqrt_upper, to_fraction)
from .poly import IPoly, monomial_basis
from .rational import rationalize

__all__ = (
    'EnclosedTerm', 'ErrorBound', 'Mesh', 'bound_terms', 'enclose_field',
    'enclose_term', 'error_bound', 'fit_polynomial',
)

logger = logging.getLogger(__name__)

DEFAULT_DEGREE = 3
DEFAULT_SPACING = Fraction(1, 4)
#: pieces per mesh cell axis when the gradient of the residual is enclosed
DEFAULT_SUBDIVISION = 4
#: fit coefficients are rounded to this denominator bound
FIT_DENOMINATOR = 10 ** 6


class Mesh(object):
    """Regular grid of spacing ``s`` on a box; the last step of an axis is
    shortened to end on the box boundary."""

    def __init__(self, box: IntervalVector, spacing) -> None:
        spacing = to_fraction(spacing)
        if spacing <= 0:
            raise ValueError('mesh spacing must be positive')
        self.box = box if isinstance(box, IntervalVector) \
            else IntervalVector(box)
        self.spacing = spacing

    @property
    def dimension(self) -> int:
        return len(self.box)

    @locked_cached_property
    def axes(self) -> List[List[Fraction]]:
        axes = []
        for side in self.box:
            ticks = [side.lo]
            while ticks[-1] + self.spacing < side.hi:
                ticks.append(ticks[-1] + self.spacing)
            if ticks[-1] != side.hi:
                ticks.append(side.hi)
            axes.append(ticks)
        return axes

    @locked_cached_property
    def points(self) -> List[Tuple[Fraction, ...]]:
        return list(itertools.product(*self.axes))

    @locked_cached_property
    def cells(self) -> List[IntervalVector]:
        segments = [
            [Interval(a, b) for a, b in zip(ticks, ticks[1:])] or
            [Interval.point(ticks[0])]
            for ticks in self.axes
        ]
        return [IntervalVector(cell) for cell in itertools.product(*segments)]

    @property
    def diameter(self) -> Fraction:
        """Upper bound of the diameter of every cell."""
        return sqrt_upper(self.dimension * self.spacing ** 2)

    def __repr__(self) -> str:
        return '<{0!s} {1} spacing {2}, {3} points>'.format(
            self.__class__.__name__, self.box, self.spacing, len(self.points)
        )


def _subdivide(cell: IntervalVector, parts: int) -> List[IntervalVector]:
    pieces = []
    for side in cell:
        step = side.width / parts
        if not step:
            pieces.append([side])
            continue
        pieces.append([Interval(side.lo + k * step, side.lo + (k + 1) * step)
                       for k in range(parts)])
    return [IntervalVector(p) for p in itertools.product(*pieces)]


def fit_polynomial(e: Expr, mesh: Mesh, degree: int = DEFAULT_DEGREE,
                   max_denominator: int = FIT_DENOMINATOR) -> IPoly:
    """Unweighted least-squares fit of total degree ``degree`` over the
    mesh points, with rational coefficients.

    :raises ApproximationError: if there are not more points than
                                coefficients
    """
    n = len(e.variables)
    if n != mesh.dimension:
        raise ValueError('mesh dimension does not match the expression')
    basis = monomial_basis(n, degree, e.variables)
    points = np.array(mesh.points, dtype=float).reshape(-1, n)
    if len(points) <= len(basis):
        raise ApproximationError(
            '{0} mesh points cannot determine {1} coefficients'.format(
                len(points), len(basis)
            )
        )
    exponents = np.array(basis.monomials, dtype=float).reshape(-1, n)
    design = np.prod(points[:, None, :] ** exponents[None, :, :], axis=2)
    values = e.evaluate_float(points)
    if not np.all(np.isfinite(values)):
        raise ExprDomainError('expression is not finite on the mesh', e.tree)
    coefficients = np.linalg.lstsq(design, values, rcond=None)[0]
    return IPoly(e.variables, {
        monomial: rationalize(c, max_denominator)
        for monomial, c in zip(basis.monomials, coefficients)
    })


def _point_residual(e: Expr, g: IPoly, point) -> Fraction:
    box = IntervalVector.point(point)
    return (eval_interval(e, box) - g.evaluate(list(point))).mag


def _centered(derivative: Expr, second: Sequence[Expr],
              piece: IntervalVector) -> Interval:
    naive = eval_interval(derivative, piece)
    centre = piece.mid()
    try:
        enclosure = eval_interval(derivative, IntervalVector.point(centre))
        for k, d2 in enumerate(second):
            offset = piece[k] - centre[k]
            if offset.is_point:
                continue
            enclosure = enclosure + eval_interval(d2, piece) * offset
    except (ExprDomainError, IntervalError):
        return naive
    return naive.intersection(enclosure) or naive


class ErrorBound(NamedTuple):
    mu: Fraction
    #: largest residual at the mesh points
    mu0: Fraction
    #: gradient norm bound of the residual over the box
    beta: Fraction
    diameter: Fraction


def bound_terms(e: Expr, g: IPoly, mesh: Mesh,
                subdivision: int = DEFAULT_SUBDIVISION) -> ErrorBound:
    n = mesh.dimension
    g = g.embed(e.variables)
    mu0 = max((_point_residual(e, g, p) for p in mesh.points),
              default=Fraction(0))
    residual = e - g
    gradient = residual.gradient()
    hessian = [d.gradient() for d in gradient]
    squared = Fraction(0)
    for cell in mesh.cells:
        for piece in _subdivide(cell, subdivision):
            total = sum((_centered(d, row, piece).mag ** 2
                         for d, row in zip(gradient, hessian)), Fraction(0))
            squared = max(squared, total)
    beta = sqrt_upper(squared)
    diameter = mesh.diameter
    mu = Fraction(n, n + 1) * beta * diameter + mu0
    logger.debug('error bound for %s: mu0=%.4g beta=%.4g mu=%.4g',
                 e, float(mu0), float(beta), float(mu))
    return ErrorBound(mu, mu0, beta, diameter)


def error_bound(e: Expr, g: IPoly, mesh: Mesh,
                subdivision: int = DEFAULT_SUBDIVISION) -> Fraction:
    """Verified bound ``mu`` with ``|e(x) - g(x)| <= mu`` on the mesh box."""
    return bound_terms(e, g, mesh, subdivision).mu


class EnclosedTerm(NamedTuple):
    g: IPoly
    mu: Fraction
    domain: IntervalVector

    def as_ipoly(self) -> IPoly:
        """``g + [-mu, mu]``."""
        return self.g + Interval(-self.mu, self.mu)


def enclose_term(e: Expr, domain: IntervalVector,
                 degree: int = DEFAULT_DEGREE, spacing=DEFAULT_SPACING,
                 subdivision: int = DEFAULT_SUBDIVISION) -> EnclosedTerm:
    """Fit and bound ``e`` on ``domain`` over the variables it uses; the
    result is embedded back into all of ``e.variables``."""
    domain = domain if isinstance(domain, IntervalVector) \
        else IntervalVector(domain)
    if len(domain) != len(e.variables):
        raise ValueError('domain dimension does not match the expression')
    used = e.free_variables
    sub = e.restrict(used)
    sub_box = IntervalVector(domain[e.variables.index(v)] for v in used)
    mesh = Mesh(sub_box, spacing)
    if not used:
        value = eval_interval(sub, IntervalVector([]))
        g = IPoly.constant(e.variables, value.mid)
        return EnclosedTerm(g, value.rad, domain)
    g = fit_polynomial(sub, mesh, degree)
    mu = error_bound(sub, g, mesh, subdivision)
    return EnclosedTerm(g.embed(e.variables), mu, domain)


Component = Union[FieldComponent, Expr]


def enclose_field(field: Sequence[Component], domain: IntervalVector,
                  degree: int = DEFAULT_DEGREE, spacing=DEFAULT_SPACING,
                  subdivision: int = DEFAULT_SUBDIVISION) -> List[IPoly]:
    """Interval polynomial field containing ``field`` on ``domain``.

    Each non-polynomial factor is enclosed once, even when several
    components use it.
    """
    cache: Dict[Expr, EnclosedTerm] = {}
    out = []
    for component in field:
        if isinstance(component, Expr):
            component = split_terms(component)
        poly = component.poly
        for coefficient, phi in component.terms:
            if phi not in cache:
                cache[phi] = enclose_term(phi, domain, degree, spacing,
                                          subdivision)
            poly = poly + coefficient * cache[phi].as_ipoly()
        out.append(poly)
    return out
