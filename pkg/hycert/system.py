""":mod:`hycert.system` --- Interval hybrid systems and their file format
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

A system file is line oriented; ``#`` starts a comment::

    vars x1, x2
    param u in [-1.1, -0.9]
    start l1
    init (x1 - 1)^2 + x2^2 <= 0.04

    location l1:
        flow x1 = u*x2 - 3/2*x1^2 - 1/2*x1^3
        flow x2 = [2.98, 3.02]*x1 - x2
        invariant x1 in [-2, 2]
        unsafe (x1 + 1.8)^2 + x2^2 <= 0.16

    transition l1 -> l2:
        guard x2 >= 1
        reset x1 := x1 - 1
        reconstructed

Constraints are ``lhs >= rhs``, ``lhs <= rhs`` or ``x in [lo, hi]``;
every constraint of a list must hold (conjunction).  ``x in [lo, hi]`` in
an ``invariant`` also gives the location box used for meshing.  Interval
literals ``[lo, hi]`` are allowed in flows only, where each one is an
independent coefficient.  Decimal literals are read exactly.

"""
import itertools
import logging
import re
from fractions import Fraction
from typing import (Callable, Dict, Iterator, List, NamedTuple, Optional,
                    Sequence, Tuple)

import numpy as np
import scipy.integrate

from .exceptions import (ExprDomainError, SystemSemanticError,
                         SystemSyntaxError)
from .expr import FUNCTIONS, Expr, FieldComponent, parse, split_terms
from .interval import Interval, IntervalVector, to_fraction
from .poly import IPoly

__all__ = (
    'DEFAULT_EPSILON', 'HybridSystem', 'Location', 'Transition',
    'UncertainParam', 'classify_and_substitute', 'integrate_member',
    'member_field', 'midpoint_system', 'parse_polynomial', 'parse_system',
    'print_system',
)

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = Fraction(1, 10)

_NAME = r'[A-Za-z_]\w*'
_INTERVAL = re.compile(r'\[([^\[\],]*),([^\[\],]*)\]')
_MEMBERSHIP = re.compile(r'^({0})\s+in\s+\[([^\[\],]*),([^\[\],]*)\]$'
                         .format(_NAME))
_LOCATION = re.compile(r'^({0})\s*:$'.format(_NAME))
_TRANSITION = re.compile(r'^({0})\s*->\s*({0})\s*:$'.format(_NAME))
_FLOW = re.compile(r'^({0})\s*=\s*(.+)$'.format(_NAME))
_RESET = re.compile(r'^({0})\s*:=\s*(.+)$'.format(_NAME))
_LITERAL_PREFIX = '_iv'


class UncertainParam(NamedTuple):
    name: str
    range: Interval

    @property
    def constraint(self) -> IPoly:
        """``(u - lo) * (hi - u)``, nonnegative exactly on the range."""
        u = IPoly.variable((self.name,), self.name)
        return (u - self.range.lo) * (self.range.hi - u)


class Location(NamedTuple):
    name: str
    #: one component per state variable, over the system's state and
    #: parameter names
    flow: Tuple[FieldComponent, ...]
    #: invariant constraints other than the box bounds
    invariant: Tuple[IPoly, ...] = ()
    unsafe: Tuple[IPoly, ...] = ()
    bounds: Tuple[Tuple[str, Interval], ...] = ()

    @property
    def is_polynomial(self) -> bool:
        return all(c.is_polynomial for c in self.flow)


class Transition(NamedTuple):
    source: str
    target: str
    guard: Tuple[IPoly, ...] = ()
    reset: Tuple[Tuple[str, IPoly], ...] = ()
    #: data not stated with the system and supplied by the file author
    reconstructed: bool = False

    @property
    def name(self) -> str:
        return '{0}->{1}'.format(self.source, self.target)

    def reset_map(self) -> Dict[str, IPoly]:
        return dict(self.reset)


class HybridSystem(NamedTuple):
    variables: Tuple[str, ...]
    locations: Tuple[Location, ...]
    start: str
    init: Tuple[IPoly, ...] = ()
    transitions: Tuple[Transition, ...] = ()
    parameters: Tuple[UncertainParam, ...] = ()

    @property
    def all_variables(self) -> Tuple[str, ...]:
        return self.variables + tuple(p.name for p in self.parameters)

    @property
    def is_polynomial(self) -> bool:
        return all(l.is_polynomial for l in self.locations)

    def location(self, name: str) -> Location:
        for location in self.locations:
            if location.name == name:
                return location
        raise KeyError(name)

    def invariant(self, name: str) -> List[IPoly]:
        location = self.location(name)
        return list(location.invariant) + [
            _bound_poly(v, side) for v, side in location.bounds
        ]

    def box(self, name: str) -> Optional[IntervalVector]:
        """The location box, if every state variable is bounded."""
        bounds = dict(self.location(name).bounds)
        if any(v not in bounds for v in self.variables):
            return None
        return IntervalVector(bounds[v] for v in self.variables)

    def field(self, name: str) -> List[IPoly]:
        location = self.location(name)
        if not location.is_polynomial:
            raise SystemSemanticError(
                'flow of location {0} has non-polynomial terms; enclose it '
                'first'.format(name)
            )
        return [c.poly.embed(self.all_variables) for c in location.flow]

    def __str__(self) -> str:
        return print_system(self)


def _bound_poly(name: str, side: Interval) -> IPoly:
    x = IPoly.variable((name,), name)
    return (x - side.lo) * (side.hi - x)


class _Reader(object):
    #: accepted keywords; ``None`` accepts every ``_on_*`` handler
    keywords: Optional[Tuple[str, ...]] = None

    def __init__(self, text: str) -> None:
        self.lines = text.splitlines()
        self.variables: Optional[Tuple[str, ...]] = None
        self.parameters: List[UncertainParam] = []
        self.start: Optional[str] = None
        self.init: List[IPoly] = []
        self.locations: Dict[str, dict] = {}
        self.transitions: List[dict] = []
        self.block: Optional[dict] = None
        self.literals = itertools.count()

    def read(self) -> HybridSystem:
        for number, raw in enumerate(self.lines, 1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            keyword, *rest = line.split(None, 1)
            rest = rest[0] if rest else ''
            handler = getattr(self, '_on_' + keyword, None)
            if handler is None or (self.keywords is not None and
                                   keyword not in self.keywords):
                raise SystemSyntaxError(
                    'unknown keyword {0!r}'.format(keyword), number
                )
            if keyword != 'vars' and self.variables is None:
                raise SystemSyntaxError('vars must be declared first', number)
            handler(rest.strip(), number)
        return self._finish()

    @property
    def names(self) -> Tuple[str, ...]:
        return self.variables + tuple(p.name for p in self.parameters)

    def _check_name(self, name: str, number: int) -> None:
        if not name.isidentifier() or name in FUNCTIONS or \
                name.startswith(_LITERAL_PREFIX):
            raise SystemSyntaxError('invalid name {0!r}'.format(name), number)
        if self.variables is not None and name in self.names:
            raise SystemSyntaxError(
                'name {0!r} declared twice'.format(name), number
            )

    def _current(self, kind: str, keyword: str, number: int) -> dict:
        if self.block is None or self.block['kind'] != kind:
            raise SystemSyntaxError(
                '{0} outside a {1} block'.format(keyword, kind), number
            )
        return self.block

    def _on_vars(self, rest: str, number: int) -> None:
        if self.variables is not None:
            raise SystemSyntaxError('vars declared twice', number)
        names = [n.strip() for n in rest.split(',') if n.strip()]
        if not names:
            raise SystemSyntaxError('no variables declared', number)
        declared: List[str] = []
        for name in names:
            self._check_name(name, number)
            if name in declared:
                raise SystemSyntaxError(
                    'name {0!r} declared twice'.format(name), number
                )
            declared.append(name)
        self.variables = tuple(declared)

    def _on_param(self, rest: str, number: int) -> None:
        match = _MEMBERSHIP.match(rest)
        if not match:
            raise SystemSyntaxError('expected "param NAME in [lo, hi]"',
                                    number)
        name = match.group(1)
        self._check_name(name, number)
        side = self._interval(match.group(2), match.group(3), number)
        if side.is_point:
            raise SystemSemanticError(
                'line {0}: parameter {1} has an empty range'.format(number,
                                                                     name)
            )
        self.parameters.append(UncertainParam(name, side))

    def _on_start(self, rest: str, number: int) -> None:
        if self.start is not None:
            raise SystemSyntaxError('start declared twice', number)
        self.start = rest

    def _on_init(self, rest: str, number: int) -> None:
        self.init.append(self._constraint(rest, number)[1])

    def _on_location(self, rest: str, number: int) -> None:
        match = _LOCATION.match(rest)
        if not match:
            raise SystemSyntaxError('expected "location NAME:"', number)
        name = match.group(1)
        if name in self.locations:
            raise SystemSyntaxError(
                'location {0} declared twice'.format(name), number
            )
        self.block = self.locations[name] = {
            'kind': 'location', 'name': name, 'flow': {}, 'invariant': [],
            'unsafe': [], 'bounds': {}, 'line': number,
        }

    def _on_transition(self, rest: str, number: int) -> None:
        match = _TRANSITION.match(rest)
        if not match:
            raise SystemSyntaxError('expected "transition A -> B:"', number)
        self.block = {
            'kind': 'transition', 'source': match.group(1),
            'target': match.group(2), 'guard': [], 'reset': {},
            'reconstructed': False, 'line': number,
        }
        self.transitions.append(self.block)

    def _on_flow(self, rest: str, number: int) -> None:
        block = self._current('location', 'flow', number)
        match = _FLOW.match(rest)
        if not match:
            raise SystemSyntaxError('expected "flow x = expression"', number)
        name = match.group(1)
        if name not in self.variables:
            raise SystemSyntaxError(
                'flow for undeclared variable {0!r}'.format(name), number
            )
        if name in block['flow']:
            raise SystemSyntaxError(
                'second flow for {0} in location {1}'.format(
                    name, block['name']
                ), number
            )
        block['flow'][name] = self._component(match.group(2), number)

    def _on_invariant(self, rest: str, number: int) -> None:
        block = self._current('location', 'invariant', number)
        bound, poly = self._constraint(rest, number)
        if bound is None:
            block['invariant'].append(poly)
            return
        name, side = bound
        if name in block['bounds']:
            side = block['bounds'][name].intersection(side)
            if side is None:
                raise SystemSemanticError(
                    'line {0}: empty bounds for {1}'.format(number, name)
                )
        block['bounds'][name] = side

    def _on_unsafe(self, rest: str, number: int) -> None:
        block = self._current('location', 'unsafe', number)
        block['unsafe'].append(self._constraint(rest, number)[1])

    def _on_guard(self, rest: str, number: int) -> None:
        block = self._current('transition', 'guard', number)
        block['guard'].append(self._constraint(rest, number)[1])

    def _on_reset(self, rest: str, number: int) -> None:
        block = self._current('transition', 'reset', number)
        match = _RESET.match(rest)
        if not match:
            raise SystemSyntaxError('expected "reset x := expression"',
                                    number)
        name = match.group(1)
        if name not in self.variables:
            raise SystemSyntaxError(
                'reset of undeclared variable {0!r}'.format(name), number
            )
        block['reset'][name] = self._exact_poly(match.group(2), number)

    def _on_reconstructed(self, rest: str, number: int) -> None:
        block = self._current('transition', 'reconstructed', number)
        if rest:
            raise SystemSyntaxError('reconstructed takes no argument', number)
        block['reconstructed'] = True

    def _interval(self, lo: str, hi: str, number: int) -> Interval:
        try:
            lo, hi = Fraction(lo.strip()), Fraction(hi.strip())
        except ValueError:
            raise SystemSyntaxError(
                'bad interval literal [{0},{1}]'.format(lo, hi), number
            )
        if lo > hi:
            raise SystemSyntaxError(
                'empty interval [{0},{1}]'.format(lo, hi), number
            )
        return Interval(lo, hi)

    def _lift(self, text: str, number: int) -> Tuple[str, Dict[str, Interval]]:
        literals: Dict[str, Interval] = {}

        def replace(match) -> str:
            name = '{0}{1}'.format(_LITERAL_PREFIX, next(self.literals))
            literals[name] = self._interval(match.group(1), match.group(2),
                                            number)
            return name

        return _INTERVAL.sub(replace, text), literals

    def _parse(self, text: str, number: int, variables: Sequence[str],
               literals: Sequence[str] = ()) -> Expr:
        try:
            return parse(text, variables, literals)
        except ExprDomainError as e:
            raise SystemSyntaxError(str(e), number)

    def _exact_poly(self, text: str, number: int) -> IPoly:
        if '[' in text:
            raise SystemSyntaxError('interval coefficient outside a flow',
                                    number)
        e = self._parse(text, number, self.variables)
        if not e.is_polynomial:
            raise SystemSemanticError(
                'line {0}: {1} is not polynomial'.format(number, text)
            )
        return e.to_ipoly()

    def _constraint(self, text: str, number: int
                    ) -> Tuple[Optional[Tuple[str, Interval]], IPoly]:
        match = _MEMBERSHIP.match(text)
        if match:
            name = match.group(1)
            if name not in self.variables:
                raise SystemSyntaxError(
                    'unknown variable {0!r}'.format(name), number
                )
            side = self._interval(match.group(2), match.group(3), number)
            poly = _bound_poly(name, side).embed(self.variables)
            return (name, side), poly
        for op in ('>=', '<='):
            if op in text:
                lhs, rhs = text.split(op, 1)
                if '>=' in rhs or '<=' in rhs:
                    raise SystemSyntaxError('chained comparison', number)
                if op == '<=':
                    lhs, rhs = rhs, lhs
                poly = self._exact_poly('({0}) - ({1})'.format(lhs, rhs),
                                        number)
                return None, poly.embed(self.variables)
        raise SystemSyntaxError('expected a constraint with >=, <= or in',
                                number)

    def _component(self, text: str, number: int) -> FieldComponent:
        lifted, literals = self._lift(text, number)
        e = self._parse(lifted, number, self.names, list(literals))
        try:
            return split_terms(e, literals)
        except ExprDomainError as error:
            raise SystemSemanticError('line {0}: {1}'.format(number, error))

    def _finish(self) -> HybridSystem:
        if self.variables is None:
            raise SystemSyntaxError('vars must be declared first', 1)
        if not self.locations:
            raise SystemSemanticError('no location declared')
        names = self.names
        locations = []
        for name, block in self.locations.items():
            missing = [v for v in self.variables if v not in block['flow']]
            if missing:
                raise SystemSemanticError(
                    'location {0} (line {1}) has no flow for {2}'.format(
                        name, block['line'], ', '.join(missing)
                    )
                )
            flow = tuple(_embed_component(block['flow'][v], names)
                         for v in self.variables)
            locations.append(Location(
                name, flow, tuple(block['invariant']), tuple(block['unsafe']),
                tuple((v, block['bounds'][v]) for v in self.variables
                      if v in block['bounds'])
            ))
        start = self.start
        if start is None:
            if len(locations) != 1:
                raise SystemSemanticError('start location missing')
            start = locations[0].name
        if start not in self.locations:
            raise SystemSemanticError('unknown start location {0}'.format(
                start
            ))
        transitions = []
        for block in self.transitions:
            for end in (block['source'], block['target']):
                if end not in self.locations:
                    raise SystemSemanticError(
                        'transition at line {0} uses unknown location '
                        '{1}'.format(block['line'], end)
                    )
            transitions.append(Transition(
                block['source'], block['target'], tuple(block['guard']),
                tuple((v, block['reset'][v]) for v in self.variables
                      if v in block['reset']),
                block['reconstructed']
            ))
        return HybridSystem(self.variables, tuple(locations), start,
                            tuple(self.init), tuple(transitions),
                            tuple(self.parameters))


def _embed_component(component: FieldComponent,
                     variables: Sequence[str]) -> FieldComponent:
    return FieldComponent(
        component.poly.embed(variables),
        tuple((c.embed(variables), phi.restrict(variables))
              for c, phi in component.terms)
    )


def parse_system(text: str) -> HybridSystem:
    """Read a system description.

    :raises SystemSyntaxError: with the offending line
    :raises SystemSemanticError: for inconsistent descriptions
    """
    system = _Reader(text).read()
    logger.debug('parsed system with %d locations and %d transitions',
                 len(system.locations), len(system.transitions))
    return system


class _PolyReader(_Reader):
    keywords = ('vars', 'poly')

    def __init__(self, text: str) -> None:
        super().__init__(text)
        self.poly: Optional[IPoly] = None

    def _on_poly(self, rest: str, number: int) -> None:
        if self.poly is not None:
            raise SystemSyntaxError('poly declared twice', number)
        lifted, literals = self._lift(rest, number)
        e = self._parse(lifted, number, self.variables, list(literals))
        if not e.is_polynomial:
            raise SystemSemanticError(
                'line {0}: {1} is not polynomial'.format(number, rest)
            )
        self.poly = e.to_ipoly(literals)

    def _finish(self) -> IPoly:
        if self.variables is None:
            raise SystemSyntaxError('vars must be declared first', 1)
        if self.poly is None:
            raise SystemSemanticError('no poly declared')
        return self.poly


def parse_polynomial(text: str) -> IPoly:
    """Read a ``vars`` line and one ``poly`` line; interval literals
    ``[lo, hi]`` are independent coefficients."""
    return _PolyReader(text).read()


def _render_component(component: FieldComponent) -> str:
    parts = []
    if not component.poly.is_zero or not component.terms:
        parts.append(component.poly.render())
    for coefficient, phi in component.terms:
        parts.append('({0})*({1})'.format(coefficient.render(), phi))
    return ' + '.join(parts)


def print_system(system: HybridSystem) -> str:
    """Canonical text of ``system``; :func:`parse_system` reads it back to
    an equal description."""
    lines = ['vars {0}'.format(', '.join(system.variables))]
    lines.extend('param {0} in [{1}, {2}]'.format(p.name, p.range.lo,
                                                   p.range.hi)
                 for p in system.parameters)
    lines.append('start {0}'.format(system.start))
    lines.extend('init {0} >= 0'.format(p.render()) for p in system.init)
    for location in system.locations:
        lines.append('')
        lines.append('location {0}:'.format(location.name))
        for name, component in zip(system.variables, location.flow):
            lines.append('    flow {0} = {1}'.format(
                name, _render_component(component)
            ))
        lines.extend('    invariant {0} >= 0'.format(p.render())
                     for p in location.invariant)
        lines.extend('    invariant {0} in [{1}, {2}]'.format(v, s.lo, s.hi)
                     for v, s in location.bounds)
        lines.extend('    unsafe {0} >= 0'.format(p.render())
                     for p in location.unsafe)
    for transition in system.transitions:
        lines.append('')
        lines.append('transition {0} -> {1}:'.format(transition.source,
                                                     transition.target))
        lines.extend('    guard {0} >= 0'.format(p.render())
                     for p in transition.guard)
        lines.extend('    reset {0} := {1}'.format(v, p.render())
                     for v, p in transition.reset)
        if transition.reconstructed:
            lines.append('    reconstructed')
    return '\n'.join(lines) + '\n'


def _large_monomials(poly: IPoly, epsilon: Fraction) -> List[tuple]:
    return [m for m, c in poly.items() if c.rad > epsilon]


def _polys(location: Location) -> Iterator[IPoly]:
    for component in location.flow:
        yield component.poly
        for coefficient, _ in component.terms:
            yield coefficient


def classify_and_substitute(system: HybridSystem, epsilon=DEFAULT_EPSILON
                            ) -> Tuple[HybridSystem, List[UncertainParam]]:
    """Replace every flow coefficient of radius greater than ``epsilon``
    by a fresh parameter ranging over that coefficient.

    Returns the new system and the parameters introduced.
    """
    epsilon = to_fraction(epsilon)
    count = sum(len(_large_monomials(poly, epsilon))
                for location in system.locations
                for poly in _polys(location))
    if not count:
        return system, []
    taken = set(system.all_variables)
    fresh = []
    for k in itertools.count(1):
        if len(fresh) == count:
            break
        name = 'u{0}'.format(k)
        if name not in taken:
            fresh.append(name)
    variables = system.all_variables + tuple(fresh)
    extra = (0,) * len(fresh)
    names = iter(fresh)
    introduced: List[UncertainParam] = []

    def rewrite(poly: IPoly) -> IPoly:
        terms = poly.embed(variables).terms
        for monomial in _large_monomials(poly, epsilon):
            name = next(names)
            introduced.append(UncertainParam(name, poly.coefficient(monomial)))
            del terms[monomial + extra]
            lifted = list(monomial + extra)
            lifted[variables.index(name)] = 1
            terms[tuple(lifted)] = 1
        return IPoly(variables, terms)

    locations = []
    for location in system.locations:
        flow = tuple(
            FieldComponent(
                rewrite(component.poly.embed(system.all_variables)),
                tuple((rewrite(c.embed(system.all_variables)),
                       phi.restrict(variables))
                      for c, phi in component.terms)
            )
            for component in location.flow
        )
        locations.append(location._replace(flow=flow))
    logger.info('substituted %d coefficients of radius > %s by parameters',
                len(introduced), epsilon)
    return system._replace(
        locations=tuple(locations),
        parameters=system.parameters + tuple(introduced)
    ), introduced


def midpoint_system(system: HybridSystem) -> HybridSystem:
    """Every interval flow coefficient replaced by its midpoint."""
    locations = []
    for location in system.locations:
        if not location.is_polynomial:
            raise SystemSemanticError(
                'flow of location {0} has non-polynomial terms'.format(
                    location.name
                )
            )
        flow = tuple(FieldComponent(c.poly.midpoint()) for c in location.flow)
        locations.append(location._replace(flow=flow))
    return system._replace(locations=tuple(locations))


def member_field(system: HybridSystem, location: str,
                 rng: np.random.Generator) -> Callable:
    """Right-hand side ``f(t, x)`` of one member of the location's flow.

    Every interval coefficient and parameter is drawn uniformly from its
    range; the draw is fixed for the returned function.
    """
    parameters = {p.name: rng.uniform(float(p.range.lo), float(p.range.hi))
                  for p in system.parameters}
    n = len(system.variables)

    def sample(poly: IPoly) -> IPoly:
        return IPoly(poly.variables, {
            m: Fraction(rng.uniform(float(c.lo), float(c.hi)))
            for m, c in poly.items()
        })

    fixed = [parameters[p.name] for p in system.parameters]
    members = []
    for component in system.location(location).flow:
        members.append((sample(component.poly),
                        [(sample(c), phi) for c, phi in component.terms]))

    def rhs(t: float, state: np.ndarray) -> np.ndarray:
        point = np.concatenate([np.asarray(state, dtype=float)[:n], fixed])
        out = np.empty(n)
        for i, (poly, terms) in enumerate(members):
            total = float(poly.evaluate_float(point)[0])
            for coefficient, phi in terms:
                total += float(coefficient.evaluate_float(point)[0]) * \
                    float(phi.evaluate_float(point)[0])
            out[i] = total
        return out

    return rhs


def integrate_member(system: HybridSystem, location: str, x0: Sequence[float],
                     horizon: float, rng: np.random.Generator,
                     samples: int = 50):
    """Trajectory of a random member system from ``x0`` inside
    ``location``, as returned by :func:`scipy.integrate.solve_ivp`."""
    rhs = member_field(system, location, rng)
    return scipy.integrate.solve_ivp(
        rhs, (0.0, horizon), np.asarray(x0, dtype=float),
        t_eval=np.linspace(0.0, horizon, samples), rtol=1e-8, atol=1e-10
    )
