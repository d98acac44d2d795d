""":mod:`hycert.poly` --- Sparse polynomials with interval coefficients
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

Monomials are exponent tuples, one entry per variable, ordered
graded-lexicographically (``1, x1, x2, x1^2, x1*x2, x2^2, ...``) wherever
an order matters.

:class:`IPoly` has :class:`~hycert.interval.Interval` coefficients; a
polynomial whose coefficients are all point intervals is *exact*.
:class:`ParamPoly` has coefficients that are affine forms in numbered
template parameters, which is how invariant templates and the conditions
built from them are represented before the parameters are known.

"""
import itertools
from fractions import Fraction
from typing import (Dict, Iterable, List, Mapping, NamedTuple, Optional,
                    Sequence, Tuple, Union)

import numpy as np

from .exceptions import (BasisTooSmallError, DimensionMismatchError,
                         NotExactError)
from .interval import (OUTWARD_DENOMINATOR, Interval, IntervalMatrix,
                       IntervalVector, SymRationalMatrix, as_interval,
                       as_rational_array, to_fraction)

__all__ = (
    'CoefficientMatch', 'IPoly', 'InvariantTemplate', 'Monomial',
    'MonomialVector', 'ParamPoly', 'PolyMap', 'coefficient_match',
    'default_variables', 'gram_to_poly', 'gram_unknowns', 'grlex_key',
    'lie_derivative', 'monomial_basis', 'prune_basis',
)

Monomial = Tuple[int, ...]
#: affine form over template parameters, ``None`` keys the constant
Affine = Dict[Optional[int], Fraction]


def grlex_key(monomial: Monomial):
    return (sum(monomial), tuple(-e for e in monomial))


def default_variables(count: int) -> Tuple[str, ...]:
    return tuple('x{0}'.format(i + 1) for i in range(count))


def _merge_variables(a: Sequence[str], b: Sequence[str]) -> Tuple[str, ...]:
    if tuple(a) == tuple(b):
        return tuple(a)
    return tuple(a) + tuple(v for v in b if v not in a)


def _embed_monomial(monomial: Monomial, source: Sequence[str],
                    target: Sequence[str]) -> Monomial:
    out = [0] * len(target)
    index = {name: i for i, name in enumerate(target)}
    for name, e in zip(source, monomial):
        if e:
            try:
                out[index[name]] = e
            except KeyError:
                raise DimensionMismatchError(
                    'variable {0!r} missing from {1}'.format(name, target)
                )
    return tuple(out)


def _format_monomial(monomial: Monomial, variables: Sequence[str]) -> str:
    parts = []
    for name, e in zip(variables, monomial):
        if e == 1:
            parts.append(name)
        elif e:
            parts.append('{0}^{1}'.format(name, e))
    return '*'.join(parts)


def _format_rational(value: Fraction) -> str:
    return str(value)


class IPoly(object):
    """Sparse multivariate polynomial with interval coefficients."""

    __slots__ = ('variables', '_terms')

    def __init__(self, variables: Sequence[str],
                 terms: Optional[Mapping] = None) -> None:
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise ValueError('duplicate variable names: {0}'.format(variables))
        self.variables = variables
        clean = {}
        for monomial, coefficient in (terms or {}).items():
            monomial = tuple(int(e) for e in monomial)
            if len(monomial) != len(variables):
                raise DimensionMismatchError(
                    'monomial {0} does not match variables {1}'.format(
                        monomial, variables
                    )
                )
            if any(e < 0 for e in monomial):
                raise ValueError('negative exponent in {0}'.format(monomial))
            coefficient = as_interval(coefficient)
            if coefficient.is_point and coefficient.lo == 0:
                continue
            clean[monomial] = coefficient
        self._terms = clean

    @classmethod
    def zero(cls, variables: Sequence[str]) -> 'IPoly':
        return cls(variables)

    @classmethod
    def constant(cls, variables: Sequence[str], value) -> 'IPoly':
        return cls(variables, {(0,) * len(variables): value})

    @classmethod
    def variable(cls, variables: Sequence[str], name: str) -> 'IPoly':
        variables = tuple(variables)
        monomial = tuple(1 if v == name else 0 for v in variables)
        if not any(monomial):
            raise ValueError('unknown variable {0!r}'.format(name))
        return cls(variables, {monomial: 1})

    @property
    def terms(self) -> Dict[Monomial, Interval]:
        return dict(self._terms)

    def items(self) -> List[Tuple[Monomial, Interval]]:
        return sorted(self._terms.items(), key=lambda kv: grlex_key(kv[0]))

    def monomials(self) -> List[Monomial]:
        return sorted(self._terms, key=grlex_key)

    def coefficient(self, monomial: Monomial) -> Interval:
        return self._terms.get(tuple(monomial), Interval.point(0))

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def nvars(self) -> int:
        return len(self.variables)

    @property
    def degree(self) -> int:
        return max((sum(m) for m in self._terms), default=0)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_exact(self) -> bool:
        return all(c.is_point for c in self._terms.values())

    def exact_coefficients(self) -> Dict[Monomial, Fraction]:
        if not self.is_exact:
            raise NotExactError('polynomial has interval coefficients')
        return {m: c.lo for m, c in self._terms.items()}

    def midpoint(self) -> 'IPoly':
        return IPoly(self.variables,
                     {m: c.mid for m, c in self._terms.items()})

    def radius(self) -> 'IPoly':
        return IPoly(self.variables,
                     {m: c.rad for m, c in self._terms.items()})

    def outward(self, max_denominator: int = OUTWARD_DENOMINATOR) -> 'IPoly':
        return IPoly(self.variables,
                     {m: c.outward(max_denominator)
                      for m, c in self._terms.items()})

    def embed(self, variables: Sequence[str]) -> 'IPoly':
        variables = tuple(variables)
        if variables == self.variables:
            return self
        return IPoly(variables, {
            _embed_monomial(m, self.variables, variables): c
            for m, c in self._terms.items()
        })

    def _align(self, other) -> Tuple['IPoly', 'IPoly']:
        if not isinstance(other, IPoly):
            other = IPoly.constant(self.variables, other)
        variables = _merge_variables(self.variables, other.variables)
        return self.embed(variables), other.embed(variables)

    def __add__(self, other) -> 'IPoly':
        if isinstance(other, ParamPoly):
            return NotImplemented
        a, b = self._align(other)
        terms = dict(a._terms)
        for m, c in b._terms.items():
            terms[m] = terms[m] + c if m in terms else c
        return IPoly(a.variables, terms)

    __radd__ = __add__

    def __neg__(self) -> 'IPoly':
        return IPoly(self.variables, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> 'IPoly':
        if isinstance(other, ParamPoly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> 'IPoly':
        return (-self) + other

    def __mul__(self, other) -> 'IPoly':
        if isinstance(other, ParamPoly):
            return NotImplemented
        if not isinstance(other, IPoly):
            factor = as_interval(other)
            return IPoly(self.variables,
                         {m: c * factor for m, c in self._terms.items()})
        a, b = self._align(other)
        terms: Dict[Monomial, Interval] = {}
        for (ma, ca), (mb, cb) in itertools.product(a._terms.items(),
                                                    b._terms.items()):
            m = tuple(x + y for x, y in zip(ma, mb))
            product = ca * cb
            terms[m] = terms[m] + product if m in terms else product
        return IPoly(a.variables, terms)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> 'IPoly':
        if not isinstance(exponent, int) or exponent < 0:
            return NotImplemented
        result = IPoly.constant(self.variables, 1)
        for _ in range(exponent):
            result = result * self
        return result

    def diff(self, name: str) -> 'IPoly':
        try:
            k = self.variables.index(name)
        except ValueError:
            return IPoly.zero(self.variables)
        terms = {}
        for m, c in self._terms.items():
            if m[k]:
                reduced = m[:k] + (m[k] - 1,) + m[k + 1:]
                terms[reduced] = c * m[k]
        return IPoly(self.variables, terms)

    def _point_values(self, point) -> Dict[str, Interval]:
        if isinstance(point, Mapping):
            values = {name: as_interval(point[name]) for name in point}
        else:
            if len(point) != len(self.variables):
                raise DimensionMismatchError(
                    'expected {0} values, got {1}'.format(
                        len(self.variables), len(point)
                    )
                )
            values = {name: as_interval(v)
                      for name, v in zip(self.variables, point)}
        missing = [v for v in self.variables if v not in values]
        if missing:
            raise DimensionMismatchError(
                'no value for variables {0}'.format(missing)
            )
        return values

    def evaluate(self, point) -> Interval:
        """Evaluate at a rational point (or over a box, by naive interval
        extension when the values are intervals)."""
        values = self._point_values(point)
        xs = [values[name] for name in self.variables]
        acc = Interval.point(0)
        for m, c in self._terms.items():
            term = c
            for x, e in zip(xs, m):
                if e:
                    term = term * x ** e
            acc = acc + term
        return acc

    def evaluate_box(self, box: IntervalVector) -> Interval:
        return self.evaluate(list(box))

    def evaluate_float(self, points) -> np.ndarray:
        """Evaluate the midpoint polynomial at float points (rows)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if not self._terms:
            return np.zeros(points.shape[0])
        monomials = list(self._terms)
        exponents = np.array(monomials, dtype=float)
        coefficients = np.array([float(self._terms[m].mid) for m in monomials])
        powers = np.prod(points[:, None, :] ** exponents[None, :, :], axis=2)
        return powers.dot(coefficients)

    def substitute(self, mapping: Mapping[str, 'IPoly']) -> 'IPoly':
        """Compose with ``mapping`` (variable -> polynomial); variables not
        mapped stay as they are."""
        images = []
        for name in self.variables:
            image = mapping.get(name)
            if image is None:
                image = IPoly.variable(self.variables, name)
            images.append(image)
        target = self.variables
        for image in images:
            target = _merge_variables(target, image.variables)
        images = [image.embed(target) for image in images]
        powers: Dict[Tuple[int, int], IPoly] = {}

        def power(k: int, e: int) -> IPoly:
            if (k, e) not in powers:
                powers[k, e] = images[k] ** e
            return powers[k, e]

        result = IPoly.zero(target)
        for m, c in self._terms.items():
            term = IPoly.constant(target, c)
            for k, e in enumerate(m):
                if e:
                    term = term * power(k, e)
            result = result + term
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, IPoly):
            return NotImplemented
        if self.variables != other.variables:
            try:
                a, b = self._align(other)
            except DimensionMismatchError:
                return False
            return a._terms == b._terms
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.variables, frozenset(self._terms.items())))

    def render(self) -> str:
        if not self._terms:
            return '0'
        pieces = []
        for m, c in self.items():
            name = _format_monomial(m, self.variables)
            if c.is_point:
                negative = c.lo < 0
                magnitude = abs(c.lo)
                if name:
                    body = name if magnitude == 1 else '{0}*{1}'.format(
                        _format_rational(magnitude), name
                    )
                else:
                    body = _format_rational(magnitude)
            else:
                negative = False
                body = '[{0},{1}]'.format(_format_rational(c.lo),
                                          _format_rational(c.hi))
                if name:
                    body = '{0}*{1}'.format(body, name)
            if not pieces:
                pieces.append('-' + body if negative else body)
            else:
                pieces.append(('- ' if negative else '+ ') + body)
        return ' '.join(pieces)

    __str__ = render

    def __repr__(self) -> str:
        return '<{0!s} {1!s} in {2}>'.format(
            self.__class__.__name__, self.render(), ', '.join(self.variables)
        )


def _affine_add(a: Affine, b: Affine, scale: Fraction = Fraction(1)) -> Affine:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, Fraction(0)) + v * scale
        if not out[k]:
            del out[k]
    return out


class ParamPoly(object):
    """Polynomial whose coefficients are affine in template parameters."""

    __slots__ = ('variables', '_terms')

    def __init__(self, variables: Sequence[str],
                 terms: Optional[Mapping[Monomial, Mapping]] = None) -> None:
        self.variables = tuple(variables)
        clean: Dict[Monomial, Affine] = {}
        for monomial, form in (terms or {}).items():
            monomial = tuple(int(e) for e in monomial)
            if len(monomial) != len(self.variables):
                raise DimensionMismatchError(
                    'monomial {0} does not match variables {1}'.format(
                        monomial, self.variables
                    )
                )
            form = {k: to_fraction(v) for k, v in form.items() if v}
            if form:
                clean[monomial] = form
        self._terms = clean

    @classmethod
    def from_ipoly(cls, poly: IPoly) -> 'ParamPoly':
        return cls(poly.variables,
                   {m: {None: c} for m, c in poly.exact_coefficients().items()})

    @classmethod
    def lift(cls, value, variables: Sequence[str]) -> 'ParamPoly':
        if isinstance(value, ParamPoly):
            return value
        if isinstance(value, IPoly):
            return cls.from_ipoly(value)
        return cls.from_ipoly(IPoly.constant(variables, value))

    def monomials(self) -> List[Monomial]:
        return sorted(self._terms, key=grlex_key)

    def coefficient(self, monomial: Monomial) -> Affine:
        return dict(self._terms.get(tuple(monomial), {}))

    def items(self) -> List[Tuple[Monomial, Affine]]:
        return [(m, dict(self._terms[m])) for m in self.monomials()]

    @property
    def degree(self) -> int:
        return max((sum(m) for m in self._terms), default=0)

    def parameters(self) -> List[int]:
        found = set()
        for form in self._terms.values():
            found.update(k for k in form if k is not None)
        return sorted(found)

    @property
    def is_constant(self) -> bool:
        return not self.parameters()

    def embed(self, variables: Sequence[str]) -> 'ParamPoly':
        variables = tuple(variables)
        if variables == self.variables:
            return self
        return ParamPoly(variables, {
            _embed_monomial(m, self.variables, variables): f
            for m, f in self._terms.items()
        })

    def _align(self, other) -> Tuple['ParamPoly', 'ParamPoly']:
        other = ParamPoly.lift(other, self.variables)
        variables = _merge_variables(self.variables, other.variables)
        return self.embed(variables), other.embed(variables)

    def __add__(self, other) -> 'ParamPoly':
        a, b = self._align(other)
        terms = dict(a._terms)
        for m, f in b._terms.items():
            terms[m] = _affine_add(terms.get(m, {}), f)
        return ParamPoly(a.variables, terms)

    __radd__ = __add__

    def __neg__(self) -> 'ParamPoly':
        return ParamPoly(self.variables, {
            m: {k: -v for k, v in f.items()} for m, f in self._terms.items()
        })

    def __sub__(self, other) -> 'ParamPoly':
        return self + (-ParamPoly.lift(other, self.variables))

    def __rsub__(self, other) -> 'ParamPoly':
        return (-self) + other

    def __mul__(self, other) -> 'ParamPoly':
        if isinstance(other, ParamPoly):
            if other.is_constant:
                other = other.to_ipoly()
            elif self.is_constant:
                return other * self.to_ipoly()
            else:
                raise ValueError('product of two parametric polynomials '
                                 'is not affine in the parameters')
        if not isinstance(other, IPoly):
            other = IPoly.constant(self.variables, other)
        exact = other.exact_coefficients()
        variables = _merge_variables(self.variables, other.variables)
        a = self.embed(variables)
        b = {_embed_monomial(m, other.variables, variables): c
             for m, c in exact.items()}
        terms: Dict[Monomial, Affine] = {}
        for (ma, fa), (mb, cb) in itertools.product(a._terms.items(),
                                                    b.items()):
            m = tuple(x + y for x, y in zip(ma, mb))
            terms[m] = _affine_add(terms.get(m, {}), fa, cb)
        return ParamPoly(variables, terms)

    __rmul__ = __mul__

    def diff(self, name: str) -> 'ParamPoly':
        try:
            k = self.variables.index(name)
        except ValueError:
            return ParamPoly(self.variables)
        terms = {}
        for m, f in self._terms.items():
            if m[k]:
                reduced = m[:k] + (m[k] - 1,) + m[k + 1:]
                terms[reduced] = {p: v * m[k] for p, v in f.items()}
        return ParamPoly(self.variables, terms)

    def substitute(self, mapping: Mapping[str, IPoly]) -> 'ParamPoly':
        result = ParamPoly(self.variables)
        for m, f in self._terms.items():
            monomial = IPoly(self.variables, {m: 1}).substitute(mapping)
            result = result + ParamPoly(monomial.variables, {
                mm: {p: v * c for p, v in f.items()}
                for mm, c in monomial.exact_coefficients().items()
            })
        return result

    def instantiate(self, values) -> IPoly:
        """Substitute parameter values (mapping or sequence by index)."""
        terms = {}
        for m, f in self._terms.items():
            acc = Fraction(0)
            for k, v in f.items():
                acc += v if k is None else v * to_fraction(values[k])
            terms[m] = acc
        return IPoly(self.variables, terms)

    def to_ipoly(self) -> IPoly:
        if not self.is_constant:
            raise ValueError('polynomial still depends on parameters')
        return IPoly(self.variables,
                     {m: f.get(None, 0) for m, f in self._terms.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParamPoly):
            return NotImplemented
        a, b = self._align(other)
        return a._terms == b._terms

    def __hash__(self) -> int:
        return hash((self.variables, frozenset(
            (m, frozenset(f.items())) for m, f in self._terms.items()
        )))

    def __repr__(self) -> str:
        return '<{0!s} {1} terms, parameters {2}>'.format(
            self.__class__.__name__, len(self._terms), self.parameters()
        )


class MonomialVector(object):
    """Distinct monomials in graded-lex order over named variables."""

    __slots__ = ('monomials', 'variables', '_index')

    def __init__(self, monomials: Iterable[Monomial],
                 variables: Optional[Sequence[str]] = None) -> None:
        monomials = [tuple(int(e) for e in m) for m in monomials]
        if len(set(monomials)) != len(monomials):
            raise ValueError('monomial vector entries must be distinct')
        if variables is None:
            width = len(monomials[0]) if monomials else 0
            variables = default_variables(width)
        self.variables = tuple(variables)
        if any(len(m) != len(self.variables) for m in monomials):
            raise DimensionMismatchError('monomial width does not match '
                                         'the variables')
        self.monomials = tuple(sorted(monomials, key=grlex_key))
        self._index = {m: i for i, m in enumerate(self.monomials)}

    def __len__(self) -> int:
        return len(self.monomials)

    def __iter__(self):
        return iter(self.monomials)

    def __getitem__(self, index) -> Monomial:
        return self.monomials[index]

    def index(self, monomial: Monomial) -> int:
        return self._index[tuple(monomial)]

    @property
    def degree(self) -> int:
        return max((sum(m) for m in self.monomials), default=0)

    def product_span(self) -> List[Monomial]:
        span = {tuple(a + b for a, b in zip(mi, mj))
                for mi, mj in itertools.combinations_with_replacement(
                    self.monomials, 2)}
        return sorted(span, key=grlex_key)

    def without(self, positions: Iterable[int]) -> 'MonomialVector':
        drop = set(positions)
        return MonomialVector(
            (m for i, m in enumerate(self.monomials) if i not in drop),
            self.variables
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, MonomialVector):
            return NotImplemented
        return (self.monomials == other.monomials and
                self.variables == other.variables)

    def __hash__(self) -> int:
        return hash((self.monomials, self.variables))

    def __repr__(self) -> str:
        names = [_format_monomial(m, self.variables) or '1'
                 for m in self.monomials]
        return '{0!s}({1})'.format(self.__class__.__name__, ', '.join(names))


def monomial_basis(n: int, d: int,
                   variables: Optional[Sequence[str]] = None) -> MonomialVector:
    """All monomials in ``n`` variables of total degree at most ``d``."""
    if d < 0:
        raise ValueError('degree bound must be nonnegative')
    if variables is None:
        variables = default_variables(n)
    if len(variables) != n:
        raise DimensionMismatchError('expected {0} variable names'.format(n))
    monomials = []
    for degree in range(d + 1):
        for combo in itertools.combinations_with_replacement(range(n), degree):
            exponents = [0] * n
            for k in combo:
                exponents[k] += 1
            monomials.append(tuple(exponents))
    return MonomialVector(monomials, variables)


class InvariantTemplate(object):
    """``phi(x, c) = c^T T(x)`` over all monomials of degree <= ``degree``.

    Parameters are numbered from ``offset`` so that templates of several
    locations can share one parameter vector.
    """

    def __init__(self, variables: Sequence[str], degree: int,
                 offset: int = 0) -> None:
        self.variables = tuple(variables)
        self.degree = degree
        self.basis = monomial_basis(len(self.variables), degree,
                                    self.variables)
        self.offset = offset

    @property
    def size(self) -> int:
        return len(self.basis)

    @property
    def parameters(self) -> range:
        return range(self.offset, self.offset + self.size)

    def as_param_poly(self) -> ParamPoly:
        return ParamPoly(self.variables, {
            m: {self.offset + i: 1} for i, m in enumerate(self.basis)
        })

    def instantiate(self, values) -> IPoly:
        return self.as_param_poly().instantiate(values)

    def __repr__(self) -> str:
        return '<{0!s} degree {1} over {2}, parameters {3}..{4}>'.format(
            self.__class__.__name__, self.degree, ', '.join(self.variables),
            self.offset, self.offset + self.size - 1
        )


PolyLike = Union[IPoly, ParamPoly]


def lie_derivative(phi: PolyLike, field: Sequence[IPoly],
                   variables: Optional[Sequence[str]] = None) -> PolyLike:
    """``sum_i d(phi)/d(x_i) * field_i``."""
    if variables is None:
        variables = phi.variables
    if len(field) != len(variables):
        raise DimensionMismatchError(
            'field has {0} components for {1} variables'.format(
                len(field), len(variables)
            )
        )
    result = None
    for name, component in zip(variables, field):
        term = phi.diff(name) * component
        result = term if result is None else result + term
    if result is None:
        return phi * 0
    return result


def gram_to_poly(m: MonomialVector, matrix) -> IPoly:
    """Expand ``m^T W m``; ``W`` may be rational or interval."""
    if isinstance(matrix, IntervalMatrix):
        entries = matrix
        shape = matrix.shape
    else:
        entries = as_rational_array(matrix)
        shape = entries.shape
    k = len(m)
    if shape != (k, k):
        raise DimensionMismatchError(
            'Gram matrix of shape {0} for {1} monomials'.format(shape, k)
        )
    terms: Dict[Monomial, Interval] = {}
    for i in range(k):
        for j in range(i, k):
            w = as_interval(entries[i, j])
            if i != j:
                w = w * 2
            monomial = tuple(a + b for a, b in zip(m[i], m[j]))
            terms[monomial] = terms[monomial] + w if monomial in terms else w
    return IPoly(m.variables, terms)


def gram_unknowns(k: int) -> List[Tuple[int, int]]:
    """Upper-triangular Gram entries in row-major order."""
    return [(i, j) for i in range(k) for j in range(i, k)]


class CoefficientMatch(NamedTuple):
    #: ``s x r`` rational matrix, rows follow :meth:`MonomialVector.product_span`
    matrix: np.ndarray
    rhs: IntervalVector


def coefficient_match(target: IPoly, m: MonomialVector,
                      base=None) -> CoefficientMatch:
    """Linear system ``A w = v`` for the Gram update of ``target``.

    Unknowns are the upper-triangular entries of the update (see
    :func:`gram_unknowns`); an off-diagonal unknown enters its monomial
    with weight 2.  ``v`` is the coefficient vector of
    ``target - m^T base m``.
    """
    k = len(m)
    if base is None:
        base = SymRationalMatrix.zeros(k)
    target = target.embed(_merge_variables(m.variables, target.variables))
    if target.variables != m.variables:
        raise DimensionMismatchError(
            'target uses variables outside {0}'.format(m.variables)
        )
    span = m.product_span()
    rows = {mono: i for i, mono in enumerate(span)}
    if any(mono not in rows for mono in target.monomials()):
        raise BasisTooSmallError('monomial basis too small')
    unknowns = gram_unknowns(k)
    a = np.empty((len(span), len(unknowns)), dtype=object)
    a.fill(Fraction(0))
    for col, (i, j) in enumerate(unknowns):
        monomial = tuple(x + y for x, y in zip(m[i], m[j]))
        a[rows[monomial], col] = Fraction(1 if i == j else 2)
    residual = target - gram_to_poly(m, base)
    rhs = IntervalVector(residual.coefficient(mono) for mono in span)
    return CoefficientMatch(a, rhs)


def prune_basis(target: IPoly, m: MonomialVector) -> MonomialVector:
    """Drop basis monomials whose Gram diagonal is forced to zero.

    If ``m_i^2`` is absent from ``target`` and no other pair of basis
    monomials produces it, any PSD Gram matrix has ``W_ii = 0``, hence a
    zero row and column.  Repeats until nothing changes.
    """
    target = target.embed(_merge_variables(m.variables, target.variables))
    present = set(target.monomials())
    current = list(m.monomials)
    changed = True
    while changed:
        changed = False
        for i, mi in enumerate(current):
            square = tuple(2 * e for e in mi)
            if square in present:
                continue
            produced = any(
                tuple(a + b for a, b in zip(mj, mk)) == square
                for j, mj in enumerate(current)
                for mk in current[j + 1:]
            )
            if not produced:
                del current[i]
                changed = True
                break
    return MonomialVector(current, m.variables)


class PolyMap(object):
    """A vector of polynomials over common variables, with its Jacobian."""

    def __init__(self, components: Sequence[IPoly],
                 variables: Optional[Sequence[str]] = None) -> None:
        components = list(components)
        if variables is None:
            variables = ()
            for c in components:
                variables = _merge_variables(variables, c.variables)
        self.variables = tuple(variables)
        self.components = tuple(c.embed(self.variables) for c in components)
        self._jacobian = None
        self._hessians = None

    def __len__(self) -> int:
        return len(self.components)

    @property
    def jacobian(self) -> List[List[IPoly]]:
        if self._jacobian is None:
            self._jacobian = [[c.diff(v) for v in self.variables]
                              for c in self.components]
        return self._jacobian

    def hessian(self, index: int) -> List[List[IPoly]]:
        if self._hessians is None:
            self._hessians = {}
        if index not in self._hessians:
            row = self.jacobian[index]
            self._hessians[index] = [[d.diff(v) for v in self.variables]
                                     for d in row]
        return self._hessians[index]

    def evaluate(self, point) -> IntervalVector:
        return IntervalVector(c.evaluate(point) for c in self.components)

    def evaluate_float(self, point) -> np.ndarray:
        return np.array([c.evaluate_float(point)[0] for c in self.components])

    def jacobian_enclosure(self, box) -> IntervalMatrix:
        box = list(box)
        return IntervalMatrix([[d.evaluate(box) for d in row]
                               for row in self.jacobian])

    def jacobian_midpoint(self, point) -> np.ndarray:
        return as_rational_array([[d.evaluate(point).mid for d in row]
                                  for row in self.jacobian])

    def jacobian_float(self, point) -> np.ndarray:
        return np.array([[d.evaluate_float(point)[0] for d in row]
                         for row in self.jacobian])

    def restrict(self, fixed: Mapping[str, object]) -> 'PolyMap':
        """Freeze some variables at constant values."""
        variables = [v for v in self.variables if v not in fixed]
        mapping = {name: IPoly.constant(variables, value)
                   for name, value in fixed.items()}
        return PolyMap([c.substitute(mapping).embed(variables)
                        for c in self.components], variables)

    def __sub__(self, rhs) -> 'PolyMap':
        rhs = list(rhs)
        if len(rhs) != len(self.components):
            raise DimensionMismatchError('right-hand side has wrong length')
        return PolyMap([c - v for c, v in zip(self.components, rhs)],
                       self.variables)
