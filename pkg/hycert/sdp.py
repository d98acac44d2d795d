""":mod:`hycert.sdp` --- Numeric semidefinite programs
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

Small dense LMI programs solved with the cvxopt cone solver, the SOS
decomposition of a fixed polynomial, and alternating LMI steps for
programs that are bilinear in the template parameters and the
multipliers.

Nothing computed here is trusted.  Numeric witnesses are starting points
for the exact stages in :mod:`hycert.rational` and :mod:`hycert.psd`.

"""
import logging
import math
from fractions import Fraction
from typing import (IO, Dict, Iterable, List, Mapping, NamedTuple, Optional,
                    Sequence, Tuple, Union)

import numpy as np
import scipy.linalg
from cvxopt import matrix, solvers

from .exceptions import NumericalFailure
from .interval import SymRationalMatrix
from .poly import (IPoly, MonomialVector, ParamPoly, gram_to_poly,
                   gram_unknowns, monomial_basis, prune_basis)
from .verdicts import Failure, Infeasible

__all__ = (
    'BmiProgram', 'Block', 'LmiProgram', 'NumericWitness', 'SosConstraint',
    'SosDecomposition', 'balanced_bases', 'free_bases', 'free_param',
    'gram_param', 'solve_bmi_alternating', 'solve_lmi', 'sos_basis',
    'sos_decompose_numeric',
)

logger = logging.getLogger(__name__)

#: box bound on every unknown, keeps the cone program bounded
DEFAULT_BOUND = 1e4
#: the slack ``t`` in ``W + t I >= 0`` is not pushed below ``-SLACK_FLOOR``
SLACK_FLOOR = 1.0
EIGENVALUE_FLOOR = -1e-7
RESIDUAL_LIMIT = 1e-6
RANK_TOLERANCE = 1e-10
CONSISTENCY_TOLERANCE = 1e-9
#: alternation stops once every block clears this margin
STRICT_MARGIN = 1e-6
#: constant starting values of the sign-free multipliers, tried in order
FREE_STARTS = (-1.0, 0.0, 1.0)
#: fixed numeric values enter exact polynomial products with this denominator
FIXED_DENOMINATOR = 10 ** 12

Objective = str


class Block(NamedTuple):
    """A symmetric matrix unknown; its upper triangle, row by row, occupies
    ``count`` consecutive unknowns starting at ``offset``."""

    name: str
    size: int
    offset: int

    @property
    def count(self) -> int:
        return self.size * (self.size + 1) // 2

    def unknown(self, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        return self.offset + i * self.size - i * (i - 1) // 2 + (j - i)

    def matrix(self, values: Sequence[float]) -> np.ndarray:
        out = np.zeros((self.size, self.size))
        for i, j in gram_unknowns(self.size):
            out[i, j] = out[j, i] = values[self.unknown(i, j)]
        return out


class NumericWitness(NamedTuple):
    scalars: Dict[str, np.ndarray]
    blocks: Dict[str, np.ndarray]
    #: largest violation of an equality constraint
    residual: float
    #: optimal ``t`` of ``W + t I >= 0``; nonpositive for a feasible witness
    slack: float = 0.0
    #: accepted slacks of the alternating scheme, non-increasing
    history: Tuple[float, ...] = ()
    #: set when a refinement diverged and returned its input
    flagged: bool = False

    @property
    def c(self) -> np.ndarray:
        """The template parameters."""
        if 'c' not in self.scalars:
            return np.zeros(0)
        return np.asarray(self.scalars['c'], dtype=float)

    def min_eigenvalues(self) -> Dict[str, float]:
        return {name: float(np.linalg.eigvalsh(block)[0]) if block.size else 0.0
                for name, block in self.blocks.items()}


class LmiProgram(object):
    """Affine equalities over named scalar groups and symmetric blocks, with
    every block constrained to be positive semidefinite."""

    def __init__(self) -> None:
        self.scalars: Dict[str, Tuple[int, int]] = {}
        self.blocks: Dict[str, Block] = {}
        self.rows: List[Dict[int, float]] = []
        self.rhs: List[float] = []
        self.labels: List[object] = []
        self.size = 0

    def _check_name(self, name: str) -> None:
        if name in self.scalars or name in self.blocks:
            raise ValueError('unknown group {0!r} declared twice'.format(name))

    def add_scalars(self, name: str, count: int) -> range:
        self._check_name(name)
        self.scalars[name] = (self.size, count)
        self.size += count
        return range(self.size - count, self.size)

    def add_block(self, name: str, size: int) -> Block:
        self._check_name(name)
        if size < 1:
            raise ValueError('block {0!r} must have positive order'.format(name))
        block = Block(name, size, self.size)
        self.blocks[name] = block
        self.size += block.count
        return block

    def add_equality(self, coefficients: Mapping[int, float], rhs,
                     label=None) -> None:
        row = {}
        for index, value in coefficients.items():
            if not 0 <= index < self.size:
                raise ValueError('equality references undeclared unknown '
                                 '{0}'.format(index))
            if value:
                row[index] = float(value)
        self.rows.append(row)
        self.rhs.append(float(rhs))
        self.labels.append(len(self.rows) - 1 if label is None else label)

    def add_identity(self, poly: ParamPoly, label=None) -> None:
        """Require every coefficient of ``poly`` (affine in the unknowns)
        to vanish.  Rows are labelled ``(label, monomial)``."""
        for monomial, form in poly.items():
            constant = form.pop(None, 0)
            self.add_equality(form, -constant, (label, monomial))

    def equality_matrix(self) -> Tuple[np.ndarray, np.ndarray]:
        a = np.zeros((len(self.rows), self.size))
        for r, row in enumerate(self.rows):
            for index, value in row.items():
                a[r, index] = value
        return a, np.array(self.rhs, dtype=float)

    def residual(self, values: Sequence[float]) -> float:
        if not self.rows:
            return 0.0
        a, b = self.equality_matrix()
        return float(np.max(np.abs(a.dot(np.asarray(values, dtype=float)) - b)))

    def unpack(self, values: Sequence[float]) -> Tuple[Dict[str, np.ndarray],
                                                        Dict[str, np.ndarray]]:
        values = np.asarray(values, dtype=float)
        scalars = {name: values[offset:offset + count].copy()
                   for name, (offset, count) in self.scalars.items()}
        blocks = {name: block.matrix(values)
                  for name, block in self.blocks.items()}
        return scalars, blocks

    def pack(self, scalars: Mapping[str, Sequence[float]],
             blocks: Mapping[str, np.ndarray]) -> np.ndarray:
        values = np.zeros(self.size)
        for name, (offset, count) in self.scalars.items():
            values[offset:offset + count] = scalars[name]
        for name, block in self.blocks.items():
            w = blocks[name]
            for i, j in gram_unknowns(block.size):
                values[block.unknown(i, j)] = w[i, j]
        return values

    def linearize(self, witness: NumericWitness) -> Tuple[np.ndarray,
                                                           np.ndarray]:
        """Jacobian and residual vector of the equalities at ``witness``."""
        a, b = self.equality_matrix()
        values = self.pack(witness.scalars, witness.blocks)
        return a, a.dot(values) - b

    def dump(self, stream: IO[str]) -> None:
        """Write the program as a plain coefficient list."""
        stream.write('# hycert lmi program\n')
        stream.write('unknowns {0}\n'.format(self.size))
        for name, (offset, count) in self.scalars.items():
            stream.write('scalars {0} {1} {2}\n'.format(name, offset, count))
        for block in self.blocks.values():
            stream.write('block {0} {1} {2}\n'.format(
                block.name, block.offset, block.size
            ))
        for row, rhs in zip(self.rows, self.rhs):
            terms = ' '.join('{0}:{1!r}'.format(k, v)
                             for k, v in sorted(row.items()))
            stream.write('equality {0!r} : {1}\n'.format(rhs, terms))

    def __repr__(self) -> str:
        return '<{0!s} {1} unknowns, {2} blocks, {3} equalities>'.format(
            self.__class__.__name__, self.size, len(self.blocks),
            len(self.rows)
        )


def gram_param(basis: MonomialVector, block: Block) -> ParamPoly:
    """``m^T W m`` with the entries of ``W`` left as unknowns of ``block``."""
    terms: Dict[tuple, Dict[int, int]] = {}
    for i, j in gram_unknowns(len(basis)):
        monomial = tuple(a + b for a, b in zip(basis[i], basis[j]))
        form = terms.setdefault(monomial, {})
        index = block.unknown(i, j)
        form[index] = form.get(index, 0) + (1 if i == j else 2)
    return ParamPoly(basis.variables, terms)


def _independent_rows(a: np.ndarray, b: np.ndarray) -> Tuple[List[int], bool]:
    if not a.shape[0]:
        return [], True
    if not a.shape[1]:
        return [], bool(np.all(b == 0))
    _, r, perm = scipy.linalg.qr(a.T, mode='economic', pivoting=True)
    diagonal = np.abs(np.diag(r))
    if not diagonal.size or diagonal[0] == 0:
        rank = 0
    else:
        rank = int(np.sum(diagonal > RANK_TOLERANCE * diagonal[0]))
    keep = sorted(int(k) for k in perm[:rank])
    solution = scipy.linalg.lstsq(a, b)[0]
    gap = float(np.max(np.abs(a.dot(solution) - b)))
    scale = max(1.0, float(np.max(np.abs(b))))
    return keep, gap <= CONSISTENCY_TOLERANCE * scale


class _RawSolution(NamedTuple):
    values: np.ndarray
    slack: float
    dual: Optional[float]
    status: str


def _solve(prog: LmiProgram, objective: Objective, bound: float,
           options: Mapping) -> Union[_RawSolution, Infeasible]:
    a, b = prog.equality_matrix()
    keep, consistent = _independent_rows(a, b)
    if not consistent:
        return Infeasible('coefficient equations are inconsistent')
    n = prog.size
    with_slack = objective == 'slack'
    width = n + 1 if with_slack else n
    c = np.zeros(width)
    if with_slack:
        c[n] = 1.0
    elif objective == 'trace':
        for block in prog.blocks.values():
            for i in range(block.size):
                c[block.unknown(i, i)] = 1.0
    elif objective != 'zero':
        raise ValueError('unknown objective {0!r}'.format(objective))
    gl = [np.eye(n, width), -np.eye(n, width)]
    hl = [np.full(n, float(bound)), np.full(n, float(bound))]
    if with_slack:
        floor = np.zeros((1, width))
        floor[0, n] = -1.0
        gl.append(floor)
        hl.append(np.array([SLACK_FLOOR]))
    kwargs = {'Gl': matrix(np.vstack(gl)), 'hl': matrix(np.concatenate(hl))}
    gs, hs = [], []
    for block in prog.blocks.values():
        k = block.size
        g = np.zeros((k * k, width))
        for i, j in gram_unknowns(k):
            column = block.unknown(i, j)
            # cvxopt stores a k x k matrix column-major
            g[i + j * k, column] = -1.0
            g[j + i * k, column] = -1.0
        if with_slack:
            for i in range(k):
                g[i + i * k, n] = -1.0
        gs.append(matrix(g))
        hs.append(matrix(np.zeros((k, k))))
    if gs:
        kwargs.update(Gs=gs, hs=hs)
    if keep:
        rows = a[keep]
        if with_slack:
            rows = np.hstack([rows, np.zeros((len(keep), 1))])
        kwargs.update(A=matrix(rows), b=matrix(b[keep]))
    solver_options = dict(options)
    solver_options.setdefault('show_progress', False)
    try:
        solution = solvers.sdp(matrix(c), options=solver_options, **kwargs)
    except (ValueError, ArithmeticError) as e:
        raise NumericalFailure('cone solver failed: {0}'.format(e))
    status = solution['status']
    if status == 'primal infeasible':
        return Infeasible('cone solver certified primal infeasibility')
    x = solution.get('x')
    if x is None:
        raise NumericalFailure(
            'cone solver returned no iterate (status {0})'.format(status)
        )
    x = np.array(x).ravel()
    dual = solution.get('dual objective')
    logger.debug('LMI with %d unknowns and %d equalities: %s, slack %s',
                 n, len(keep), status, x[n] if with_slack else None)
    return _RawSolution(x[:n], float(x[n]) if with_slack else 0.0,
                        None if dual is None else float(dual), status)


def _witness(prog: LmiProgram, raw: _RawSolution) -> NumericWitness:
    scalars, blocks = prog.unpack(raw.values)
    return NumericWitness(scalars, blocks, prog.residual(raw.values),
                          raw.slack)


def solve_lmi(prog: LmiProgram, objective: Objective = 'slack',
              bound: float = DEFAULT_BOUND, abstol: float = 1e-9,
              reltol: float = 1e-9, feastol: float = 1e-10,
              maxiters: int = 100) -> Union[NumericWitness, Infeasible]:
    """Solve ``prog`` with a primal-dual interior-point method.

    With the default ``'slack'`` objective every block is relaxed to
    ``W + t I >= 0`` and ``t`` is minimized, so the solver always has a
    strictly feasible start and a positive optimal ``t`` means infeasible.
    That verdict is only reported when the dual objective proves it;
    anything else unusable raises :exc:`~hycert.exceptions.NumericalFailure`.
    ``'trace'`` minimizes the total trace of the blocks instead and
    ``'zero'`` is a pure feasibility problem.
    """
    options = {'abstol': abstol, 'reltol': reltol, 'feastol': feastol,
               'maxiters': maxiters}
    raw = _solve(prog, objective, bound, options)
    if isinstance(raw, Infeasible):
        return raw
    if raw.slack > -EIGENVALUE_FLOOR:
        if raw.status == 'optimal' and raw.dual is not None and raw.dual > 0:
            return Infeasible('no positive semidefinite solution',
                              dual_bound=raw.dual)
        raise NumericalFailure(
            'slack {0:.3g} stayed positive without a dual bound'.format(
                raw.slack
            ),
            raw.values
        )
    witness = _witness(prog, raw)
    if witness.residual > RESIDUAL_LIMIT:
        raise NumericalFailure(
            'equality residual {0:.3g} too large'.format(witness.residual),
            raw.values
        )
    for name, value in witness.min_eigenvalues().items():
        if value < EIGENVALUE_FLOOR:
            raise NumericalFailure(
                'block {0} has eigenvalue {1:.3g}'.format(name, value),
                raw.values
            )
    return witness


class SosDecomposition(NamedTuple):
    basis: MonomialVector
    gram: np.ndarray
    witness: NumericWitness


def sos_basis(psi: IPoly) -> MonomialVector:
    """Half-degree monomials, pruned of those forced to a zero row."""
    full = monomial_basis(psi.nvars, psi.degree // 2, psi.variables)
    return prune_basis(psi, full)


def sos_decompose_numeric(psi: IPoly, basis: Optional[MonomialVector] = None,
                          **options) -> Union[SosDecomposition, Infeasible]:
    """Numeric Gram matrix of an exact polynomial."""
    psi.exact_coefficients()
    if psi.degree % 2:
        return Infeasible('odd degree polynomial is not a sum of squares')
    if basis is None:
        basis = sos_basis(psi)
    if not len(basis):
        if not psi.is_zero:
            return Infeasible('no monomial basis supports the polynomial')
        basis = MonomialVector([(0,) * psi.nvars], psi.variables)
    span = set(basis.product_span())
    if any(m not in span for m in psi.embed(basis.variables).monomials()):
        return Infeasible('monomial basis too small')
    prog = LmiProgram()
    block = prog.add_block('gram', len(basis))
    prog.add_identity(ParamPoly.from_ipoly(psi) - gram_param(basis, block))
    result = solve_lmi(prog, **options)
    if isinstance(result, Infeasible):
        logger.debug('%s is not numerically SOS: %s', psi, result.reason)
        return result
    return SosDecomposition(basis, result.blocks['gram'], result)


def _limit(value: float) -> Fraction:
    return Fraction(float(value)).limit_denominator(FIXED_DENOMINATOR)


def _fixed_matrix(w: np.ndarray) -> SymRationalMatrix:
    w = (np.asarray(w, dtype=float) + np.asarray(w, dtype=float).T) / 2
    return SymRationalMatrix([[_limit(x) for x in row] for row in w])


def _free_degree(top: int, degree: int,
                 multiplier_degree: Optional[int]) -> int:
    if multiplier_degree is not None:
        return max(0, multiplier_degree)
    return max(0, top - degree)


def balanced_bases(target_degree: int, hypothesis_degrees: Sequence[int],
                   variables: Sequence[str],
                   multiplier_degree: Optional[int] = None,
                   equality_degrees: Sequence[int] = ()
                   ) -> Tuple[List[MonomialVector], MonomialVector]:
    """Monomial bases of the multipliers and of the SOS remainder.

    By default every product ``sigma_j * h_j`` reaches the target degree
    rounded up to even; an explicit ``multiplier_degree`` fixes
    ``deg sigma_j`` instead.  Products with the sign-free multipliers of
    ``equality_degrees`` (see :func:`free_bases`) widen the remainder.
    """
    variables = tuple(variables)
    top = 2 * math.ceil(target_degree / 2)
    halves = []
    for degree in hypothesis_degrees:
        if multiplier_degree is not None:
            halves.append(max(0, multiplier_degree // 2))
        else:
            halves.append(max(0, (top - degree) // 2))
    reach = max([target_degree] +
                [2 * half + degree
                 for half, degree in zip(halves, hypothesis_degrees)] +
                [_free_degree(top, degree, multiplier_degree) + degree
                 for degree in equality_degrees])
    multipliers = [monomial_basis(len(variables), half, variables)
                   for half in halves]
    remainder = monomial_basis(len(variables), math.ceil(reach / 2), variables)
    return multipliers, remainder


def free_bases(target_degree: int, equality_degrees: Sequence[int],
               variables: Sequence[str],
               multiplier_degree: Optional[int] = None
               ) -> List[MonomialVector]:
    """Supports of the sign-free multipliers ``lambda_k`` of equality
    hypotheses; each product ``lambda_k * e_k`` reaches the target degree
    rounded up to even."""
    variables = tuple(variables)
    top = 2 * math.ceil(target_degree / 2)
    return [monomial_basis(len(variables),
                           _free_degree(top, degree, multiplier_degree),
                           variables)
            for degree in equality_degrees]


def free_param(basis: MonomialVector, unknowns: Sequence[int]) -> ParamPoly:
    """``sum_i l_i m_i`` with the coefficients ``l_i`` left as unknowns."""
    return ParamPoly(basis.variables, {
        monomial: {index: 1} for monomial, index in zip(basis, unknowns)
    })


def _fixed_free(basis: MonomialVector, values: Sequence[float]) -> IPoly:
    return IPoly(basis.variables, {
        monomial: _limit(value) for monomial, value in zip(basis, values)
    })


def _union(polys: Iterable) -> Tuple[str, ...]:
    variables: Tuple[str, ...] = ()
    for poly in polys:
        variables += tuple(v for v in poly.variables if v not in variables)
    return variables


class SosConstraint(object):
    """``target - sum_j sigma_j h_j - sum_k lambda_k e_k`` and every
    ``sigma_j`` are sums of squares, while the ``lambda_k`` are arbitrary
    polynomials.  This proves ``h_j >= 0 and e_k = 0 |= target >= 0``.

    ``target``, the ``h_j`` and the ``e_k`` may be affine in template
    parameters; a parametric ``h_j`` or ``e_k`` makes its multiplier term
    bilinear.
    """

    def __init__(self, name: str, target, hypotheses: Sequence = (),
                 multiplier_degree: Optional[int] = None,
                 equalities: Sequence = ()) -> None:
        self.name = name
        polys = [target] + list(hypotheses) + list(equalities)
        variables = _union(p for p in polys if hasattr(p, 'variables'))
        self.variables = variables
        self.target = ParamPoly.lift(target, variables).embed(variables)
        self.hypotheses = tuple(ParamPoly.lift(h, variables).embed(variables)
                                for h in hypotheses)
        self.equalities = tuple(ParamPoly.lift(e, variables).embed(variables)
                                for e in equalities)
        self.multiplier_bases, self.sos_basis = balanced_bases(
            self.target.degree, [h.degree for h in self.hypotheses],
            variables, multiplier_degree,
            [e.degree for e in self.equalities]
        )
        self.free_bases = free_bases(
            self.target.degree, [e.degree for e in self.equalities],
            variables, multiplier_degree
        )

    def multiplier_name(self, j: int) -> str:
        return '{0}/sigma{1}'.format(self.name, j)

    def free_name(self, k: int) -> str:
        return '{0}/lambda{1}'.format(self.name, k)

    @property
    def sos_name(self) -> str:
        return '{0}/sos'.format(self.name)

    def bilinear(self) -> List[int]:
        return [j for j, h in enumerate(self.hypotheses) if not h.is_constant]

    def bilinear_free(self) -> List[int]:
        return [k for k, e in enumerate(self.equalities) if not e.is_constant]

    def __repr__(self) -> str:
        return '<{0!s} {1} with {2} hypotheses, {3} equalities>'.format(
            self.__class__.__name__, self.name, len(self.hypotheses),
            len(self.equalities)
        )


class BmiProgram(object):
    """A family of :class:`SosConstraint` sharing the template parameters
    ``c`` (numbered ``0 .. parameter_count - 1``)."""

    def __init__(self, parameter_count: int,
                 constraints: Sequence[SosConstraint]) -> None:
        names = [c.name for c in constraints]
        if len(set(names)) != len(names):
            raise ValueError('constraint names must be distinct')
        self.parameter_count = parameter_count
        self.constraints = tuple(constraints)

    @property
    def bilinear_blocks(self) -> Dict[str, int]:
        """Multiplier blocks that multiply a parametric hypothesis."""
        return {
            constraint.multiplier_name(j): len(constraint.multiplier_bases[j])
            for constraint in self.constraints
            for j in constraint.bilinear()
        }

    @property
    def bilinear_free(self) -> Dict[str, int]:
        """Sign-free multipliers that multiply a parametric equality."""
        return {
            constraint.free_name(k): len(constraint.free_bases[k])
            for constraint in self.constraints
            for k in constraint.bilinear_free()
        }

    def build(self, multipliers: Optional[Mapping[str, np.ndarray]] = None,
              c: Optional[Sequence[float]] = None) -> LmiProgram:
        """The LMI obtained by fixing some multipliers (Gram matrices or
        coefficient vectors, by name) or the parameters.  Parametric
        hypotheses need one of the two fixed."""
        multipliers = multipliers or {}
        prog = LmiProgram()
        values = None
        if c is None:
            prog.add_scalars('c', self.parameter_count)
        else:
            values = [_limit(v) for v in c]
        for constraint in self.constraints:
            identity = constraint.target
            if values is not None:
                identity = ParamPoly.from_ipoly(identity.instantiate(values))
            for j, (h, basis) in enumerate(zip(constraint.hypotheses,
                                               constraint.multiplier_bases)):
                name = constraint.multiplier_name(j)
                if values is not None:
                    h = h.instantiate(values)
                if name in multipliers:
                    sigma = gram_to_poly(basis, _fixed_matrix(multipliers[name]))
                else:
                    sigma = gram_param(basis, prog.add_block(name, len(basis)))
                identity = identity - sigma * h
            for k, (e, basis) in enumerate(zip(constraint.equalities,
                                               constraint.free_bases)):
                name = constraint.free_name(k)
                if values is not None:
                    e = e.instantiate(values)
                if name in multipliers:
                    lam = _fixed_free(basis, multipliers[name])
                else:
                    lam = free_param(basis, prog.add_scalars(name, len(basis)))
                identity = identity - lam * e
            block = prog.add_block(constraint.sos_name,
                                   len(constraint.sos_basis))
            identity = identity - gram_param(constraint.sos_basis, block)
            prog.add_identity(identity, constraint.name)
        return prog

    def linearize(self, witness: NumericWitness) -> Tuple[np.ndarray,
                                                           np.ndarray]:
        """Jacobian of the bilinear equalities at ``witness`` over the
        unknowns of :meth:`layout`, and the residual vector."""
        layout = self.layout()
        c = witness.scalars['c']
        fixed = {name: witness.blocks[name] for name in self.bilinear_blocks}
        fixed.update((name, witness.scalars[name])
                     for name in self.bilinear_free)
        by_c = self.build(multipliers=fixed)
        by_multipliers = self.build(c=c)
        a1, b1 = by_c.equality_matrix()
        a2, b2 = by_multipliers.equality_matrix()
        # a monomial whose coefficient vanishes identically in one of the
        # two programs has no row there
        labels = list(by_c.labels)
        labels += [label for label in by_multipliers.labels
                   if label not in labels]
        rows = {label: r for r, label in enumerate(labels)}
        jacobian = np.zeros((len(labels), layout.size))
        residual = np.zeros(len(labels))
        offset, count = layout.scalars['c']
        first, _ = by_c.scalars['c']
        values1 = by_c.pack(witness.scalars, witness.blocks)
        for r, label in enumerate(by_c.labels):
            jacobian[rows[label], offset:offset + count] = \
                a1[r, first:first + count]
            residual[rows[label]] = a1[r].dot(values1) - b1[r]
        values2 = by_multipliers.pack(witness.scalars, witness.blocks)
        for r, label in enumerate(by_multipliers.labels):
            for name, block in layout.blocks.items():
                source = by_multipliers.blocks[name]
                jacobian[rows[label], block.offset:block.offset + block.count] \
                    = a2[r, source.offset:source.offset + source.count]
            for name, (start, size) in layout.scalars.items():
                if name == 'c':
                    continue
                source, _ = by_multipliers.scalars[name]
                jacobian[rows[label], start:start + size] = \
                    a2[r, source:source + size]
            residual[rows[label]] = a2[r].dot(values2) - b2[r]
        return jacobian, residual

    def layout(self) -> LmiProgram:
        """A program declaring ``c`` and every multiplier, used for
        packing."""
        prog = LmiProgram()
        prog.add_scalars('c', self.parameter_count)
        for constraint in self.constraints:
            for j, basis in enumerate(constraint.multiplier_bases):
                prog.add_block(constraint.multiplier_name(j), len(basis))
            for k, basis in enumerate(constraint.free_bases):
                prog.add_scalars(constraint.free_name(k), len(basis))
            prog.add_block(constraint.sos_name, len(constraint.sos_basis))
        return prog

    def __repr__(self) -> str:
        return '<{0!s} {1} parameters, {2} constraints>'.format(
            self.__class__.__name__, self.parameter_count,
            len(self.constraints)
        )


def _step(prog: LmiProgram, bound: float,
          options: Mapping) -> Optional[NumericWitness]:
    try:
        raw = _solve(prog, 'slack', bound, options)
    except NumericalFailure as e:
        logger.info('alternation step failed: %s', e)
        return None
    if isinstance(raw, Infeasible):
        logger.info('alternation step infeasible: %s', raw.reason)
        return None
    return _witness(prog, raw)


def _free_start(size: int, value: float) -> np.ndarray:
    # the first monomial of a graded basis is the constant one
    start = np.zeros(size)
    start[0] = value
    return start


def _alternate(program: BmiProgram, multipliers: Dict[str, np.ndarray],
               max_iters: int, tolerance: float, bound: float,
               options: Mapping) -> Optional[NumericWitness]:
    blocks_fixed = program.bilinear_blocks
    free_fixed = program.bilinear_free
    best: Optional[NumericWitness] = None
    history: List[float] = []

    def accept(witness: Optional[NumericWitness]) -> bool:
        nonlocal best
        if witness is None:
            return False
        if best is not None and witness.slack > best.slack:
            logger.debug('alternation step raised the slack to %g',
                         witness.slack)
            return False
        improved = best is None or best.slack - witness.slack >= tolerance
        best = witness
        history.append(witness.slack)
        return improved

    for iteration in range(max_iters):
        step = _step(program.build(multipliers=multipliers), bound, options)
        if step is not None:
            blocks = dict(step.blocks)
            scalars = dict(step.scalars)
            for name, value in multipliers.items():
                target = blocks if name in blocks_fixed else scalars
                target[name] = np.array(value)
            step = step._replace(blocks=blocks, scalars=scalars)
        if not accept(step) or best.slack <= -STRICT_MARGIN:
            break
        c = best.scalars['c']
        step = _step(program.build(c=c), bound, options)
        if step is not None:
            scalars = dict(step.scalars)
            scalars['c'] = np.array(c)
            step = step._replace(scalars=scalars)
        if not accept(step) or best.slack <= -STRICT_MARGIN:
            break
        multipliers = {name: best.blocks[name] for name in blocks_fixed}
        multipliers.update((name, best.scalars[name]) for name in free_fixed)
        logger.debug('alternation round %d: slack %g', iteration, best.slack)
    if best is None:
        return None
    return best._replace(history=tuple(history))


def solve_bmi_alternating(program: BmiProgram, max_iters: int = 50,
                          tolerance: float = 1e-10,
                          bound: float = DEFAULT_BOUND, abstol: float = 1e-9,
                          reltol: float = 1e-9, feastol: float = 1e-10,
                          maxiters: int = 100,
                          free_starts: Sequence[float] = FREE_STARTS
                          ) -> Union[NumericWitness, Failure]:
    """Alternate between fixing the bilinear multipliers and fixing the
    template parameters, each step one LMI.

    SOS multipliers start at the identity Gram matrix and sign-free
    multipliers at each constant of ``free_starts`` in turn.  The previous
    point stays feasible for the next step, so accepted slacks never
    increase; a run stops when every block clears :data:`STRICT_MARGIN`,
    when a step improves the slack by less than ``tolerance`` or after
    ``max_iters`` rounds.  The first run whose slack reaches zero (within
    the eigenvalue floor) is returned.
    """
    options = {'abstol': abstol, 'reltol': reltol, 'feastol': feastol,
               'maxiters': maxiters}
    bilinear = program.bilinear_blocks
    free = program.bilinear_free
    if not bilinear and not free:
        try:
            result = solve_lmi(program.build(), bound=bound, **options)
        except NumericalFailure as e:
            return Failure(str(e))
        if isinstance(result, Infeasible):
            return Failure(result.reason)
        return result
    best: Optional[NumericWitness] = None
    for value in (free_starts if free else free_starts[:1]):
        multipliers = {name: np.eye(size) for name, size in bilinear.items()}
        multipliers.update((name, _free_start(size, value))
                           for name, size in free.items())
        witness = _alternate(program, multipliers, max_iters, tolerance,
                             bound, options)
        if witness is None:
            continue
        logger.info('alternation from sign-free start %g: slack %g after '
                    '%d steps', value, witness.slack, len(witness.history))
        if best is None or witness.slack < best.slack:
            best = witness
        if best.slack <= -EIGENVALUE_FLOOR:
            return best
    return Failure('alternating LMI steps found no feasible point', best)
