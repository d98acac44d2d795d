""":mod:`hycert.rational` --- Exact witnesses from numeric ones
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

"""
import logging
import math
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .interval import SymRationalMatrix, to_fraction
from .poly import IPoly, MonomialVector, coefficient_match
from .sdp import BmiProgram, LmiProgram, NumericWitness
from .verified import is_psd_exact, ldl_pivoted, minimal_norm_operator

__all__ = (
    'DENOMINATOR_SCHEDULE', 'exact_identity_check', 'gauss_newton_refine',
    'project_gram', 'project_psd', 'rationalize', 'rationalize_matrix',
    'recover_vector', 'truncated_pldlt',
)

logger = logging.getLogger(__name__)

DENOMINATOR_SCHEDULE = tuple(10 ** k for k in range(1, 7))
#: entry denominators used when a float matrix is made rational
MATRIX_DENOMINATOR = 10 ** 9
REFINE_TARGET = 1e-12
REFINE_STEPS = 20


def rationalize(x, denom_bound: int) -> Fraction:
    """Last continued-fraction convergent of ``x`` whose denominator does
    not exceed ``denom_bound``.

    The convergent ``p/q`` satisfies ``|x - p/q| < 1 / (q * denom_bound)``.
    """
    if denom_bound < 1:
        raise ValueError('denominator bound must be at least 1')
    rest = to_fraction(x)
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    while True:
        a = math.floor(rest)
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        if k > denom_bound:
            return Fraction(h_prev, k_prev)
        fraction = rest - a
        if not fraction:
            return Fraction(h, k)
        rest = 1 / fraction


def recover_vector(values: Sequence[float],
                   schedule: Sequence[int] = DENOMINATOR_SCHEDULE
                   ) -> Iterator[Tuple[int, List[Fraction]]]:
    """Rational candidates for ``values``, one per denominator bound,
    skipping repeats."""
    seen = set()
    for bound in schedule:
        candidate = [rationalize(v, bound) for v in values]
        key = tuple(candidate)
        if key in seen:
            continue
        seen.add(key)
        yield bound, candidate


def rationalize_matrix(w, denom_bound: int = MATRIX_DENOMINATOR
                       ) -> SymRationalMatrix:
    w = np.asarray(w, dtype=float)
    w = (w + w.T) / 2
    return SymRationalMatrix([[rationalize(x, denom_bound) for x in row]
                              for row in w])


def truncated_pldlt(w, denom_bound: int = MATRIX_DENOMINATOR
                    ) -> SymRationalMatrix:
    """Nearby exactly PSD rational matrix.

    The rationalized matrix is factored as ``P L D L^T P^T`` with
    symmetric pivoting; diagonal entries of ``D`` that are not positive
    end the elimination and are clamped to zero.
    """
    factorization = ldl_pivoted(rationalize_matrix(w, denom_bound), clamp=True)
    if factorization.truncated:
        logger.debug('truncated PLDLT clamped %d pivots',
                     sum(1 for d in factorization.diagonal if not d))
    return factorization.reassemble()


def project_psd(w: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in the Frobenius norm (eigenvalue clamping)."""
    w = (np.asarray(w, dtype=float) + np.asarray(w, dtype=float).T) / 2
    if not w.size:
        return w
    values, vectors = np.linalg.eigh(w)
    values = np.maximum(values, 0.0)
    return (vectors * values).dot(vectors.T)


Program = Union[LmiProgram, BmiProgram]


def _layout(prog: Program) -> LmiProgram:
    return prog.layout() if isinstance(prog, BmiProgram) else prog


def gauss_newton_refine(witness: NumericWitness, prog: Program,
                        target: float = REFINE_TARGET,
                        max_steps: int = REFINE_STEPS) -> NumericWitness:
    """Gauss-Newton steps on the equality residuals over all unknowns,
    projecting every block back onto the PSD cone after each step.

    Only steps that decrease the residual are accepted.  If the very
    first step already makes things worse the input is returned with
    ``flagged`` set.
    """
    layout = _layout(prog)
    jacobian, residual = prog.linearize(witness)
    current = float(np.max(np.abs(residual))) if residual.size else 0.0
    if not math.isfinite(current):
        raise ValueError('witness residual is not finite')
    for step in range(max_steps):
        if current < target:
            break
        delta = scipy.linalg.lstsq(jacobian, -residual)[0]
        values = layout.pack(witness.scalars, witness.blocks) + delta
        scalars, blocks = layout.unpack(values)
        blocks = {name: project_psd(b) for name, b in blocks.items()}
        candidate = witness._replace(scalars=scalars, blocks=blocks)
        next_jacobian, next_residual = prog.linearize(candidate)
        value = float(np.max(np.abs(next_residual)))
        if not math.isfinite(value) or value >= current:
            if step == 0 and not value <= current:
                logger.info('refinement diverged at residual %g', current)
                return witness._replace(flagged=True)
            break
        logger.debug('refinement step %d: residual %g -> %g',
                     step, current, value)
        witness, jacobian, residual, current = \
            candidate, next_jacobian, next_residual, value
    return witness._replace(residual=current)


def exact_identity_check(lhs: IPoly, rhs: IPoly) -> bool:
    """Whether two exact polynomials have identical coefficients."""
    lhs.exact_coefficients()
    rhs.exact_coefficients()
    return (lhs - rhs).is_zero


def project_gram(target: IPoly, basis: MonomialVector, gram,
                 schedule: Sequence[int] = (MATRIX_DENOMINATOR,)
                 ) -> Optional[SymRationalMatrix]:
    """Exact Gram matrix of ``target`` near the numeric ``gram``.

    The numeric matrix is rationalized, moved onto the affine space of
    Gram matrices of ``target`` by the exact minimal-norm correction, and
    kept if exact LDL^T proves it PSD.
    """
    target.exact_coefficients()
    for bound in schedule:
        base = rationalize_matrix(gram, bound)
        match = coefficient_match(target, basis, base)
        update = minimal_norm_operator(match.matrix).dot(
            np.array([v.lo for v in match.rhs], dtype=object)
        )
        candidate = base + SymRationalMatrix.from_upper(len(basis),
                                                        list(update))
        if is_psd_exact(candidate):
            return candidate
        logger.debug('projected Gram matrix at denominator %d is not PSD',
                     bound)
    return None
