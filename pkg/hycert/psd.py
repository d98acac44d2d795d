""":mod:`hycert.psd` --- Nonnegativity certificates for interval polynomials
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

An interval polynomial ``[psi]`` is nonnegative when every member has a
PSD Gram matrix.  Three routes lead there, tried in this order by
:func:`certify_psd`:

``ExactGram``
    the polynomial is exact and a rational Gram matrix is found and
    checked by exact LDL^T.
``FullRankRohn``
    the numeric Gram matrix of the midpoint is well inside the PSD cone;
    an interval Gram matrix covering every member is enclosed and shown
    PSD by the spectral radius test.
``SingularSquareKrawczyk`` / ``SingularUnderdetermined``
    the numeric Gram matrix is singular; every member is written as a sum
    of squared linear forms whose coefficients are shown to exist by an
    interval fixed-point argument.

Every certificate can be replayed against the polynomial with
:func:`replay_psd`, which does exact arithmetic only.

"""
import logging
from fractions import Fraction
from typing import (Dict, List, Mapping, NamedTuple, Optional, Sequence,
                    Tuple, Union)

import numpy as np
import scipy.linalg

from .exceptions import (BasisTooSmallError, HycertError, NumericalFailure,
                         RankDeficientError)
from .interval import (Interval, IntervalMatrix, IntervalVector,
                       SymRationalMatrix, as_rational_array, matvec,
                       sqrt_upper)
from .poly import (IPoly, MonomialVector, PolyMap, coefficient_match,
                   gram_to_poly, grlex_key)
from .rational import project_gram, truncated_pldlt
from .sdp import (BmiProgram, SosConstraint, solve_lmi, sos_basis,
                  sos_decompose_numeric)
from .verdicts import Inconclusive, Infeasible, PsdVerdict, VerifiedUniqueRoot
from .verified import (DEFAULT_TOLERANCE, interval_linear_enclosure,
                       is_psd_exact, krawczyk_verify, radius_spectral_bound,
                       rational_inverse, rohn_psd_check)

__all__ = (
    'ExactGram', 'FullRankRohn', 'ImplicationCertificate',
    'SingularSquareKrawczyk', 'SingularUnderdetermined', 'SquareSystem',
    'WitnessSystem', 'build_witness_system', 'certify_implication',
    'certify_psd', 'certify_psd_fullrank', 'certify_root_square',
    'certify_root_underdetermined', 'certify_singular', 'reduce_to_square',
    'replay_implication', 'replay_psd', 'search_underdetermined',
)

logger = logging.getLogger(__name__)

DEFAULT_TAU = 1e-6
KRAWCZYK_RETRIES = 3
#: denominators tried, in order, when multiplier Gram matrices are made exact
MULTIPLIER_SCHEDULE = (10 ** 2, 10 ** 4, 10 ** 6, 10 ** 9)
Q_DENOMINATOR = 10 ** 9
NEWTON_STEPS = 5
R1_GRID = tuple(Fraction(m, 10 ** e) for e in (3, 2, 1) for m in (1, 2, 5)) \
    + (Fraction(1),)


class ExactGram(NamedTuple):
    basis: MonomialVector
    gram: SymRationalMatrix


class FullRankRohn(NamedTuple):
    basis: MonomialVector
    #: numeric Gram matrix of the midpoint, made rational
    center: SymRationalMatrix
    #: every member of ``[psi]`` has a Gram matrix inside this one
    gram: IntervalMatrix
    lambda_lower: Fraction
    rho_upper: Fraction
    verdict: PsdVerdict


class SingularSquareKrawczyk(NamedTuple):
    basis: MonomialVector
    #: basis positions of each squared linear form
    forms: Tuple[Tuple[int, ...], ...]
    q_hat: Tuple[Fraction, ...]
    #: unknowns solved for, in pivot order; the others stay at ``q_hat``
    indices: Tuple[int, ...]
    box: IntervalVector
    preconditioner: np.ndarray


class SingularUnderdetermined(NamedTuple):
    basis: MonomialVector
    forms: Tuple[Tuple[int, ...], ...]
    q_hat: Tuple[Fraction, ...]
    indices: Tuple[int, ...]
    r1: Fraction
    r2: Fraction
    lipschitz: Fraction
    #: verdict of the square Krawczyk test on the same data, when ``r2 = 0``
    square_check: Optional[bool] = None


PsdCertificate = Union[ExactGram, FullRankRohn, SingularSquareKrawczyk,
                       SingularUnderdetermined]


def _q_names(count: int) -> Tuple[str, ...]:
    return tuple('q{0}'.format(i) for i in range(count))


def _as_exact(values) -> List[Fraction]:
    return [Fraction(float(v)).limit_denominator(Q_DENOMINATOR)
            if not isinstance(v, Fraction) else v for v in values]


class WitnessSystem(NamedTuple):
    """``F(q) - [v] = 0`` for the coefficients ``q`` of squared linear
    forms; ``F(0) = 0``."""

    F: PolyMap
    v: IntervalVector
    q_hat: np.ndarray
    basis: Optional[MonomialVector] = None
    forms: Tuple[Tuple[int, ...], ...] = ()
    monomials: Tuple[tuple, ...] = ()


def witness_map(basis: MonomialVector,
                forms: Sequence[Sequence[int]],
                extra: Sequence[tuple] = ()) -> Tuple[PolyMap, List[tuple]]:
    """The coefficient map of ``sum_i (sum_a q_ia m_a)^2``.

    Components follow the graded-lex order of the monomials produced by
    the forms together with ``extra``.
    """
    count = sum(len(f) for f in forms)
    names = _q_names(count)
    components: Dict[tuple, Dict[tuple, int]] = {m: {} for m in extra}
    unknown = 0
    for form in forms:
        slots = list(zip(range(unknown, unknown + len(form)), form))
        unknown += len(form)
        for x, (qa, a) in enumerate(slots):
            for qb, b in slots[x:]:
                monomial = tuple(p + r for p, r in zip(basis[a], basis[b]))
                exponent = [0] * count
                exponent[qa] += 1
                exponent[qb] += 1
                terms = components.setdefault(monomial, {})
                key = tuple(exponent)
                terms[key] = terms.get(key, 0) + (1 if qa == qb else 2)
    monomials = sorted(components, key=grlex_key)
    return PolyMap([IPoly(names, components[m]) for m in monomials],
                   names), monomials


def build_witness_system(psi: IPoly, w_hat, basis: MonomialVector,
                         tau: float = DEFAULT_TAU) -> WitnessSystem:
    """Squared-linear-forms system from a rank-revealing pivoted Cholesky
    factorization of the numeric Gram matrix.

    Basis entries with a negligible diagonal are dropped; each form gets
    one unknown per basis entry not pivoted by an earlier form.
    """
    w = np.asarray(w_hat, dtype=float)
    w = (w + w.T) / 2
    k = len(basis)
    eigenvalues = np.linalg.eigvalsh(w) if k else np.zeros(0)
    scale = max(float(np.max(np.abs(eigenvalues))), 1.0) if k else 1.0
    threshold = tau * scale
    rank = int(np.sum(eigenvalues > threshold))
    active = [j for j in range(k) if w[j, j] > threshold]
    remaining = w.copy()
    forms: List[Tuple[int, ...]] = []
    q: List[float] = []
    for _ in range(rank):
        candidates = [j for j in active
                      if all(j != f[0] for f in forms)]
        if not candidates:
            break
        pivot = max(candidates, key=lambda j: (remaining[j, j], -j))
        if remaining[pivot, pivot] <= threshold:
            break
        g = remaining[:, pivot] / np.sqrt(remaining[pivot, pivot])
        positions = [pivot] + sorted(j for j in candidates if j != pivot)
        forms.append(tuple(positions))
        q.extend(g[j] for j in positions)
        remaining = remaining - np.outer(g, g)
    psi = psi.embed(basis.variables)
    f, monomials = witness_map(basis, forms, psi.monomials())
    v = IntervalVector(psi.coefficient(m) for m in monomials)
    return WitnessSystem(f, v, np.array(q, dtype=float), basis,
                         tuple(forms), tuple(monomials))


class SquareSystem(NamedTuple):
    """``G(q_B) = [v_tilde]`` with the other unknowns frozen; ``G(0) = 0``."""

    indices: Tuple[int, ...]
    G: PolyMap
    v_tilde: IntervalVector
    q_hat: Tuple[Fraction, ...]


def reduce_to_square(ws: WitnessSystem) -> SquareSystem:
    """Choose ``s`` unknowns by column-pivoted QR of ``F'(q_hat)`` and
    freeze the rest at ``q_hat``.

    :raises RankDeficientError: if the Jacobian has not full row rank
    """
    s, r = len(ws.F), len(ws.F.variables)
    if s > r:
        raise RankDeficientError(
            'witness system has {0} equations but {1} unknowns'.format(s, r)
        )
    q_hat = _as_exact(ws.q_hat)
    indices: Tuple[int, ...] = ()
    if s:
        jacobian = ws.F.jacobian_float([float(x) for x in q_hat])
        _, upper, perm = scipy.linalg.qr(jacobian, pivoting=True)
        diagonal = np.abs(np.diag(upper))[:s]
        if diagonal[0] == 0 or np.any(diagonal <= 1e-12 * diagonal[0]):
            raise RankDeficientError('Jacobian of the witness system is '
                                     'rank deficient')
        indices = tuple(int(j) for j in perm[:s])
    names = ws.F.variables
    frozen = {names[j]: q_hat[j] for j in range(r) if j not in indices}
    restricted = ws.F.restrict(frozen)
    ordered = tuple(names[j] for j in indices)
    restricted = PolyMap(restricted.components, ordered)
    offset = restricted.evaluate([0] * len(ordered))
    shifted = PolyMap([c - o for c, o in zip(restricted.components, offset)],
                      ordered)
    return SquareSystem(indices, shifted, ws.v - offset,
                        tuple(q_hat[j] for j in indices))


def _newton(system: SquareSystem, start: Sequence[float]) -> List[float]:
    x = np.array([float(v) for v in start])
    target = np.array([float(v) for v in system.v_tilde.mid()])
    for _ in range(NEWTON_STEPS):
        try:
            step = np.linalg.solve(system.G.jacobian_float(x),
                                   system.G.evaluate_float(x) - target)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        x = x - step
    return list(x)


def _preconditioner(system: SquareSystem, x_hat) -> Optional[np.ndarray]:
    jacobian = system.G.jacobian_float([float(v) for v in x_hat])
    try:
        inverse = np.linalg.inv(jacobian)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(inverse)):
        return None
    return as_rational_array(
        [[Fraction(float(x)).limit_denominator(10 ** 12) for x in row]
         for row in inverse]
    )


def _default_box(system: SquareSystem, x_hat) -> IntervalVector:
    values = system.G.evaluate_float([float(v) for v in x_hat])
    gap = float(np.max(np.abs(
        values - np.array([float(v) for v in system.v_tilde.mid()])
    ))) if len(values) else 0.0
    radius = Fraction(max(1e-3, 10 * gap)).limit_denominator(10 ** 9)
    return IntervalVector.from_midrad(x_hat, radius)


def _krawczyk(system: SquareSystem, x_hat, box, preconditioner):
    func = system.G - list(system.v_tilde)
    return krawczyk_verify(func, x_hat, box, preconditioner)


def certify_root_square(system: SquareSystem,
                        box: Optional[IntervalVector] = None,
                        retries: int = KRAWCZYK_RETRIES,
                        ws: Optional[WitnessSystem] = None):
    """Krawczyk test for ``G(q_B) - v = 0`` with ``v`` ranging over
    ``[v_tilde]``; on success every member has a root in the box.

    Without an explicit ``box`` the expansion point is first polished by
    a few Newton steps and the box is widened up to ``retries`` times.
    """
    if not system.indices:
        if all(v.contains(0) and v.is_point for v in system.v_tilde):
            return _square_certificate(system, (), IntervalVector([]),
                                       as_rational_array([]), ws)
        return Inconclusive('witness system has no unknowns', 'krawczyk')
    if box is None:
        x_hat = _as_exact(_newton(system, system.q_hat))
        box = _default_box(system, x_hat)
        attempts = retries + 1
    else:
        x_hat = list(system.q_hat)
        if not box.contains(x_hat):
            x_hat = box.mid()
        attempts = 1
    preconditioner = _preconditioner(system, x_hat)
    if preconditioner is None:
        return Inconclusive('singular Jacobian at the expansion point',
                            'krawczyk')
    result = None
    for attempt in range(attempts):
        result = _krawczyk(system, x_hat, box, preconditioner)
        if isinstance(result, VerifiedUniqueRoot):
            logger.debug('Krawczyk test succeeded on attempt %d', attempt)
            return _square_certificate(system, x_hat, box, preconditioner, ws)
        box = box.widen(4)
    return result


def _square_certificate(system: SquareSystem, x_hat, box, preconditioner,
                        ws: Optional[WitnessSystem]):
    if ws is None or ws.basis is None:
        return VerifiedUniqueRoot(box)
    q_hat = list(_as_exact(ws.q_hat))
    for j, value in zip(system.indices, x_hat):
        q_hat[j] = value
    return SingularSquareKrawczyk(ws.basis, ws.forms, tuple(q_hat),
                                  system.indices, box, preconditioner)


def _norm_upper(values: Sequence[Fraction]) -> Fraction:
    return sqrt_upper(sum((v * v for v in values), Fraction(0)))


def _underdetermined_holds(ws: WitnessSystem, indices: Sequence[int],
                           q_hat: Sequence[Fraction], r1: Fraction,
                           r2: Fraction) -> Tuple[bool, Fraction]:
    names = ws.F.variables
    others = [j for j in range(len(names)) if j not in indices]
    jacobian = ws.F.jacobian_midpoint(q_hat)
    try:
        inverse = rational_inverse(jacobian[:, list(indices)])
    except RankDeficientError:
        return False, Fraction(0)
    box = IntervalVector(
        Interval.from_midrad(q, r1 if j in indices else r2)
        for j, q in enumerate(q_hat)
    )
    gap = IntervalVector.point(ws.F.evaluate(q_hat).mid()) - ws.v
    first = _norm_upper([v.mag for v in matvec(inverse, gap)])
    inverse_norm = _norm_upper(list(inverse.flat))
    curvature = Fraction(0)
    for i in range(len(ws.F)):
        hessian = ws.F.hessian(i)
        for j in indices:
            for entry in hessian[j]:
                curvature += entry.evaluate(list(box)).mag ** 2
    lipschitz = sqrt_upper(curvature)
    spread = ws.F.jacobian_enclosure(box)
    frozen_norm = _norm_upper([spread[i, j].mag for i in range(len(ws.F))
                               for j in others])
    bound = first + inverse_norm * (lipschitz * (r1 + r2) * r1 / 2 +
                                    frozen_norm * r2)
    return bound <= r1, lipschitz


def certify_root_underdetermined(ws: WitnessSystem, r1, r2,
                                 indices: Optional[Sequence[int]] = None):
    """Existence of a root of ``F(q) = v`` for every ``v`` in ``[v]``
    within ``r1`` of ``q_hat`` in the chosen unknowns and ``r2`` in the
    others.

    Norms are Euclidean for vectors and Frobenius for matrices.
    """
    r1, r2 = Fraction(r1), Fraction(r2)
    q_hat = _as_exact(ws.q_hat)
    if indices is None:
        try:
            indices = reduce_to_square(ws).indices
        except RankDeficientError as e:
            return Inconclusive(str(e), 'underdetermined')
    holds, lipschitz = _underdetermined_holds(ws, indices, q_hat, r1, r2)
    if not holds:
        return Inconclusive(
            'existence bound fails for r1={0}, r2={1}'.format(r1, r2),
            'underdetermined'
        )
    square_check = None
    if not r2 and len(indices) == len(q_hat):
        system = reduce_to_square(ws)
        square_check = bool(certify_root_square(system, ws=ws))
    if ws.basis is None:
        return VerifiedUniqueRoot(IntervalVector.from_midrad(q_hat, r1))
    return SingularUnderdetermined(ws.basis, ws.forms, tuple(q_hat),
                                   tuple(indices), r1, r2, lipschitz,
                                   square_check)


def search_underdetermined(ws: WitnessSystem,
                           grid: Sequence[Fraction] = R1_GRID):
    """Scan ``r1`` over ``grid`` and ``r2`` over ``0, r1/10, r1/2``."""
    try:
        indices = reduce_to_square(ws).indices
    except RankDeficientError as e:
        return Inconclusive(str(e), 'underdetermined')
    for r1 in grid:
        for r2 in (Fraction(0), r1 / 10, r1 / 2):
            result = certify_root_underdetermined(ws, r1, r2, indices)
            if not isinstance(result, Inconclusive):
                return result
    return Inconclusive('no radii satisfy the existence bound',
                        'underdetermined')


def certify_singular(psi: IPoly, w_hat, basis: MonomialVector,
                     tau: float = DEFAULT_TAU,
                     krawczyk_retries: int = KRAWCZYK_RETRIES):
    """Singular route: square Krawczyk first, then the underdetermined
    criterion."""
    try:
        ws = build_witness_system(psi, w_hat, basis, tau)
    except BasisTooSmallError as e:
        return Inconclusive(str(e), 'rank')
    if not ws.forms:
        return Inconclusive('numeric Gram matrix has rank zero', 'rank')
    try:
        system = reduce_to_square(ws)
    except RankDeficientError as e:
        return Inconclusive(str(e), 'rank')
    result = certify_root_square(system, retries=krawczyk_retries, ws=ws)
    if not isinstance(result, Inconclusive):
        return result
    logger.debug('square Krawczyk test failed (%s), trying the '
                 'underdetermined criterion', result)
    return search_underdetermined(ws)


def certify_psd_fullrank(psi: IPoly, tau: float = DEFAULT_TAU,
                         lambda_tol=DEFAULT_TOLERANCE,
                         decomposition=None, basis=None, **sdp_options):
    """Full-rank route: enclose ``[W] = W_hat + [dW]`` with
    ``A dW = [psi] - m^T W_hat m`` and apply the spectral radius test."""
    if decomposition is None:
        decomposition = _decompose(psi, basis, sdp_options)
        if isinstance(decomposition, Inconclusive):
            return decomposition
    basis = decomposition.basis
    w = np.asarray(decomposition.gram, dtype=float)
    eigenvalues = np.linalg.eigvalsh(w)
    scale = max(float(np.max(np.abs(eigenvalues))), 1.0)
    if eigenvalues[0] <= tau * scale:
        return Inconclusive(
            'numeric Gram matrix is singular (smallest eigenvalue '
            '{0:.3g})'.format(eigenvalues[0]), 'rank'
        )
    center = _center(w)
    try:
        gram = _enclose(psi, basis, center)
    except BasisTooSmallError as e:
        return Inconclusive(str(e), 'rohn')
    result = rohn_psd_check(gram, lambda_tol)
    if not result:
        return Inconclusive(
            'radius spectral bound {0:.4g} exceeds eigenvalue bound '
            '{1:.4g}'.format(float(result.rho_upper),
                             float(result.lambda_lower)), 'rohn'
        )
    return FullRankRohn(basis, center, gram, result.lambda_lower,
                        result.rho_upper, result.verdict)


def _center(w: np.ndarray) -> SymRationalMatrix:
    w = (w + w.T) / 2
    return SymRationalMatrix([[Fraction(float(x)).limit_denominator(10 ** 9)
                               for x in row] for row in w])


def _enclose(psi: IPoly, basis: MonomialVector,
             center: SymRationalMatrix) -> IntervalMatrix:
    match = coefficient_match(psi, basis, center)
    update = interval_linear_enclosure(match.matrix, match.rhs)
    k = len(basis)
    rows = [[Interval.point(center[i, j]) for j in range(k)]
            for i in range(k)]
    position = 0
    for i in range(k):
        for j in range(i, k):
            rows[i][j] = rows[i][j] + update[position]
            rows[j][i] = rows[i][j]
            position += 1
    return IntervalMatrix(rows)


def _decompose(psi: IPoly, basis, sdp_options):
    if basis is None:
        basis = sos_basis(psi)
    try:
        result = sos_decompose_numeric(psi.midpoint(), basis, **sdp_options)
    except NumericalFailure as e:
        return Inconclusive(str(e), 'sdp')
    if isinstance(result, Infeasible):
        return Inconclusive(result.reason, 'sos')
    return result


def certify_psd(psi: IPoly, tau: float = DEFAULT_TAU,
                lambda_tol=DEFAULT_TOLERANCE,
                krawczyk_retries: int = KRAWCZYK_RETRIES,
                basis: Optional[MonomialVector] = None,
                sdp_options: Optional[Mapping] = None):
    """Prove ``[psi](x) >= 0`` for every ``x`` and every member.

    Returns a certificate or :class:`~hycert.verdicts.Inconclusive`;
    never claims that ``[psi]`` takes negative values.
    """
    sdp_options = dict(sdp_options or {})
    if psi.is_zero:
        zero = MonomialVector([(0,) * psi.nvars], psi.variables)
        return ExactGram(zero, SymRationalMatrix.zeros(1))
    if psi.degree % 2:
        return Inconclusive('odd degree polynomial takes negative values',
                            'sos')
    decomposition = _decompose(psi, basis, sdp_options)
    if isinstance(decomposition, Inconclusive):
        return decomposition
    if psi.is_exact:
        gram = project_gram(psi, decomposition.basis, decomposition.gram)
        if gram is not None:
            return ExactGram(decomposition.basis, gram)
    result = certify_psd_fullrank(psi, tau, lambda_tol, decomposition)
    if not isinstance(result, Inconclusive):
        return result
    logger.debug('full-rank route failed (%s), trying the singular route',
                 result)
    singular = certify_singular(psi, decomposition.gram, decomposition.basis,
                                tau, krawczyk_retries)
    if isinstance(singular, Inconclusive) and result.stage == 'rohn':
        return result
    return singular


def replay_psd(certificate: PsdCertificate, psi: IPoly) -> bool:
    """Re-check ``certificate`` against ``psi`` in exact arithmetic."""
    try:
        if isinstance(certificate, ExactGram):
            expanded = gram_to_poly(certificate.basis, certificate.gram)
            return (psi.is_exact and (expanded - psi).is_zero and
                    is_psd_exact(certificate.gram))
        if isinstance(certificate, FullRankRohn):
            gram = _enclose(psi, certificate.basis, certificate.center)
            if gram != certificate.gram:
                return False
            lam = certificate.lambda_lower
            if not is_psd_exact(gram.midpoint_matrix().shift(lam)):
                return False
            return radius_spectral_bound(gram.rad()) <= lam
        ws = _replay_system(certificate, psi)
        if isinstance(certificate, SingularSquareKrawczyk):
            system = _square_from(ws, certificate)
            x_hat = [certificate.q_hat[j] for j in certificate.indices]
            if not system.indices:
                return all(v.is_point and v.lo == 0 for v in system.v_tilde)
            if len(certificate.box) != len(x_hat) or \
                    not certificate.box.contains(x_hat):
                return False
            result = _krawczyk(system, x_hat, certificate.box,
                               certificate.preconditioner)
            return isinstance(result, VerifiedUniqueRoot)
        if isinstance(certificate, SingularUnderdetermined):
            holds, _ = _underdetermined_holds(
                ws, certificate.indices, list(certificate.q_hat),
                certificate.r1, certificate.r2
            )
            return holds
    except (HycertError, IndexError) as e:
        logger.info('certificate replay raised %s', e)
        return False
    raise TypeError('unknown certificate {0!r}'.format(certificate))


def _replay_system(certificate, psi: IPoly) -> WitnessSystem:
    psi = psi.embed(certificate.basis.variables)
    f, monomials = witness_map(certificate.basis, certificate.forms,
                               psi.monomials())
    v = IntervalVector(psi.coefficient(m) for m in monomials)
    return WitnessSystem(f, v, np.array([float(q) for q in certificate.q_hat]),
                         certificate.basis, certificate.forms,
                         tuple(monomials))


def _square_from(ws: WitnessSystem,
                 certificate: SingularSquareKrawczyk) -> SquareSystem:
    names = ws.F.variables
    q_hat = list(certificate.q_hat)
    indices = certificate.indices
    frozen = {names[j]: q_hat[j] for j in range(len(names))
              if j not in indices}
    restricted = ws.F.restrict(frozen)
    ordered = tuple(names[j] for j in indices)
    restricted = PolyMap(restricted.components, ordered)
    offset = restricted.evaluate([0] * len(ordered))
    shifted = PolyMap([c - o for c, o in zip(restricted.components, offset)],
                      ordered)
    return SquareSystem(indices, shifted, ws.v - offset,
                        tuple(q_hat[j] for j in indices))


class ImplicationCertificate(NamedTuple):
    """``target - sum_j sigma_j h_j - sum_k lambda_k e_k`` is nonnegative
    with every ``sigma_j = m_j^T W_j m_j`` exactly PSD and every
    ``lambda_k`` an exact polynomial of either sign."""

    multipliers: Tuple[Tuple[MonomialVector, SymRationalMatrix], ...]
    residual: IPoly
    certificate: PsdCertificate
    free_multipliers: Tuple[IPoly, ...] = ()


def _residual(target: IPoly, hypotheses: Sequence[IPoly], multipliers,
              equalities: Sequence[IPoly] = (),
              free_multipliers: Sequence[IPoly] = ()) -> IPoly:
    residual = target
    for h, (basis, gram) in zip(hypotheses, multipliers):
        residual = residual - gram_to_poly(basis, gram) * h
    for e, lam in zip(equalities, free_multipliers):
        residual = residual - lam * e
    return residual


def _round_free(basis: MonomialVector, values, bound: int) -> IPoly:
    return IPoly(basis.variables, {
        monomial: Fraction(float(v)).limit_denominator(bound)
        for monomial, v in zip(basis, values)
    })


def certify_implication(hypotheses: Sequence[IPoly], target: IPoly,
                        mult_degree: Optional[int] = None,
                        tau: float = DEFAULT_TAU,
                        lambda_tol=DEFAULT_TOLERANCE,
                        krawczyk_retries: int = KRAWCZYK_RETRIES,
                        sdp_options: Optional[Mapping] = None,
                        equalities: Sequence[IPoly] = ()):
    """Prove ``h_1 >= 0 and ... and h_m >= 0 and e_1 = 0 and ... |=
    [target] >= 0``.

    Multipliers are found numerically for the midpoint target.  The SOS
    ones are made exactly PSD by truncated PLDL^T and the sign-free ones
    of the ``equalities`` are rounded to rationals; the remaining interval
    polynomial is handed to :func:`certify_psd`.  Since the identity holds
    everywhere, the certificate also shows ``[target] >= sum_k lambda_k
    e_k`` wherever the ``h_j`` are nonnegative.
    """
    sdp_options = dict(sdp_options or {})
    hypotheses = [h for h in hypotheses if not h.is_zero]
    equalities = [e for e in equalities if not e.is_zero]
    for h in hypotheses + equalities:
        h.exact_coefficients()
    options = dict(tau=tau, lambda_tol=lambda_tol,
                   krawczyk_retries=krawczyk_retries, sdp_options=sdp_options)
    if not hypotheses and not equalities:
        result = certify_psd(target, **options)
        if isinstance(result, Inconclusive):
            return result
        return ImplicationCertificate((), target, result)
    constraint = SosConstraint('implication', target.midpoint(), hypotheses,
                               mult_degree, equalities)
    hypotheses = [h.embed(constraint.variables) for h in hypotheses]
    equalities = [e.embed(constraint.variables) for e in equalities]
    target = target.embed(constraint.variables)
    try:
        witness = solve_lmi(BmiProgram(0, [constraint]).build(),
                            **sdp_options)
    except NumericalFailure as e:
        return Inconclusive(str(e), 'multipliers')
    if isinstance(witness, Infeasible):
        return Inconclusive(witness.reason, 'multipliers')
    last: Inconclusive = Inconclusive('no multiplier rounding succeeded',
                                      'residual')
    seen = set()
    for bound in MULTIPLIER_SCHEDULE:
        multipliers = tuple(
            (basis, truncated_pldlt(witness.blocks[
                constraint.multiplier_name(j)], bound))
            for j, basis in enumerate(constraint.multiplier_bases)
        )
        free = tuple(
            _round_free(basis, witness.scalars[constraint.free_name(k)],
                        bound)
            for k, basis in enumerate(constraint.free_bases)
        )
        key = (tuple(tuple(w.upper()) for _, w in multipliers), free)
        if key in seen:
            continue
        seen.add(key)
        residual = _residual(target, hypotheses, multipliers, equalities,
                             free)
        result = certify_psd(residual, **options)
        if not isinstance(result, Inconclusive):
            return ImplicationCertificate(multipliers, residual, result, free)
        logger.debug('residual at denominator %d not certified: %s',
                     bound, result)
        last = result
    return last


def replay_implication(certificate: ImplicationCertificate,
                       hypotheses: Sequence[IPoly], target: IPoly,
                       equalities: Sequence[IPoly] = ()) -> bool:
    hypotheses = [h for h in hypotheses if not h.is_zero]
    equalities = [e for e in equalities if not e.is_zero]
    if len(hypotheses) != len(certificate.multipliers):
        return False
    if len(equalities) != len(certificate.free_multipliers):
        return False
    if any(not is_psd_exact(w) for _, w in certificate.multipliers):
        return False
    if any(not lam.is_exact for lam in certificate.free_multipliers):
        return False
    variables = certificate.residual.variables
    try:
        residual = _residual(target.embed(variables),
                             [h.embed(variables) for h in hypotheses],
                             certificate.multipliers,
                             [e.embed(variables) for e in equalities],
                             certificate.free_multipliers)
    except (HycertError, ValueError):
        return False
    if residual != certificate.residual:
        return False
    return replay_psd(certificate.certificate, residual)
