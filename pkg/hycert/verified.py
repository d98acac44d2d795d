""":mod:`hycert.verified` --- Verified linear algebra and root existence
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

Floats are used only to *guess*: eigenvalue estimates, Perron vectors.
Every returned bound is then certified in exact rational arithmetic.

"""
import logging
from fractions import Fraction
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .exceptions import (DimensionMismatchError, NotRadiusMatrixError,
                         OutsideBoxError, RankDeficientError)
from .interval import (Interval, IntervalMatrix, IntervalVector,
                       SymRationalMatrix, as_rational_array, matvec,
                       to_fraction)
from .verdicts import Inconclusive, PsdVerdict, VerifiedUniqueRoot

__all__ = (
    'LdlFactorization', 'RohnResult', 'interval_linear_enclosure',
    'is_psd_exact', 'krawczyk_verify', 'ldl_pivoted', 'psd_lower_bound',
    'radius_spectral_bound', 'rational_inverse', 'rohn_psd_check',
)

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = Fraction(1, 10 ** 6)
PERRON_ITERATIONS = 50


class LdlFactorization(NamedTuple):
    """``P L D L^T P^T`` with ``perm[k]`` the original index of row ``k``."""

    perm: Tuple[int, ...]
    lower: np.ndarray
    diagonal: Tuple[Fraction, ...]
    #: whether trailing pivots were clamped to zero
    truncated: bool

    def reassemble(self) -> SymRationalMatrix:
        n = len(self.perm)
        d = np.empty((n, n), dtype=object)
        d.fill(Fraction(0))
        for k, value in enumerate(self.diagonal):
            d[k, k] = value
        permuted = self.lower.dot(d).dot(self.lower.T)
        out = np.empty((n, n), dtype=object)
        for a in range(n):
            for b in range(n):
                out[self.perm[a], self.perm[b]] = permuted[a, b]
        return SymRationalMatrix(out)


def _swap(arr: np.ndarray, i: int, j: int) -> None:
    arr[[i, j], :] = arr[[j, i], :]
    arr[:, [i, j]] = arr[:, [j, i]]


def ldl_pivoted(matrix, clamp: bool = True) -> Optional[LdlFactorization]:
    """Exact LDL^T with symmetric pivoting on the largest diagonal entry.

    Once the largest remaining diagonal entry is not positive the
    elimination stops.  With ``clamp`` the remaining block is truncated
    to zero; without it ``None`` is returned unless that block already
    is zero (which makes the input exactly PSD).
    """
    a = as_rational_array(matrix).copy()
    n = a.shape[0]
    perm = list(range(n))
    lower = np.empty((n, n), dtype=object)
    lower.fill(Fraction(0))
    for k in range(n):
        lower[k, k] = Fraction(1)
    diagonal: List[Fraction] = []
    truncated = False
    for k in range(n):
        # ties go to the lowest index
        pivot = max(range(k, n), key=lambda j: (a[j, j], -j))
        if pivot != k:
            _swap(a, k, pivot)
            perm[k], perm[pivot] = perm[pivot], perm[k]
            lower[[k, pivot], :k] = lower[[pivot, k], :k]
        d = a[k, k]
        if d <= 0:
            rest_zero = all(a[i, j] == 0
                            for i in range(k, n) for j in range(k, n))
            if not rest_zero and not clamp:
                return None
            truncated = not rest_zero
            diagonal.extend([Fraction(0)] * (n - k))
            break
        diagonal.append(d)
        for i in range(k + 1, n):
            lower[i, k] = a[i, k] / d
        for i in range(k + 1, n):
            if not a[i, k]:
                continue
            factor = a[i, k] / d
            for j in range(k + 1, n):
                a[i, j] -= factor * a[k, j]
    return LdlFactorization(tuple(perm), lower, tuple(diagonal), truncated)


def is_psd_exact(matrix) -> bool:
    """Decide positive semidefiniteness exactly."""
    return ldl_pivoted(matrix, clamp=False) is not None


def psd_lower_bound(matrix, tol=DEFAULT_TOLERANCE) -> Fraction:
    """Certified lower bound of the smallest eigenvalue.

    Returns ``lam`` with ``W - lam*I`` exactly PSD and ``W - (lam+tol)*I``
    not PSD, so ``lam`` lies within ``tol`` below the minimum eigenvalue.
    """
    w = matrix if isinstance(matrix, SymRationalMatrix) \
        else SymRationalMatrix(matrix)
    tol = to_fraction(tol)
    if tol <= 0:
        raise ValueError('tolerance must be positive')
    if not w.order:
        return Fraction(0)
    norm = w.norm_inf()
    lo, hi = -norm, norm
    if is_psd_exact(w.shift(hi)):
        return hi
    estimate = float(np.linalg.eigvalsh(w.to_float())[0])
    guess = to_fraction(estimate)
    for candidate in (Fraction(estimate).limit_denominator(10 ** 8), guess,
                      guess - tol / 4, guess + tol / 2):
        if not lo < candidate < hi:
            continue
        if is_psd_exact(w.shift(candidate)):
            lo = candidate
        else:
            hi = candidate
    while hi - lo > tol:
        middle = (lo + hi) / 2
        if is_psd_exact(w.shift(middle)):
            lo = middle
        else:
            hi = middle
    return lo


def _perron_vector(r: np.ndarray) -> np.ndarray:
    n = r.shape[0]
    x = np.ones(n)
    try:
        values, vectors = np.linalg.eigh(r)
        start = np.abs(vectors[:, int(np.argmax(values))])
        if np.all(np.isfinite(start)) and start.max() > 0:
            x = start
    except np.linalg.LinAlgError:
        pass
    for _ in range(PERRON_ITERATIONS):
        # shifted power step, positive floor keeps every ratio defined
        y = r.dot(x) + x
        y = y / np.max(y)
        y = np.maximum(y, 1e-12)
        if np.allclose(y, x, rtol=1e-14, atol=0):
            x = y
            break
        x = y
    return x


def radius_spectral_bound(matrix) -> Fraction:
    """Certified upper bound of the spectral radius of a radius matrix."""
    r = as_rational_array(matrix)
    if r.shape[0] != r.shape[1]:
        raise DimensionMismatchError('radius matrix must be square')
    if any(x < 0 for x in r.flat):
        raise NotRadiusMatrixError('not a radius matrix')
    n = r.shape[0]
    if not n:
        return Fraction(0)
    inf_bound = max(sum(row, Fraction(0)) for row in r)
    if not inf_bound:
        return Fraction(0)
    x = _perron_vector(r.astype(float))
    xs = [Fraction(float(v)).limit_denominator(10 ** 12) for v in x]
    xs = [v if v > 0 else Fraction(1, 10 ** 12) for v in xs]
    rx = r.dot(np.array(xs, dtype=object))
    # Collatz-Wielandt: R x <= c x with x > 0 bounds the Perron root by c
    perron_bound = max(Fraction(rx[i]) / xs[i] for i in range(n))
    return min(inf_bound, perron_bound)


class RohnResult(NamedTuple):
    verdict: PsdVerdict
    lambda_lower: Fraction
    rho_upper: Fraction

    def __bool__(self) -> bool:
        return bool(self.verdict)


def rohn_psd_check(matrix: IntervalMatrix, tol=DEFAULT_TOLERANCE) -> RohnResult:
    """Sufficient test that every member of a symmetric interval matrix is
    positive (semi)definite: spectral radius of the radius matrix against
    the smallest eigenvalue of the midpoint matrix.
    """
    if not matrix.is_symmetric():
        raise ValueError('interval matrix is not symmetric')
    lam = psd_lower_bound(matrix.midpoint_matrix(), tol)
    rho = radius_spectral_bound(matrix.rad())
    if rho < lam:
        verdict = PsdVerdict.POSITIVE_DEFINITE
    elif rho <= lam:
        verdict = PsdVerdict.POSITIVE_SEMIDEFINITE
    else:
        verdict = PsdVerdict.INCONCLUSIVE
    logger.debug('Rohn check: rho <= %s, lambda_min >= %s: %s',
                 float(rho), float(lam), verdict.value)
    return RohnResult(verdict, lam, rho)


def rational_inverse(matrix) -> np.ndarray:
    """Exact inverse by Gauss-Jordan elimination.

    :raises RankDeficientError: if the matrix is singular
    """
    a = as_rational_array(matrix)
    n, m = a.shape
    if n != m:
        raise DimensionMismatchError('only square matrices have inverses')
    aug = np.empty((n, 2 * n), dtype=object)
    aug.fill(Fraction(0))
    aug[:, :n] = a
    for i in range(n):
        aug[i, n + i] = Fraction(1)
    for col in range(n):
        pivot = next((i for i in range(col, n) if aug[i, col] != 0), None)
        if pivot is None:
            raise RankDeficientError('matrix is singular')
        if pivot != col:
            aug[[col, pivot], :] = aug[[pivot, col], :]
        p = aug[col, col]
        aug[col, :] = [x / p for x in aug[col, :]]
        for i in range(n):
            if i != col and aug[i, col] != 0:
                factor = aug[i, col]
                aug[i, :] = [x - factor * y
                             for x, y in zip(aug[i, :], aug[col, :])]
    return aug[:, n:]


def minimal_norm_operator(matrix) -> np.ndarray:
    """``A^T (A A^T)^{-1}`` in exact arithmetic."""
    a = as_rational_array(matrix)
    s, r = a.shape
    if s > r:
        raise RankDeficientError(
            'coefficient-matching matrix rank deficient'
        )
    try:
        gram_inverse = rational_inverse(a.dot(a.T))
    except RankDeficientError:
        raise RankDeficientError(
            'coefficient-matching matrix rank deficient'
        )
    return a.T.dot(gram_inverse)


def interval_linear_enclosure(matrix, rhs: IntervalVector) -> IntervalVector:
    """Enclose the minimal-norm solutions of ``A w = v`` for all ``v`` in
    ``rhs``.  The pseudo-inverse is formed exactly, so the enclosure is the
    interval hull of its image.
    """
    a = as_rational_array(matrix)
    if a.shape[0] != len(rhs):
        raise DimensionMismatchError(
            'system has {0} rows but right-hand side has {1}'.format(
                a.shape[0], len(rhs)
            )
        )
    return matvec(minimal_norm_operator(a), rhs)


def _interval_identity_minus(c: np.ndarray,
                             jacobian: IntervalMatrix) -> IntervalMatrix:
    n = c.shape[0]
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = Interval.point(1 if i == j else 0)
            for k in range(n):
                if c[i, k]:
                    acc = acc - jacobian[k, j] * c[i, k]
            row.append(acc)
        rows.append(row)
    return IntervalMatrix(rows)


def krawczyk_verify(func, x_hat: Sequence, box: IntervalVector,
                    preconditioner=None):
    """Krawczyk existence and uniqueness test for ``func(x) = 0`` in ``box``.

    ``func`` must provide ``evaluate(point) -> IntervalVector``,
    ``jacobian_enclosure(box) -> IntervalMatrix`` and
    ``jacobian_midpoint(point)``.  Interval coefficients in ``func`` are
    allowed: the verdict then holds for every member map.
    """
    x_hat = [to_fraction(x) for x in x_hat]
    n = len(box)
    if len(x_hat) != n:
        raise DimensionMismatchError('point and box dimensions differ')
    if not box.contains(x_hat):
        raise OutsideBoxError('x_hat must lie inside the box')
    if preconditioner is None:
        try:
            c = rational_inverse(func.jacobian_midpoint(x_hat))
        except RankDeficientError:
            return Inconclusive('singular Jacobian at the expansion point',
                                'krawczyk')
    else:
        c = as_rational_array(preconditioner)
        if c.shape != (n, n):
            raise DimensionMismatchError('preconditioner has wrong shape')
    fx = func.evaluate(x_hat)
    if len(fx) != n:
        raise DimensionMismatchError('map is not square')
    centre = IntervalVector.point(x_hat) - matvec(c, fx)
    spread = _interval_identity_minus(c, func.jacobian_enclosure(box))
    image = centre + spread.matvec(box - IntervalVector.point(x_hat))
    if image.is_interior_of(box):
        return VerifiedUniqueRoot(box, image)
    return Inconclusive('Krawczyk image is not inside the box interior',
                        'krawczyk')
