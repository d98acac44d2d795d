from fractions import Fraction

import numpy as np
import pytest

from hycert.exceptions import RankDeficientError
from hycert.expr import parse
from hycert.interval import Interval, IntervalVector, SymRationalMatrix
from hycert.poly import IPoly, MonomialVector, PolyMap, monomial_basis
from hycert.psd import (ExactGram, FullRankRohn, ImplicationCertificate,
                        SingularSquareKrawczyk, WitnessSystem,
                        build_witness_system, certify_implication,
                        certify_psd, certify_root_square,
                        certify_root_underdetermined, reduce_to_square,
                        replay_implication, replay_psd,
                        search_underdetermined)
from hycert.system import parse_polynomial
from hycert.verdicts import Inconclusive, PsdVerdict, VerifiedUniqueRoot

X = ('x',)
Q = ('q0', 'q1', 'q2')


def poly(text: str, variables=X) -> IPoly:
    return parse(text, variables).to_ipoly()


@pytest.fixture
def example1(fixture_path):
    with open(fixture_path('example1.poly'), encoding='utf-8') as f:
        return parse_polynomial(f.read())


def test_example1_full_rank(example1):
    result = certify_psd(example1)
    assert isinstance(result, FullRankRohn)
    assert result.verdict is PsdVerdict.POSITIVE_DEFINITE
    assert 0.037 <= float(result.rho_upper) <= 0.047
    assert 0.041 <= float(result.lambda_lower) <= 0.051
    assert result.rho_upper < result.lambda_lower
    assert replay_psd(result, example1)


def test_example1_replay_rejects_other_polynomial(example1):
    result = certify_psd(example1)
    wider = example1 + IPoly(example1.variables,
                             {(0, 2): Interval(Fraction(-1, 100), 0)})
    assert not replay_psd(result, wider)


def test_exact_square():
    result = certify_psd(poly('x^2'))
    assert isinstance(result, ExactGram)
    assert result.gram == SymRationalMatrix([[1]])
    assert replay_psd(result, poly('x^2'))
    assert not replay_psd(result, poly('2*x^2'))


def test_exact_singular_gram():
    psi = poly('(x1 + x2)^2', ('x1', 'x2'))
    result = certify_psd(psi)
    assert isinstance(result, ExactGram)
    assert replay_psd(result, psi)


def test_zero_polynomial():
    assert isinstance(certify_psd(IPoly.zero(X)), ExactGram)


def test_interval_containing_negative_members():
    result = certify_psd(IPoly(X, {(2,): Interval(-1, 1)}))
    assert isinstance(result, Inconclusive)
    assert not result


def test_odd_degree():
    result = certify_psd(poly('x^3 + 1'))
    assert isinstance(result, Inconclusive)
    assert result.stage == 'sos'


def test_build_witness_system():
    ws = build_witness_system(poly('x^2'), [[0, 0], [0, 1]],
                              monomial_basis(1, 1, X))
    assert ws.forms == ((1,),)
    assert ws.monomials == ((2,),)
    assert len(ws.F) == 1
    assert list(ws.v) == [Interval.point(1)]
    assert ws.q_hat.tolist() == [1.0]
    assert ws.F.evaluate([3]) == IntervalVector.point([9])


def test_reduce_to_square_picks_pivot_columns():
    f = PolyMap([poly('q0 + 2*q2', Q), poly('q1', Q)], Q)
    ws = WitnessSystem(f, IntervalVector.point([0, 0]), np.zeros(3))
    system = reduce_to_square(ws)
    assert system.indices == (2, 1)
    assert system.G.variables == ('q2', 'q1')


def test_reduce_to_square_rank_deficient():
    f = PolyMap([poly('q1', Q[:2]), IPoly.zero(Q[:2])], Q[:2])
    ws = WitnessSystem(f, IntervalVector.point([0, 0]), np.zeros(2))
    with pytest.raises(RankDeficientError):
        reduce_to_square(ws)


def test_reduce_to_square_too_many_equations():
    f = PolyMap([poly('q0', Q[:1]), poly('q0^2', Q[:1])], Q[:1])
    ws = WitnessSystem(f, IntervalVector.point([0, 0]), np.zeros(1))
    with pytest.raises(RankDeficientError):
        reduce_to_square(ws)


def interval_square(lo, hi) -> IPoly:
    return IPoly(X, {(2,): Interval(lo, hi)})


def test_square_krawczyk():
    psi = interval_square(Fraction(99, 100), Fraction(101, 100))
    ws = build_witness_system(psi, [[1.0]], MonomialVector([(1,)], X))
    system = reduce_to_square(ws)
    box = IntervalVector([Interval(Fraction(9, 10), Fraction(11, 10))])
    root = certify_root_square(system, box)
    assert isinstance(root, VerifiedUniqueRoot)
    assert root.box == box
    certificate = certify_root_square(system, box, ws=ws)
    assert isinstance(certificate, SingularSquareKrawczyk)
    assert replay_psd(certificate, psi)

    moved = certificate._replace(
        box=IntervalVector([Interval(2, 3)])
    )
    assert not replay_psd(moved, psi)
    assert not replay_implication(ImplicationCertificate((), psi, moved),
                                  [], psi)
    widened = certificate._replace(box=IntervalVector(
        list(certificate.box) + [Interval(-1, 1)]
    ))
    assert not replay_psd(widened, psi)


def test_square_krawczyk_image_leaves_box():
    psi = interval_square(Fraction(-1, 100), Fraction(1, 100))
    ws = build_witness_system(psi, [[1.0]], MonomialVector([(1,)], X))
    box = IntervalVector([Interval(Fraction(9, 10), Fraction(11, 10))])
    result = certify_root_square(reduce_to_square(ws), box)
    assert isinstance(result, Inconclusive)


def test_underdetermined_linear():
    f = PolyMap([poly('q0 + q1', Q[:2])], Q[:2])
    ws = WitnessSystem(
        f, IntervalVector([Interval(Fraction(-1, 10), Fraction(1, 10))]),
        np.zeros(2)
    )
    result = certify_root_underdetermined(ws, Fraction(1, 5),
                                          Fraction(1, 20), (0,))
    assert isinstance(result, VerifiedUniqueRoot)
    assert not certify_root_underdetermined(ws, Fraction(1, 10),
                                            Fraction(1, 20), (0,))


def test_underdetermined_search_fails_without_root():
    f = PolyMap([poly('q0^2', Q[:1])], Q[:1])
    ws = WitnessSystem(f, IntervalVector([Interval(-1, Fraction(-1, 2))]),
                       np.ones(1))
    result = search_underdetermined(ws)
    assert isinstance(result, Inconclusive)
    assert result.stage == 'underdetermined'


def test_implication_constant_multiplier():
    x = poly('x')
    target = poly('x + 1')
    result = certify_implication([x], target, mult_degree=0)
    assert isinstance(result, ImplicationCertificate)
    (basis, gram), = result.multipliers
    assert gram == SymRationalMatrix([[1]])
    assert result.residual == poly('1')
    assert isinstance(result.certificate, ExactGram)
    assert replay_implication(result, [x], target)
    assert not replay_implication(result, [x], poly('x + 2'))
    assert not replay_implication(result, [], target)


def test_implication_on_interval():
    hypothesis = poly('1 - x^2')
    target = poly('2 - x^2')
    result = certify_implication([hypothesis], target)
    assert isinstance(result, ImplicationCertificate)
    assert replay_implication(result, [hypothesis], target)


def test_implication_without_hypotheses():
    result = certify_implication([], poly('x^2 + 1'))
    assert isinstance(result, ImplicationCertificate)
    assert result.multipliers == ()


def test_implication_cannot_prove_false_claim():
    result = certify_implication([poly('x')], poly('-1 - x'))
    assert not result


def test_implication_with_equality():
    target = poly('x')
    boundary = poly('3 - x')
    assert not certify_implication([], target)
    result = certify_implication([], target, equalities=[boundary])
    assert isinstance(result, ImplicationCertificate), result
    assert result.multipliers == ()
    lam, = result.free_multipliers
    assert lam.is_exact
    assert not lam.is_zero
    assert replay_implication(result, [], target, [boundary])
    assert not replay_implication(result, [], target)
    assert not replay_implication(result, [], target, [poly('2 - x')])
    assert not replay_implication(result, [], target, [boundary, boundary])


def test_implication_with_equality_and_hypothesis():
    # 1 - x^2 >= 0 and x = 0 |= 1 - 2x^2 + x >= 0
    hypothesis = poly('1 - x^2')
    equality = poly('x')
    target = poly('1 - 2*x^2 + x')
    result = certify_implication([hypothesis], target,
                                 equalities=[equality])
    assert isinstance(result, ImplicationCertificate), result
    assert len(result.multipliers) == 1
    assert len(result.free_multipliers) == 1
    assert replay_implication(result, [hypothesis], target, [equality])
