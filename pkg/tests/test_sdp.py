import io

import numpy as np
import pytest

from hycert.exceptions import NotExactError
from hycert.expr import parse
from hycert.interval import Interval
from hycert.poly import IPoly, InvariantTemplate, monomial_basis
from hycert.sdp import (BmiProgram, LmiProgram, SosConstraint,
                        balanced_bases, free_bases, gram_param,
                        solve_bmi_alternating, solve_lmi, sos_basis,
                        sos_decompose_numeric)
from hycert.system import parse_polynomial
from hycert.verdicts import Failure, Infeasible

X = ('x',)


def poly(text: str, variables=X) -> IPoly:
    return parse(text, variables).to_ipoly()


def test_sos_square():
    result = sos_decompose_numeric(poly('x^2 + 2*x + 1'))
    assert result.basis == monomial_basis(1, 1, X)
    assert np.allclose(result.gram, [[1, 1], [1, 1]], atol=1e-6)
    assert result.witness.residual < 1e-6


def test_sos_negative_is_infeasible():
    result = sos_decompose_numeric(poly('-x^2'))
    assert isinstance(result, Infeasible)
    assert not result


def test_sos_odd_degree_is_infeasible():
    assert isinstance(sos_decompose_numeric(poly('x')), Infeasible)


def test_sos_requires_exact_polynomial():
    with pytest.raises(NotExactError):
        sos_decompose_numeric(IPoly(X, {(2,): Interval(1, 2)}))


def test_sos_basis_prunes():
    assert sos_basis(poly('x^2')).monomials == ((1,),)
    assert len(sos_basis(poly('x^4 + 1'))) == 3


def test_example1_midpoint_gram(fixture_path):
    with open(fixture_path('example1.poly'), encoding='utf-8') as f:
        psi = parse_polynomial(f.read())
    result = sos_decompose_numeric(psi.midpoint())
    # the basis (1, x1, x2) leaves a single Gram matrix
    expected = [[0.9574, -0.9681, -0.1702],
                [-0.9681, 1.22225, -0.220325],
                [-0.1702, -0.220325, 1.16665]]
    assert np.allclose(result.gram, expected, atol=1e-6)
    assert np.linalg.eigvalsh(result.gram)[0] > 0.04


def test_lmi_program_layout():
    prog = LmiProgram()
    c = prog.add_scalars('c', 2)
    block = prog.add_block('w', 2)
    assert list(c) == [0, 1]
    assert block.count == 3
    assert block.unknown(1, 0) == block.unknown(0, 1) == 3
    assert prog.size == 5
    with pytest.raises(ValueError):
        prog.add_block('w', 1)
    with pytest.raises(ValueError):
        prog.add_equality({7: 1.0}, 0)
    values = prog.pack({'c': [1.0, 2.0]}, {'w': np.array([[3.0, 4.0],
                                                         [4.0, 5.0]])})
    assert values.tolist() == [1.0, 2.0, 3.0, 4.0, 5.0]
    scalars, blocks = prog.unpack(values)
    assert scalars['c'].tolist() == [1.0, 2.0]
    assert blocks['w'][1, 0] == 4.0


def test_lmi_dump():
    prog = LmiProgram()
    block = prog.add_block('gram', 2)
    prog.add_identity(gram_param(monomial_basis(1, 1, X), block) -
                      poly('x^2'))
    stream = io.StringIO()
    prog.dump(stream)
    text = stream.getvalue()
    assert text.startswith('# hycert lmi program\n')
    assert 'block gram 0 2' in text
    assert text.count('equality') == 3


def test_solve_lmi_trace_objective():
    prog = LmiProgram()
    block = prog.add_block('gram', 2)
    prog.add_identity(gram_param(monomial_basis(1, 1, X), block) -
                      poly('x^2 + 1'))
    witness = solve_lmi(prog, objective='trace')
    assert np.allclose(witness.blocks['gram'], np.eye(2), atol=1e-6)
    with pytest.raises(ValueError):
        solve_lmi(prog, objective='volume')


def test_balanced_bases():
    multipliers, remainder = balanced_bases(2, [2, 1], X)
    assert [len(m) for m in multipliers] == [1, 1]
    assert len(remainder) == 2
    multipliers, remainder = balanced_bases(1, [1], X, multiplier_degree=2)
    assert len(multipliers[0]) == 2
    assert len(remainder) == 3

    multipliers, remainder = balanced_bases(1, [], X, equality_degrees=[1])
    assert multipliers == []
    assert len(remainder) == 2


def test_free_bases():
    lam, = free_bases(1, [1], X)
    assert [m for m in lam] == [(0,), (1,)]
    lam, = free_bases(3, [2], X)
    assert len(lam) == 3
    lam, = free_bases(4, [1], X, multiplier_degree=0)
    assert [m for m in lam] == [(0,)]


def test_bmi_without_bilinear_terms():
    # x >= 0 |= x + 1 >= 0 with a constant multiplier
    constraint = SosConstraint('shift', poly('x + 1'), [poly('x')], 0)
    witness = solve_bmi_alternating(BmiProgram(0, [constraint]))
    assert not isinstance(witness, Failure)
    assert witness.blocks['shift/sigma0'][0, 0] == pytest.approx(1, abs=1e-3)
    assert witness.blocks['shift/sos'][0, 0] == pytest.approx(1, abs=1e-3)


def test_bmi_parametric_hypothesis_is_bilinear():
    template = InvariantTemplate(X, 1).as_param_poly()
    program = BmiProgram(2, [SosConstraint('step', poly('1'), [template])])
    assert program.bilinear_blocks == {'step/sigma0': 1}
    layout = program.layout()
    assert list(layout.blocks) == ['step/sigma0', 'step/sos']
    assert layout.size == 2 + 1 + 3


def test_bmi_fixed_parameters_build_an_lmi():
    template = InvariantTemplate(X, 1).as_param_poly()
    program = BmiProgram(2, [SosConstraint('step', poly('1'), [template])])
    prog = program.build(c=[1.0, 0.0])
    assert 'c' not in prog.scalars
    assert set(prog.blocks) == {'step/sigma0', 'step/sos'}


def test_bmi_program_rejects_duplicate_names():
    constraint = SosConstraint('same', poly('1'))
    with pytest.raises(ValueError):
        BmiProgram(0, [constraint, constraint])


def test_bmi_parametric_equality_is_bilinear():
    template = InvariantTemplate(X, 1).as_param_poly()
    constraint = SosConstraint('edge', poly('x'), (), None, [template])
    assert constraint.bilinear_free() == [0]
    program = BmiProgram(2, [constraint])
    assert program.bilinear_blocks == {}
    assert program.bilinear_free == {'edge/lambda0': 2}
    layout = program.layout()
    assert list(layout.blocks) == ['edge/sos']
    assert list(layout.scalars) == ['c', 'edge/lambda0']
    assert layout.size == 2 + 2 + 3
    prog = program.build(multipliers={'edge/lambda0': np.array([-1.0, 0.0])})
    assert set(prog.scalars) == {'c'}


def test_bmi_fixed_equality_is_linear():
    constraint = SosConstraint('edge', poly('x'), (), None, [poly('3 - x')])
    program = BmiProgram(0, [constraint])
    assert program.bilinear_free == {}
    witness = solve_bmi_alternating(program)
    assert not isinstance(witness, Failure)
    assert witness.scalars['edge/lambda0'][0] < 0


def test_bmi_alternation_over_sign_free_multiplier():
    # x - lambda * (c0 + c1 x) is SOS only with lambda nonzero
    template = InvariantTemplate(X, 1).as_param_poly()
    constraint = SosConstraint('edge', poly('x'), (), None, [template])
    witness = solve_bmi_alternating(BmiProgram(2, [constraint]))
    assert not isinstance(witness, Failure), witness
    assert witness.slack <= 1e-7
    c0, c1 = witness.c
    lam = witness.scalars['edge/lambda0']
    gram = witness.blocks['edge/sos']
    assert np.linalg.eigvalsh(gram)[0] >= -1e-6
    for x in np.linspace(-2, 2, 9):
        free = sum(v * x ** m[0]
                   for v, m in zip(lam, constraint.free_bases[0]))
        z = np.array([x ** m[0] for m in constraint.sos_basis])
        assert x - free * (c0 + c1 * x) == pytest.approx(z.dot(gram).dot(z),
                                                         abs=1e-5)
