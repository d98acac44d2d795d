from fractions import Fraction

import pytest

from hycert import certificate as certfile
from hycert.exceptions import CertificateFormatError
from hycert.interval import SymRationalMatrix
from hycert.pipeline import SafetyCertificate
from hycert.poly import MonomialVector
from hycert.psd import (ExactGram, FullRankRohn, ImplicationCertificate,
                        certify_psd, replay_implication, replay_psd)
from hycert.system import parse_polynomial

X = ('x',)


@pytest.fixture
def certificate() -> SafetyCertificate:
    x = parse_polynomial('vars x\npoly x')
    one = MonomialVector([(0,)], X)
    witness = ImplicationCertificate(
        ((one, SymRationalMatrix([[1]])),),
        x - x + 1,
        ExactGram(one, SymRationalMatrix([[1]])),
    )
    return SafetyCertificate((('a', x + 1),), (('init', witness),),
                             Fraction(1, 20), Fraction(1, 3), 'f' * 64)


def test_encode(certificate):
    doc = certfile.encode(certificate)
    assert doc['format'] == 'hycert-certificate'
    assert doc['version'] == 1
    assert doc['system'] == 'f' * 64
    assert doc['epsilon'] == '1/20'
    assert doc['delta'] == '1/3'
    assert doc['variables'] == ['x']
    assert list(doc['invariants']) == ['a']
    witness, = doc['witnesses']
    assert witness['condition'] == 'init'
    assert witness['certificate']['kind'] == 'exact-gram'
    assert witness['certificate']['gram'] == [['1']]
    assert witness['multipliers'][0]['basis'] == {
        'variables': ['x'], 'monomials': [[0]]
    }
    assert witness['free_multipliers'] == []
    assert all(c.startswith('[') and c.endswith(']')
               for _, c in witness['residual']['terms'])


def test_decode(certificate):
    text = certfile.dumps(certificate)
    decoded = certfile.loads(text)
    assert decoded.digest == certificate.digest
    assert decoded.epsilon == Fraction(1, 20)
    assert decoded.delta == Fraction(1, 3)
    assert decoded.invariant('a') == certificate.invariant('a')
    assert decoded.conditions == ['init']
    (_, witness), = decoded.witnesses
    assert isinstance(witness.certificate, ExactGram)
    assert witness.residual == certificate.witnesses[0][1].residual
    x = parse_polynomial('vars x\npoly x')
    assert replay_implication(witness, [x], x + 1)


def test_invariants_only_document():
    doc = {'format': 'hycert-certificate', 'version': 1,
           'invariants': {'a': 'x^2 - 1/2*x'}}
    decoded = certfile.decode(doc, X)
    assert decoded.witnesses == ()
    assert decoded.digest is None
    assert decoded.epsilon == Fraction(1, 10)
    assert decoded.delta == 0
    assert decoded.invariant('a') == \
        parse_polynomial('vars x\npoly x^2 - 1/2*x')


def test_full_rank_witness_replays(fixture_path):
    with open(fixture_path('example1.poly'), encoding='utf-8') as f:
        psi = parse_polynomial(f.read())
    result = certify_psd(psi)
    assert isinstance(result, FullRankRohn)
    witness = ImplicationCertificate((), psi, result)
    invariant = parse_polynomial('vars x1, x2\npoly x1^2 + x2^2')
    original = SafetyCertificate((('l', invariant),), (('init', witness),))
    decoded = certfile.loads(certfile.dumps(original), psi.variables)
    (_, replayed), = decoded.witnesses
    assert isinstance(replayed.certificate, FullRankRohn)
    assert replayed.certificate.verdict == result.verdict
    assert replayed.certificate.lambda_lower == result.lambda_lower
    assert replayed.residual == psi
    assert replay_psd(replayed.certificate, psi)


def test_dump_and_load(certificate, tmpdir):
    path = tmpdir.join('cert.json')
    with open(str(path), 'w', encoding='utf-8') as f:
        certfile.dump(certificate, f)
    assert path.read().endswith('\n')
    with open(str(path), encoding='utf-8') as f:
        assert certfile.load(f, X).conditions == ['init']


def _document(certificate, **changes):
    doc = certfile.encode(certificate)
    doc.update(changes)
    return doc


@pytest.mark.parametrize('changes, message', [
    ({'format': 'other'}, 'not a hycert-certificate document'),
    ({'version': 2}, 'unsupported version 2'),
    ({'invariants': {}}, 'certificate: no invariants'),
    ({'epsilon': 'tenth'}, 'epsilon: not a rational'),
    ({'invariants': {'a': 'x +'}}, 'invariant of a'),
    ({'invariants': {'a': 'y'}}, 'invariant of a'),
])
def test_format_errors(certificate, changes, message):
    with pytest.raises(CertificateFormatError) as e:
        certfile.decode(_document(certificate, **changes), X)
    assert message in str(e.value)


def test_witness_errors(certificate):
    doc = certfile.encode(certificate)
    doc['witnesses'][0]['certificate']['kind'] = 'magic'
    with pytest.raises(CertificateFormatError) as e:
        certfile.decode(doc, X)
    assert 'unknown certificate kind' in str(e.value)

    doc = certfile.encode(certificate)
    doc['witnesses'][0]['residual']['terms'][0][1] = '[2, 1]'
    with pytest.raises(CertificateFormatError) as e:
        certfile.decode(doc, X)
    assert 'init: empty interval' in str(e.value)

    doc = certfile.encode(certificate)
    del doc['witnesses'][0]['multipliers']
    with pytest.raises(CertificateFormatError) as e:
        certfile.decode(doc, X)
    assert "init: missing 'multipliers'" in str(e.value)


def test_not_json():
    with pytest.raises(CertificateFormatError) as e:
        certfile.loads('{not json')
    assert 'certificate is not JSON' in str(e.value)


def test_interval_strings():
    x = parse_polynomial('vars x\npoly [1/3, 1/2]*x - 2')
    doc = certfile.encode(SafetyCertificate((('a', x),), (('init', (
        ImplicationCertificate((), x, ExactGram(
            MonomialVector([(0,)], X), SymRationalMatrix([[0]])
        ))
    )),)))
    assert sorted(doc['witnesses'][0]['residual']['terms']) == \
        [[[0], '[-2, -2]'], [[1], '[1/3, 1/2]']]


def test_free_multipliers(certificate):
    x = parse_polynomial('vars x\npoly x')
    lam = parse_polynomial('vars x\npoly -1/2 + 3*x')
    (name, witness), = certificate.witnesses
    witness = witness._replace(free_multipliers=(lam,))
    doc = certfile.encode(certificate._replace(witnesses=((name, witness),)))
    encoded, = doc['witnesses'][0]['free_multipliers']
    assert encoded['variables'] == ['x']
    assert sorted(encoded['terms']) == \
        [[[0], '[-1/2, -1/2]'], [[1], '[3, 3]']]
    (_, decoded), = certfile.decode(doc, X).witnesses
    assert decoded.free_multipliers == (lam,)
    # the stored residual no longer matches once lambda * e is taken off
    assert not replay_implication(decoded, [x], x + 1, [x])
    assert not replay_implication(decoded, [x], x + 1)


def _singular_square() -> dict:
    return {
        'kind': 'singular-square',
        'basis': {'variables': ['x'], 'monomials': [[0], [1]]},
        'forms': [[0, 1]],
        'q_hat': ['1', '0', '1'],
        'indices': [1],
        'box': ['[-1/8, 1/8]'],
        'preconditioner': [['1']],
    }


@pytest.mark.parametrize('path, value, message', [
    (('residual', 'terms'), [[0, '[1, 1]']], 'not a list of exponents'),
    (('residual', 'terms'), [[[-1], '[1, 1]']], 'not a list of exponents'),
    (('residual', 'terms'), [[[0], ['1', '1']]], 'not an interval'),
    (('residual', 'terms'), [[[0]]], 'malformed terms'),
    (('residual', 'variables'), 7, 'init: '),
    (('certificate', 'basis', 'monomials'), 3, 'init: '),
    (('certificate', 'gram'), [['1', '2']], 'init: '),
    (('certificate', 'gram'), 'one', 'init: '),
])
def test_malformed_witness_fields(certificate, path, value, message):
    doc = certfile.encode(certificate)
    target = doc['witnesses'][0]
    for key in path[:-1]:
        target = target[key]
    target[path[-1]] = value
    with pytest.raises(CertificateFormatError) as e:
        certfile.decode(doc, X)
    assert message in str(e.value)


@pytest.mark.parametrize('key, value, message', [
    ('preconditioner', [['1', '2']], 'malformed preconditioner'),
    ('preconditioner', [['x']], 'not a rational'),
    ('forms', [[0, 5]], 'form refers past the basis'),
    ('forms', [['a']], 'not a list of basis positions'),
    ('indices', 'all', 'not a list of unknowns'),
    ('box', ['[1, 0]'], 'empty interval'),
])
def test_malformed_singular_certificate(certificate, key, value, message):
    doc = certfile.encode(certificate)
    psd = _singular_square()
    psd[key] = value
    doc['witnesses'][0]['certificate'] = psd
    with pytest.raises(CertificateFormatError) as e:
        certfile.decode(doc, X)
    assert message in str(e.value)
