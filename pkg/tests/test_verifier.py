import logging
from fractions import Fraction

import pytest

from hycert import InMemoryCertificateStore, Verifier
from hycert import certificate as certfile
from hycert.ctx import has_obligation_context, has_verifier_context
from hycert.exceptions import SystemSemanticError
from hycert.expr import parse
from hycert.globals import current_verifier, obligation
from hycert.interval import Interval, IntervalVector
from hycert.pipeline import Obligation, SafetyCertificate
from hycert.system import parse_polynomial, parse_system
from hycert.verdicts import Accept, Inconclusive, Reject

X = parse_polynomial('vars x\npoly x')

UNBOXED = '''\
vars x
init x >= 0

location a:
    flow x = -sqrt(x)
'''


def _obligations(count: int):
    return [Obligation('continuous', 'l{0}'.format(k), (X,), X * k)
            for k in range(count)]


def test_repr(verifier):
    assert repr(verifier) == "<Verifier {0!r} - epsilon 1/10>".format(
        verifier.name
    )
    verifier.config['EPSILON'] = '1/20'
    assert verifier.epsilon == Fraction(1, 20)


def test_logger(verifier):
    logger = verifier.logger
    assert logger.name == verifier.name
    assert not logger.propagate
    assert [type(h).__name__ for h in logger.handlers] == \
        ['DebugStreamHandler', 'ProductionStreamHandler']
    verifier.debug = True
    assert logger.getEffectiveLevel() == logging.DEBUG


def test_outside_contexts():
    assert not has_verifier_context()
    assert not has_obligation_context()
    with pytest.raises(RuntimeError) as e:
        current_verifier.name
    assert 'outside of verifier context' in str(e.value)
    with pytest.raises(RuntimeError) as e:
        obligation.name
    assert 'outside of obligation context' in str(e.value)


def test_context_teardown_refcount(verifier, mocker):
    teardown = mocker.Mock()
    verifier.teardown_verifier(teardown)
    ctx = verifier.get_context()
    with ctx:
        assert current_verifier.name == verifier.name
        with ctx:
            pass
        teardown.assert_not_called()
    teardown.assert_called_once_with(None)
    assert not has_verifier_context()


def test_teardown_sees_errors(verifier, mocker):
    teardown = mocker.Mock()
    verifier.teardown_verifier(teardown)
    error = ValueError('boom')
    with pytest.raises(ValueError):
        with verifier._running():
            raise error
    teardown.assert_called_once_with(error)


def test_run_obligations(verifier, mocker):
    calls = []
    verifier.before_obligation(lambda o: calls.append(('first', o.name)))
    verifier.before_obligation(lambda o: calls.append(('second', o.name)))
    after = mocker.Mock()
    verifier.after_obligation(after)
    obligations = _obligations(5)

    def work(o):
        assert obligation.name == o.name
        return o.target

    results = verifier.run_obligations(work, obligations)
    assert results == [o.target for o in obligations]
    assert calls[:2] == [('second', 'continuous:l0'),
                         ('first', 'continuous:l0')]
    assert len(calls) == 10
    assert after.call_count == 5
    after.assert_any_call(obligations[3], X * 3)


def test_run_obligations_reraises(verifier, mocker):
    after = mocker.Mock()
    verifier.after_obligation(after)
    log_exception = mocker.patch.object(verifier, 'log_exception')

    def work(o):
        if o.where == 'l1':
            raise KeyError(o.where)
        return Inconclusive('no', o.name)

    with pytest.raises(KeyError):
        verifier.run_obligations(work, _obligations(3))
    assert log_exception.call_count == 1
    assert after.call_count == 2


def test_prepare_keeps_polynomial_systems(verifier, example_system):
    system = example_system('example2')
    assert verifier.prepare(system) is system


def test_prepare_needs_a_box(verifier):
    with pytest.raises(SystemSemanticError) as e:
        verifier.prepare(parse_system(UNBOXED))
    assert 'location a' in str(e.value)


def test_approx(verifier):
    verifier.config['APPROX_SPACING'] = Fraction(1, 8)
    term = verifier.approx(parse('exp(x)', ('x',)),
                           IntervalVector([Interval(-1, 1)]), degree=3)
    assert term.g.degree == 3
    assert 0 < term.mu < Fraction(1, 2)


def test_certify_psd(verifier):
    assert verifier.certify_psd(X * X - X * 2 + 1)
    assert not verifier.certify_psd(X * X * X)


def test_certify_records_certificate(verifier, mocker):
    system = parse_system('''\
vars x
init (x - 3/4)^2 <= 1/16

location a:
    flow x = 1 + x^2
    unsafe (x + 2)^2 <= 1
''')
    after = mocker.Mock()
    verifier.after_obligation(after)
    result = verifier.certify(system, {'a': X})
    assert isinstance(result, SafetyCertificate), result
    assert result.conditions == ['init', 'continuous:a', 'unsafe:a']
    assert verifier.store.get(result.digest) is result
    assert after.call_count == 3
    assert verifier.check(system, result) == Accept(3)


def test_check_without_witnesses_reports_failed_condition(verifier):
    system = parse_system('''\
vars x
init x >= 1

location a:
    flow x = x
    unsafe x <= -1
''')
    store = InMemoryCertificateStore()
    verifier.store = store
    verdict = verifier.check(system, SafetyCertificate((('a', X - 2),), ()))
    assert not verdict
    assert verdict.condition == 'init'
    assert store.get_certificates() == {}


JUMP_BACK = '''\
vars x
start a
init x >= 0
init x <= 1

location a:
    flow x = -x
    unsafe x >= 5

location b:
    flow x = 1

transition a -> b:
    guard x >= 1

transition b -> a:
    reset x := 10
    reconstructed
'''


def test_check_skips_reconstructed_from_config(verifier, mocker):
    system = parse_system(JUMP_BACK)
    certificate = SafetyCertificate((('a', 3 - X), ('b', X + 10)), ())
    verdict = verifier.check(system, certificate)
    assert not verdict
    assert verdict.condition == 'discrete:b->a'

    warning = mocker.patch.object(verifier.logger, 'warning')
    verifier.config['SKIP_RECONSTRUCTED'] = True
    assert verifier.skip_reconstructed is True
    assert verifier.check(system, certificate) == Accept(5)
    warning.assert_called_with('reconstructed conditions unchecked: %s',
                               'discrete:b->a')
    assert verifier.check(system, certificate,
                          skip_reconstructed=False).condition == \
        'discrete:b->a'


@pytest.fixture
def published(fixture_path):
    def load(name: str) -> SafetyCertificate:
        with open(fixture_path(name + '_invariant.json'),
                  encoding='utf-8') as f:
            return certfile.load(f, ('x1', 'x2'))
    return load


@pytest.mark.slow
@pytest.mark.parametrize(('name', 'skip', 'conditions'), [
    ('example3', False, 3),
    ('example6', True, 4),
    ('example7', False, 3),
])
def test_check_published_invariants(verifier, example_system, published,
                                    name, skip, conditions):
    verdict = verifier.check(example_system(name), published(name),
                             skip_reconstructed=skip)
    assert verdict == Accept(conditions)


@pytest.mark.slow
@pytest.mark.parametrize(('name', 'condition'), [
    # the published l1 invariant is negative at the centre of the
    # initial disc, about -0.065 at (0.8, 0.2)
    ('example4', 'init'),
    # the l2 invariant decreases like -3/2*x2^2 on the unbounded part of
    # l1's invariant region that the guard x2 >= 1 admits
    ('example6', 'discrete:l1->l2'),
])
def test_check_published_invariants_rejected(verifier, example_system,
                                             published, name, condition):
    verdict = verifier.check(example_system(name), published(name))
    assert isinstance(verdict, Reject)
    assert verdict.condition == condition


@pytest.mark.slow
def test_verify_example2(verifier, example_system):
    system = example_system('example2')
    result = verifier.verify(system, degree=2)
    assert isinstance(result, SafetyCertificate), result
    assert result.conditions == ['init', 'continuous:l', 'unsafe:l']
    assert verifier.store.get(result.digest) is result
    assert verifier.check(system, result) == Accept(3)
    reread = certfile.loads(certfile.dumps(result), system.variables)
    assert verifier.check(system, reread) == Accept(3)
