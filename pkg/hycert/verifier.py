""":mod:`hycert.verifier` --- Safety verifier application object
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

"""
import contextlib
import os.path
import pkgutil
import sys
from fractions import Fraction
from typing import (Any, Callable, Iterator, List, Mapping, Optional,
                    Sequence, Union)

from gevent import Greenlet
from gevent.pool import Pool
from typeguard import typechecked
from werkzeug.datastructures import ImmutableDict

from .approx import EnclosedTerm, enclose_field, enclose_term
from .config import DEFAULTS, Config, ConfigAttribute, to_degrees
from .ctx import ObligationContext, VerifierContext, has_obligation_context
from .exceptions import SystemSemanticError
from .expr import Expr, FieldComponent
from .globals import obligation as current_obligation
from .helpers import locked_cached_property, reraise
from .interval import IntervalVector, to_fraction
from .logging import _Logger, create_logger
from .pipeline import (Obligation, SafetyCertificate, certify_invariants,
                       check_certificate, reconstructed_conditions,
                       synthesize_and_certify, system_digest)
from .poly import IPoly
from .psd import certify_psd
from .store import CertificateStore, InMemoryCertificateStore
from .system import HybridSystem
from .verdicts import Accept, Inconclusive, Reject

# a singleton sentinel value for parameter defaults
_sentinel = object()


def _get_root_path(import_name: str) -> str:
    """
    Returns the path to a package or cwd if that cannot be found
    """
    mod = sys.modules.get(import_name)
    if mod is not None and getattr(mod, '__file__', None):
        return os.path.dirname(os.path.abspath(mod.__file__))

    loader = pkgutil.get_loader(import_name)
    if loader is None or import_name == '__main__':
        return os.getcwd()

    filepath: str = loader.get_filename(import_name)
    return os.path.dirname(os.path.abspath(filepath))


def _optional_int(value) -> Optional[int]:
    return None if value is None else int(value)


class Verifier(object):
    #: The debug flag
    #:
    #: This attribute can also be configured from the config with the ``DEBUG``
    #: configuration key.  Defaults to ``False``.
    debug: ConfigAttribute = ConfigAttribute('DEBUG')
    #: Coefficients of larger radius become constrained parameters.
    epsilon: ConfigAttribute = ConfigAttribute('EPSILON',
                                               get_converter=to_fraction)
    #: Gap required between the invariants and the unsafe sets.
    delta: ConfigAttribute = ConfigAttribute('DELTA',
                                             get_converter=to_fraction)
    template_degree: ConfigAttribute = ConfigAttribute('TEMPLATE_DEGREE',
                                                       get_converter=int)
    auto_degrees: ConfigAttribute = ConfigAttribute('AUTO_DEGREES',
                                                    get_converter=to_degrees)
    #: ``None`` balances each multiplier against its target.
    multiplier_degree: ConfigAttribute = ConfigAttribute(
        'MULTIPLIER_DEGREE', get_converter=_optional_int
    )
    synthesis_margin: ConfigAttribute = ConfigAttribute(
        'SYNTHESIS_MARGIN', get_converter=to_fraction
    )
    pool_size: ConfigAttribute = ConfigAttribute('OBLIGATION_POOL_SIZE',
                                                 get_converter=int)
    #: Leave the conditions of reconstructed transitions unchecked.
    skip_reconstructed: ConfigAttribute = ConfigAttribute(
        'SKIP_RECONSTRUCTED', get_converter=bool
    )
    #: Default configuration parameters.
    __default_config: ImmutableDict = DEFAULTS
    #: The name of the package or module that this verifier belongs to.
    #: Do not change this once it is set by the constructor.
    import_name: str = None
    #: Absolute path to the package on the filesystem.
    root_path: str = None

    def __init__(self,
                 import_name: str,
                 root_path: Optional[str] = None,
                 log_folder: Optional[str] = None,
                 store: Optional[CertificateStore] = None) -> None:
        self.import_name = import_name
        if root_path is None:
            root_path = _get_root_path(import_name)
        self.root_path = root_path
        self.log_folder = log_folder

        #: The configuration directory as :class:`Config`.
        self.config = Config(self.root_path, self.__default_config)

        #: Issued certificates by system digest.
        self.store = store
        if self.store is None:
            self.store = InMemoryCertificateStore()

        #: Functions called before an obligation is certified.
        self.__before_obligation_funcs = []
        #: Functions called with each obligation and its result.
        self.__after_obligation_funcs = []
        #: Functions called when the verifier context is destroyed.
        self.__teardown_verifier_funcs = []

    @locked_cached_property
    def name(self) -> str:
        if self.import_name == '__main__':
            fn = getattr(sys.modules['__main__'], '__file__', None)
            if fn is None:
                return '__main__'
            return os.path.splitext(os.path.basename(fn))[0]
        return self.import_name

    @locked_cached_property
    def logger(self) -> _Logger:
        return create_logger(self)

    @property
    def sdp_options(self) -> Mapping[str, Any]:
        return self.config.get_namespace('SDP_')

    @property
    def bmi_options(self) -> Mapping[str, Any]:
        return self.config.get_namespace('BMI_')

    @property
    def psd_options(self) -> Mapping[str, Any]:
        options = self.config.get_namespace('PSD_')
        options['sdp_options'] = self.sdp_options
        return options

    @property
    def approx_options(self) -> Mapping[str, Any]:
        options = self.config.get_namespace('APPROX_')
        options['spacing'] = self.config.rational('APPROX_SPACING')
        return options

    @typechecked
    def before_obligation(self, func: Callable[[Obligation], None]
                          ) -> Callable:
        self.__before_obligation_funcs.append(func)
        return func

    @typechecked
    def after_obligation(self, func: Callable[[Obligation, Any], None]
                         ) -> Callable:
        self.__after_obligation_funcs.append(func)
        return func

    @typechecked
    def teardown_verifier(self, func: Callable[[Any], None]) -> Callable:
        self.__teardown_verifier_funcs.append(func)
        return func

    def do_before_obligation(self, obligation: Obligation) -> None:
        for func in reversed(self.__before_obligation_funcs):
            func(obligation)

    def do_after_obligation(self, obligation: Obligation, result) -> None:
        for func in reversed(self.__after_obligation_funcs):
            func(obligation, result)

    def do_teardown_verifier(self, exc=_sentinel) -> None:
        if exc is _sentinel:
            exc = sys.exc_info()[1]
        for func in reversed(self.__teardown_verifier_funcs):
            func(exc)

    def handle_exception(self, e) -> None:
        exc_type, exc_value, tb = sys.exc_info()
        self.log_exception((exc_type, exc_value, tb))

    def log_exception(self, exc_info) -> None:
        if has_obligation_context():
            self.logger.error(
                'Exception on {0}'.format(current_obligation.name),
                exc_info=exc_info
            )
        else:
            self.logger.error('Exception', exc_info=exc_info)

    def get_context(self) -> VerifierContext:
        return VerifierContext(self)

    @contextlib.contextmanager
    def _running(self) -> Iterator[VerifierContext]:
        ctx = self.get_context()
        error = None
        ctx.push()
        try:
            yield ctx
        except Exception as e:
            error = e
            self.handle_exception(e)
            raise
        finally:
            ctx.pop(error)

    def run_obligations(self, func: Callable[[Obligation], Any],
                        obligations: Sequence[Obligation]) -> List[Any]:
        """Apply ``func`` to every obligation on the worker pool and
        return the results in order."""
        pool = Pool(self.pool_size)
        workers = [ObligationWorker(self, o, func) for o in obligations]
        for worker in workers:
            pool.start(worker)
        pool.join()
        results = []
        for worker in workers:
            if worker.error is not None:
                reraise(worker.error)
            results.append(worker.value)
        return results

    def prepare(self, system: HybridSystem) -> HybridSystem:
        """Enclose every non-polynomial flow on its location box."""
        if system.is_polynomial:
            return system
        options = self.approx_options
        locations = []
        for location in system.locations:
            if location.is_polynomial:
                locations.append(location)
                continue
            box = system.box(location.name)
            if box is None:
                raise SystemSemanticError(
                    'location {0} has non-polynomial flow but no box; bound '
                    'every variable with "x in [lo, hi]"'.format(location.name)
                )
            domain = IntervalVector(
                list(box) + [p.range for p in system.parameters]
            )
            field = enclose_field(location.flow, domain, **options)
            self.logger.info('enclosed the flow of %s: %s', location.name,
                             ', '.join(str(f) for f in field))
            locations.append(location._replace(
                flow=tuple(FieldComponent(f) for f in field)
            ))
        return system._replace(locations=tuple(locations))

    def _pipeline_options(self, epsilon, delta, mult_degree):
        return dict(
            epsilon=self.epsilon if epsilon is None else to_fraction(epsilon),
            delta=self.delta if delta is None else to_fraction(delta),
            mult_degree=self.multiplier_degree if mult_degree is _sentinel
            else mult_degree,
            psd_options=self.psd_options,
            runner=self.run_obligations,
        )

    def verify(self, system: HybridSystem, degree: Optional[int] = None,
               auto: bool = False, epsilon=None, delta=None,
               mult_degree=_sentinel
               ) -> Union[SafetyCertificate, Inconclusive]:
        """Synthesize and certify invariants for ``system``."""
        fingerprint = system_digest(system)
        if auto:
            degrees = self.auto_degrees
        else:
            degrees = (self.template_degree if degree is None else degree,)
        options = self._pipeline_options(epsilon, delta, mult_degree)
        result: Union[SafetyCertificate, Inconclusive] = \
            Inconclusive('no template degree tried', 'synthesis')
        with self._running():
            prepared = self.prepare(system)
            for d in degrees:
                self.logger.info('verifying with degree %d templates', d)
                result = synthesize_and_certify(
                    prepared, d, margin=self.synthesis_margin,
                    schedule=self.config.schedule(),
                    sdp_options=self.sdp_options,
                    bmi_options=self.bmi_options,
                    fingerprint=fingerprint, **options
                )
                if isinstance(result, SafetyCertificate):
                    self.store.put(fingerprint, result)
                    return result
                self.logger.info('degree %d inconclusive: %s', d, result)
        return result

    def _skipping(self, system: HybridSystem,
                  skip_reconstructed: Optional[bool]) -> bool:
        if skip_reconstructed is None:
            skip_reconstructed = self.skip_reconstructed
        if skip_reconstructed:
            skipped = reconstructed_conditions(system)
            if skipped:
                self.logger.warning('reconstructed conditions unchecked: %s',
                                    ', '.join(skipped))
        return skip_reconstructed

    def certify(self, system: HybridSystem,
                invariants: Mapping[str, IPoly], epsilon=None, delta=None,
                mult_degree=_sentinel, skip_reconstructed=None
                ) -> Union[SafetyCertificate, Inconclusive]:
        """Find witnesses for given invariants."""
        fingerprint = system_digest(system)
        options = self._pipeline_options(epsilon, delta, mult_degree)
        skip = self._skipping(system, skip_reconstructed)
        with self._running():
            result = certify_invariants(self.prepare(system), invariants,
                                        fingerprint=fingerprint,
                                        skip_reconstructed=skip, **options)
        if isinstance(result, SafetyCertificate):
            self.store.put(fingerprint, result)
        return result

    def check(self, system: HybridSystem, certificate: SafetyCertificate,
              mult_degree=_sentinel, skip_reconstructed=None
              ) -> Union[Accept, Reject]:
        """Replay ``certificate``.  A certificate holding invariants only
        is completed by :meth:`certify` first.  With ``skip_reconstructed``
        the conditions of reconstructed transitions are left out."""
        skip = self._skipping(system, skip_reconstructed)
        if not certificate.witnesses:
            result = self.certify(system, dict(certificate.invariants),
                                  certificate.epsilon, certificate.delta,
                                  mult_degree, skip)
            if isinstance(result, Inconclusive):
                return Reject(result.reason, result.stage)
            certificate = result
        with self._running():
            verdict = check_certificate(self.prepare(system), certificate,
                                        system_digest(system), skip)
        self.logger.info('certificate check: %s', verdict)
        return verdict

    def certify_psd(self, psi: IPoly):
        return certify_psd(psi, **self.psd_options)

    def approx(self, e: Expr, box: IntervalVector, degree: Optional[int] = None,
               spacing=None) -> EnclosedTerm:
        options = self.approx_options
        if degree is not None:
            options['degree'] = degree
        if spacing is not None:
            options['spacing'] = to_fraction(spacing)
        return enclose_term(e, box, **options)

    def __repr__(self) -> str:
        return '<{0!s} {1!r} - epsilon {2!s}>'.format(
            self.__class__.__name__,
            self.name,
            self.epsilon
        )


class ObligationWorker(Greenlet):
    """Certifies one obligation inside its own context."""

    def __init__(self, verifier: Verifier, obligation: Obligation,
                 func: Callable[[Obligation], Any]) -> None:
        super().__init__()
        self.verifier = verifier
        self.obligation = obligation
        self.func = func
        self.error = None

    def _run(self):
        logger = self.verifier.logger
        try:
            with ObligationContext(self.verifier, self.obligation) as ctx:
                logger.debug('obligation %s started', self.obligation.name)
                try:
                    ctx.result = self.func(self.obligation)
                except Exception as e:
                    self.verifier.handle_exception(e)
                    raise
                if isinstance(ctx.result, Inconclusive):
                    logger.info('obligation %s inconclusive: %s',
                                self.obligation.name, ctx.result.reason)
                else:
                    logger.info('obligation %s certified',
                                self.obligation.name)
        except Exception:
            # re-raised by the caller of the pool
            self.error = sys.exc_info()
            return None
        return ctx.result
