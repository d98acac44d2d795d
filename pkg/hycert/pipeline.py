""":mod:`hycert.pipeline` --- Invariant synthesis and safety certificates
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

A family of invariants ``phi_l >= 0`` proves a hybrid system safe when

- the initial set lies inside ``phi_l0 >= 0``;
- every transition maps ``phi_l >= 0`` and its guard into
  ``phi_l' >= 0`` after the reset;
- on the location invariant, with uncertain parameters constrained to
  their ranges, the Lie derivative of ``phi_l`` along every member of
  the interval flow is at least ``lambda_l * phi_l`` for some polynomial
  ``lambda_l`` of either sign.  Along a trajectory this keeps
  ``phi_l >= phi_l(x0) * exp(int lambda_l) >= 0``, and on the boundary
  ``phi_l = 0`` it gives a nonnegative derivative;
- ``phi_l`` is negative on the unsafe set of ``l``.

Each condition is an implication obligation ``h_1 >= 0 and ... and
e_1 = 0 and ... |= target >= 0`` discharged by
:func:`~hycert.psd.certify_implication`.  Conditions built from
transitions marked ``reconstructed`` can be left out of a check and are
reported separately.

"""
import logging
from fractions import Fraction
from typing import (Any, Callable, Dict, List, Mapping, NamedTuple, Optional,
                    Sequence, Tuple, Union)

from .exceptions import HycertError
from .helpers import digest
from .interval import to_fraction
from .poly import IPoly, InvariantTemplate, ParamPoly, lie_derivative
from .psd import (ImplicationCertificate, certify_implication,
                  replay_implication)
from .rational import DENOMINATOR_SCHEDULE, gauss_newton_refine, recover_vector
from .sdp import BmiProgram, SosConstraint, solve_bmi_alternating
from .system import (DEFAULT_EPSILON, HybridSystem, classify_and_substitute,
                     midpoint_system, print_system)
from .verdicts import Accept, Failure, Inconclusive, Reject

__all__ = (
    'KINDS', 'Obligation', 'SafetyCertificate', 'certify_invariants',
    'certify_obligation', 'check_certificate', 'generate_conditions',
    'reconstructed_conditions',
    'synthesize_and_certify',
)

logger = logging.getLogger(__name__)

#: obligation kinds in the order they are generated
KINDS = ('init', 'discrete', 'continuous', 'unsafe')
#: gap kept between the template and zero on the initial and unsafe sets
#: during synthesis, so that the zero template is not a solution
SYNTHESIS_MARGIN = Fraction(1, 100)

Template = Union[IPoly, ParamPoly]
Runner = Callable[[Callable[['Obligation'], Any], Sequence['Obligation']],
                  List[Any]]


class Obligation(NamedTuple):
    kind: str
    #: location name, or ``source->target`` for a transition
    where: str
    hypotheses: Tuple[Template, ...]
    target: Template
    #: distinguishes parallel transitions between the same locations
    index: int = 0
    #: hypotheses of the form ``e = 0``, with sign-free multipliers
    equalities: Tuple[Template, ...] = ()
    #: built from data marked as reconstructed
    reconstructed: bool = False

    @property
    def name(self) -> str:
        if self.kind == 'init':
            return 'init'
        name = '{0}:{1}'.format(self.kind, self.where)
        if self.index:
            name += '#{0}'.format(self.index)
        return name


class SafetyCertificate(NamedTuple):
    invariants: Tuple[Tuple[str, IPoly], ...]
    witnesses: Tuple[Tuple[str, ImplicationCertificate], ...]
    epsilon: Fraction = DEFAULT_EPSILON
    delta: Fraction = Fraction(0)
    #: digest of the printed system the certificate was issued for
    digest: Optional[str] = None

    def invariant(self, location: str) -> IPoly:
        return dict(self.invariants)[location]

    @property
    def conditions(self) -> List[str]:
        return [name for name, _ in self.witnesses]


def system_digest(system: HybridSystem) -> str:
    return digest(print_system(system))


def _used_parameters(system: HybridSystem, field: Sequence[IPoly]):
    positions = {p.name: system.all_variables.index(p.name)
                 for p in system.parameters}
    used = set()
    for component in field:
        for monomial in component.monomials():
            used.update(name for name, k in positions.items() if monomial[k])
    return [p for p in system.parameters if p.name in used]


def generate_conditions(system: HybridSystem,
                        templates: Mapping[str, Template],
                        delta=0, init_margin=0) -> List[Obligation]:
    """Implication obligations for the invariants (or templates) given
    per location.

    The continuous obligation of ``l`` takes ``phi_l`` as an equality
    hypothesis: it holds when ``dphi - lambda * phi`` is nonnegative on
    the location invariant for some polynomial ``lambda`` of any sign.
    The unsafe obligation of a location is ``-phi - delta >= 0`` on the
    unsafe set and is omitted when the location has no unsafe set.
    """
    missing = [l.name for l in system.locations if l.name not in templates]
    if missing:
        raise ValueError('no template for location {0}'.format(missing[0]))
    delta = to_fraction(delta)
    init_margin = to_fraction(init_margin)
    obligations = [Obligation(
        'init', system.start, tuple(system.init),
        templates[system.start] - init_margin
    )]
    seen: Dict[str, int] = {}
    for transition in system.transitions:
        index = seen.get(transition.name, 0)
        seen[transition.name] = index + 1
        target = templates[transition.target].substitute(
            transition.reset_map()
        )
        obligations.append(Obligation(
            'discrete', transition.name,
            (templates[transition.source],) + tuple(transition.guard),
            target, index, reconstructed=transition.reconstructed
        ))
    for location in system.locations:
        phi = templates[location.name]
        field = system.field(location.name)
        derivative = lie_derivative(phi, field, system.variables)
        hypotheses = system.invariant(location.name) + [
            p.constraint for p in _used_parameters(system, field)
        ]
        obligations.append(Obligation(
            'continuous', location.name, tuple(hypotheses), derivative,
            equalities=(phi,)
        ))
    for location in system.locations:
        if not location.unsafe:
            continue
        obligations.append(Obligation(
            'unsafe', location.name, tuple(location.unsafe),
            -templates[location.name] - delta
        ))
    return obligations


def _sequential(func: Callable[[Obligation], Any],
                obligations: Sequence[Obligation]) -> List[Any]:
    return [func(o) for o in obligations]


def certify_obligation(obligation: Obligation,
                       mult_degree: Optional[int] = None,
                       psd_options: Optional[Mapping] = None):
    """Certificate for one exact obligation, or :class:`Inconclusive`
    tagged with the obligation name."""
    psd_options = dict(psd_options or {})
    logger.debug('certifying %s', obligation.name)
    try:
        result = certify_implication(list(obligation.hypotheses),
                                     obligation.target, mult_degree,
                                     equalities=obligation.equalities,
                                     **psd_options)
    except HycertError as e:
        return Inconclusive(str(e), obligation.name)
    if isinstance(result, Inconclusive):
        return Inconclusive(str(result), obligation.name)
    return result


def _prepare(system: HybridSystem, epsilon) -> HybridSystem:
    substituted, introduced = classify_and_substitute(system, epsilon)
    for parameter in introduced:
        logger.info('coefficient %s replaced by parameter %s',
                    parameter.range, parameter.name)
    return substituted


def certify_invariants(system: HybridSystem,
                       invariants: Mapping[str, IPoly],
                       epsilon=DEFAULT_EPSILON, delta=0,
                       mult_degree: Optional[int] = None,
                       psd_options: Optional[Mapping] = None,
                       runner: Optional[Runner] = None,
                       fingerprint: Optional[str] = None,
                       skip_reconstructed: bool = False
                       ) -> Union[SafetyCertificate, Inconclusive]:
    """Find exact witnesses for given invariants.

    Coefficients of radius greater than ``epsilon`` are turned into
    parameters first.  ``runner`` maps the per-obligation function over
    the obligations (sequentially by default).  With
    ``skip_reconstructed`` the conditions of reconstructed transitions get
    no witness.
    """
    epsilon = to_fraction(epsilon)
    delta = to_fraction(delta)
    runner = runner or _sequential
    invariants = {
        name: phi.embed(system.variables) for name, phi in invariants.items()
    }
    substituted = _prepare(system, epsilon)
    obligations = generate_conditions(substituted, invariants, delta)
    if skip_reconstructed:
        obligations = [o for o in obligations if not o.reconstructed]

    def work(obligation: Obligation):
        return certify_obligation(obligation, mult_degree, psd_options)

    results = runner(work, obligations)
    for obligation, result in zip(obligations, results):
        if isinstance(result, Inconclusive):
            logger.info('obligation %s not certified: %s',
                        obligation.name, result.reason)
            return result
    return SafetyCertificate(
        tuple((l.name, invariants[l.name]) for l in system.locations),
        tuple((o.name, r) for o, r in zip(obligations, results)),
        epsilon, delta, fingerprint or system_digest(system)
    )


def reconstructed_conditions(system: HybridSystem) -> List[str]:
    """Names of the conditions built from reconstructed transitions."""
    zero = IPoly.zero(system.variables)
    seen: Dict[str, int] = {}
    names = []
    for transition in system.transitions:
        index = seen.get(transition.name, 0)
        seen[transition.name] = index + 1
        if transition.reconstructed:
            names.append(Obligation('discrete', transition.name, (), zero,
                                    index).name)
    return names


def _templates(system: HybridSystem, degree: int
               ) -> Tuple[Dict[str, InvariantTemplate], int]:
    templates = {}
    offset = 0
    for location in system.locations:
        template = InvariantTemplate(system.variables, degree, offset)
        templates[location.name] = template
        offset += template.size
    return templates, offset


def synthesize_and_certify(system: HybridSystem, degree: int = 2,
                           epsilon=DEFAULT_EPSILON,
                           mult_degree: Optional[int] = None, delta=0,
                           margin=SYNTHESIS_MARGIN,
                           schedule: Sequence[int] = DENOMINATOR_SCHEDULE,
                           sdp_options: Optional[Mapping] = None,
                           bmi_options: Optional[Mapping] = None,
                           psd_options: Optional[Mapping] = None,
                           runner: Optional[Runner] = None,
                           fingerprint: Optional[str] = None
                           ) -> Union[SafetyCertificate, Inconclusive]:
    """Synthesize invariants of total degree ``degree`` and certify them.

    The conditions are solved numerically for the midpoint system (large
    radius coefficients kept as constrained parameters), the template
    coefficients are rounded to rationals under increasing denominator
    bounds and every candidate is handed to :func:`certify_invariants`.
    """
    epsilon = to_fraction(epsilon)
    margin = to_fraction(margin)
    options = dict(sdp_options or {})
    options.update(bmi_options or {})
    substituted = _prepare(system, epsilon)
    midpoint = midpoint_system(substituted)
    templates, count = _templates(system, degree)
    obligations = generate_conditions(
        midpoint,
        {name: t.as_param_poly() for name, t in templates.items()},
        delta=max(margin, to_fraction(delta)), init_margin=margin
    )
    program = BmiProgram(count, [
        SosConstraint(o.name, o.target, o.hypotheses, mult_degree,
                      o.equalities)
        for o in obligations
    ])
    logger.info('synthesizing degree %d invariants: %r', degree, program)
    witness = solve_bmi_alternating(program, **options)
    if isinstance(witness, Failure):
        return Inconclusive(witness.reason, 'synthesis')
    witness = gauss_newton_refine(witness, program)
    if witness.flagged:
        logger.info('refinement diverged; rounding the unrefined solution')
    last = Inconclusive('no rational candidate', 'recovery')
    for bound, c in recover_vector(witness.c, schedule):
        invariants = {name: t.instantiate(c) for name, t in templates.items()}
        if any(phi.is_zero for phi in invariants.values()):
            continue
        logger.debug('trying candidate at denominator bound %d', bound)
        result = certify_invariants(system, invariants, epsilon, delta,
                                    mult_degree, psd_options, runner,
                                    fingerprint)
        if isinstance(result, SafetyCertificate):
            logger.info('certified with denominator bound %d', bound)
            return result
        last = result
    return last


def check_certificate(system: HybridSystem, certificate: SafetyCertificate,
                      fingerprint: Optional[str] = None,
                      skip_reconstructed: bool = False
                      ) -> Union[Accept, Reject]:
    """Replay every witness of ``certificate`` against ``system`` with
    exact arithmetic only.

    With ``skip_reconstructed`` the conditions of reconstructed
    transitions need no witness, and those present are not replayed.
    """
    expected = fingerprint or system_digest(system)
    if certificate.digest is not None and certificate.digest != expected:
        return Reject('certificate was issued for another system', 'system')
    invariants = dict(certificate.invariants)
    missing = [l.name for l in system.locations if l.name not in invariants]
    if missing:
        return Reject('no invariant for location {0}'.format(missing[0]),
                      'system')
    try:
        substituted = _prepare(system, certificate.epsilon)
        obligations = generate_conditions(
            substituted,
            {name: phi.embed(system.variables)
             for name, phi in invariants.items()},
            certificate.delta
        )
    except (HycertError, ValueError) as e:
        return Reject(str(e), 'system')
    names = [name for name, _ in certificate.witnesses]
    allowed = {o.name for o in obligations}
    if skip_reconstructed:
        obligations = [o for o in obligations if not o.reconstructed]
    expected = {o.name for o in obligations}
    if len(set(names)) != len(names) or \
            not expected <= set(names) <= allowed:
        return Reject('conditions do not match the system', 'system')
    witnesses = dict(certificate.witnesses)
    for obligation in obligations:
        if not replay_implication(witnesses[obligation.name],
                                  list(obligation.hypotheses),
                                  obligation.target,
                                  obligation.equalities):
            return Reject('witness does not replay (exact identity fails)',
                          obligation.name)
    return Accept(len(obligations))
