""":mod:`hycert.certificate` --- Certificate files
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

Certificates are JSON documents.  Rationals are written as ``"p/q"``
strings and intervals as ``"[p/q, r/s]"`` strings, so a file replays
exactly on any machine.  Invariants are stored as infix text; a file
holding only ``variables`` and ``invariants`` is valid and asks the
checker to find the witnesses itself.

"""
import json
from fractions import Fraction
from typing import IO, Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import CertificateFormatError, ExprDomainError
from .expr import parse
from .interval import Interval, IntervalMatrix, IntervalVector, \
    SymRationalMatrix, to_fraction
from .pipeline import SafetyCertificate
from .poly import IPoly, MonomialVector
from .psd import (ExactGram, FullRankRohn, ImplicationCertificate,
                  SingularSquareKrawczyk, SingularUnderdetermined)
from .verdicts import PsdVerdict

__all__ = 'FORMAT', 'VERSION', 'dump', 'dumps', 'load', 'loads'

FORMAT = 'hycert-certificate'
VERSION = 1


def _rational(value) -> str:
    value = to_fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return '{0}/{1}'.format(value.numerator, value.denominator)


def _interval(value: Interval) -> str:
    return '[{0}, {1}]'.format(_rational(value.lo), _rational(value.hi))


def _encode_poly(poly: IPoly) -> Dict[str, Any]:
    return {
        'variables': list(poly.variables),
        'terms': [[list(m), _interval(c)] for m, c in poly.items()],
    }


def _encode_basis(basis: MonomialVector) -> Dict[str, Any]:
    return {
        'variables': list(basis.variables),
        'monomials': [list(m) for m in basis.monomials],
    }


def _encode_matrix(matrix: SymRationalMatrix) -> List[List[str]]:
    return [[_rational(x) for x in row] for row in matrix.entries]


def _encode_psd(cert) -> Dict[str, Any]:
    if isinstance(cert, ExactGram):
        return {'kind': 'exact-gram', 'basis': _encode_basis(cert.basis),
                'gram': _encode_matrix(cert.gram)}
    if isinstance(cert, FullRankRohn):
        return {
            'kind': 'full-rank-rohn',
            'basis': _encode_basis(cert.basis),
            'center': _encode_matrix(cert.center),
            'gram': [[_interval(x) for x in row] for row in cert.gram],
            'lambda_lower': _rational(cert.lambda_lower),
            'rho_upper': _rational(cert.rho_upper),
            'verdict': cert.verdict.value,
        }
    common = {
        'basis': _encode_basis(cert.basis),
        'forms': [list(f) for f in cert.forms],
        'q_hat': [_rational(q) for q in cert.q_hat],
        'indices': list(cert.indices),
    }
    if isinstance(cert, SingularSquareKrawczyk):
        common.update(
            kind='singular-square',
            box=[_interval(x) for x in cert.box],
            preconditioner=[[_rational(x) for x in row]
                            for row in cert.preconditioner],
        )
        return common
    if isinstance(cert, SingularUnderdetermined):
        common.update(
            kind='singular-underdetermined',
            r1=_rational(cert.r1), r2=_rational(cert.r2),
            lipschitz=_rational(cert.lipschitz),
            square_check=cert.square_check,
        )
        return common
    raise TypeError('cannot encode {0!r}'.format(cert))


def _encode_witness(name: str, witness: ImplicationCertificate
                    ) -> Dict[str, Any]:
    return {
        'condition': name,
        'multipliers': [{'basis': _encode_basis(basis),
                         'gram': _encode_matrix(gram)}
                        for basis, gram in witness.multipliers],
        'free_multipliers': [_encode_poly(lam)
                             for lam in witness.free_multipliers],
        'residual': _encode_poly(witness.residual),
        'certificate': _encode_psd(witness.certificate),
    }


def encode(certificate: SafetyCertificate) -> Dict[str, Any]:
    variables: Sequence[str] = ()
    for _, phi in certificate.invariants:
        variables = phi.variables
        break
    return {
        'format': FORMAT,
        'version': VERSION,
        'system': certificate.digest,
        'epsilon': _rational(certificate.epsilon),
        'delta': _rational(certificate.delta),
        'variables': list(variables),
        'invariants': {name: phi.render()
                       for name, phi in certificate.invariants},
        'witnesses': [_encode_witness(name, witness)
                      for name, witness in certificate.witnesses],
    }


def _field(doc: Dict[str, Any], key: str, where: str):
    try:
        return doc[key]
    except (KeyError, TypeError):
        raise CertificateFormatError('{0}: missing {1!r}'.format(where, key))


def _decode_rational(value, where: str) -> Fraction:
    try:
        return to_fraction(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise CertificateFormatError('{0}: not a rational: {1!r}'.format(
            where, value
        ))


def _decode_interval(value, where: str) -> Interval:
    text = value.strip() if isinstance(value, str) else ''
    sides = text[1:-1].split(',')
    if not text.startswith('[') or not text.endswith(']') or len(sides) != 2:
        raise CertificateFormatError('{0}: not an interval: {1!r}'.format(
            where, value
        ))
    lo, hi = (_decode_rational(side.strip(), where) for side in sides)
    if lo > hi:
        raise CertificateFormatError('{0}: empty interval'.format(where))
    return Interval(lo, hi)


def _decode_indices(value, where: str, what: str) -> Tuple[int, ...]:
    if not isinstance(value, list) or not all(
            isinstance(k, int) and not isinstance(k, bool) and k >= 0
            for k in value):
        raise CertificateFormatError('{0}: not a list of {1}: {2!r}'.format(
            where, what, value
        ))
    return tuple(value)


def _decode_poly(doc, where: str) -> IPoly:
    variables = _field(doc, 'variables', where)
    terms = _field(doc, 'terms', where)
    if not isinstance(terms, list) or \
            not all(isinstance(t, list) and len(t) == 2 for t in terms):
        raise CertificateFormatError('{0}: malformed terms'.format(where))
    try:
        return IPoly(variables, {
            _decode_indices(m, where, 'exponents'): _decode_interval(c, where)
            for m, c in terms
        })
    except CertificateFormatError:
        raise
    except (TypeError, ValueError) as e:
        raise CertificateFormatError('{0}: {1}'.format(where, e))


def _decode_basis(doc, where: str) -> MonomialVector:
    try:
        return MonomialVector(_field(doc, 'monomials', where),
                              _field(doc, 'variables', where))
    except (TypeError, ValueError) as e:
        raise CertificateFormatError('{0}: {1}'.format(where, e))


def _decode_matrix(rows, where: str) -> SymRationalMatrix:
    try:
        return SymRationalMatrix([[_decode_rational(x, where) for x in row]
                                  for row in rows])
    except CertificateFormatError:
        raise
    except (TypeError, ValueError, IndexError) as e:
        raise CertificateFormatError('{0}: {1}'.format(where, e))


def _decode_psd(doc, where: str):
    kind = _field(doc, 'kind', where)
    basis = _decode_basis(_field(doc, 'basis', where), where)
    if kind == 'exact-gram':
        return ExactGram(basis, _decode_matrix(_field(doc, 'gram', where),
                                               where))
    if kind == 'full-rank-rohn':
        try:
            verdict = PsdVerdict(_field(doc, 'verdict', where))
        except ValueError:
            raise CertificateFormatError('{0}: unknown verdict'.format(where))
        return FullRankRohn(
            basis,
            _decode_matrix(_field(doc, 'center', where), where),
            IntervalMatrix([[_decode_interval(x, where) for x in row]
                            for row in _field(doc, 'gram', where)]),
            _decode_rational(_field(doc, 'lambda_lower', where), where),
            _decode_rational(_field(doc, 'rho_upper', where), where),
            verdict,
        )
    forms = _field(doc, 'forms', where)
    if not isinstance(forms, list):
        raise CertificateFormatError('{0}: malformed forms'.format(where))
    forms = tuple(_decode_indices(f, where, 'basis positions') for f in forms)
    if any(k >= len(basis) for f in forms for k in f):
        raise CertificateFormatError(
            '{0}: form refers past the basis'.format(where)
        )
    q_hat = tuple(_decode_rational(q, where)
                  for q in _field(doc, 'q_hat', where))
    indices = _decode_indices(_field(doc, 'indices', where), where,
                              'unknowns')
    if kind == 'singular-square':
        rows = _field(doc, 'preconditioner', where)
        try:
            preconditioner = np.array(
                [[_decode_rational(x, where) for x in row] for row in rows],
                dtype=object
            ).reshape(len(indices), len(indices))
        except CertificateFormatError:
            raise
        except (TypeError, ValueError) as e:
            raise CertificateFormatError(
                '{0}: malformed preconditioner: {1}'.format(where, e)
            )
        return SingularSquareKrawczyk(
            basis, forms, q_hat, indices,
            IntervalVector(_decode_interval(x, where)
                           for x in _field(doc, 'box', where)),
            preconditioner,
        )
    if kind == 'singular-underdetermined':
        return SingularUnderdetermined(
            basis, forms, q_hat, indices,
            _decode_rational(_field(doc, 'r1', where), where),
            _decode_rational(_field(doc, 'r2', where), where),
            _decode_rational(_field(doc, 'lipschitz', where), where),
            doc.get('square_check'),
        )
    raise CertificateFormatError('{0}: unknown certificate kind {1!r}'.format(
        where, kind
    ))


def _decode_witness(doc) -> ImplicationCertificate:
    where = _field(doc, 'condition', 'witness')
    try:
        multipliers = tuple(
            (_decode_basis(_field(m, 'basis', where), where),
             _decode_matrix(_field(m, 'gram', where), where))
            for m in _field(doc, 'multipliers', where)
        )
        free = tuple(_decode_poly(lam, where)
                     for lam in doc.get('free_multipliers', ()))
        return ImplicationCertificate(
            multipliers,
            _decode_poly(_field(doc, 'residual', where), where),
            _decode_psd(_field(doc, 'certificate', where), where),
            free,
        )
    except TypeError as e:
        raise CertificateFormatError('{0}: {1}'.format(where, e))


def _decode_invariant(text: str, variables: Sequence[str],
                      location: str) -> IPoly:
    try:
        return parse(text, variables).to_ipoly()
    except ExprDomainError as e:
        raise CertificateFormatError(
            'invariant of {0}: {1}'.format(location, e)
        )


def decode(doc: Dict[str, Any],
           variables: Optional[Sequence[str]] = None) -> SafetyCertificate:
    """Build a certificate from a parsed document.

    :param variables: state variables used to read the invariants;
                      defaults to the document's ``variables``
    :raises CertificateFormatError: on any malformed field
    """
    if not isinstance(doc, dict) or doc.get('format') != FORMAT:
        raise CertificateFormatError('not a {0} document'.format(FORMAT))
    if doc.get('version') != VERSION:
        raise CertificateFormatError('unsupported version {0!r}'.format(
            doc.get('version')
        ))
    if variables is None:
        variables = _field(doc, 'variables', 'certificate')
    invariants = _field(doc, 'invariants', 'certificate')
    if not isinstance(invariants, dict) or not invariants:
        raise CertificateFormatError('certificate: no invariants')
    witnesses = []
    for item in doc.get('witnesses', ()):
        witnesses.append((_field(item, 'condition', 'witness'),
                          _decode_witness(item)))
    return SafetyCertificate(
        tuple((name, _decode_invariant(text, variables, name))
              for name, text in invariants.items()),
        tuple(witnesses),
        _decode_rational(doc.get('epsilon', '1/10'), 'epsilon'),
        _decode_rational(doc.get('delta', '0'), 'delta'),
        doc.get('system'),
    )


def dumps(certificate: SafetyCertificate) -> str:
    return json.dumps(encode(certificate), indent=2)


def dump(certificate: SafetyCertificate, stream: IO[str]) -> None:
    json.dump(encode(certificate), stream, indent=2)
    stream.write('\n')


def loads(text: str, variables: Optional[Sequence[str]] = None
          ) -> SafetyCertificate:
    try:
        doc = json.loads(text)
    except ValueError as e:
        raise CertificateFormatError('certificate is not JSON: {0}'.format(e))
    return decode(doc, variables)


def load(stream: IO[str], variables: Optional[Sequence[str]] = None
         ) -> SafetyCertificate:
    return loads(stream.read(), variables)
