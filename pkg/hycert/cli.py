""":mod:`hycert.cli` --- Command line interface
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

Exit status is 0 when a system is certified (or a certificate accepted,
or a polynomial proven nonnegative), 2 when the answer is inconclusive
or a certificate is rejected and 1 on errors.

"""
import os
import re
import sys
from typing import Optional

import click
from typeguard import typechecked

from . import __version__
from . import certificate as certfile
from .exceptions import HycertError
from .expr import parse
from .interval import Interval, IntervalVector, to_fraction
from .pipeline import SafetyCertificate, reconstructed_conditions
from .store import FileCertificateStore
from .system import parse_polynomial, parse_system
from .verifier import Verifier

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2

_BOX_SIDE = re.compile(r'\[([^\[\],]+),([^\[\],]+)\]')


class RationalType(click.ParamType):
    name = 'rational'

    def convert(self, value, param, ctx):
        try:
            return to_fraction(value)
        except (TypeError, ValueError, ZeroDivisionError):
            self.fail('{0!r} is not a rational number'.format(value),
                      param, ctx)


RATIONAL = RationalType()


def parse_box(text: str) -> IntervalVector:
    """``[a,b]x[c,d]`` (or ``;`` between sides) as an interval vector.

    :raises ValueError: on malformed boxes or empty sides
    """
    compact = text.replace(' ', '')
    skeleton = _BOX_SIDE.sub('|', compact)
    if re.fullmatch(r'\|([x;]\|)*', skeleton) is None:
        raise ValueError('bad box {0!r}'.format(text))
    return IntervalVector(
        Interval(to_fraction(lo), to_fraction(hi))
        for lo, hi in _BOX_SIDE.findall(compact)
    )


def _read(path: str) -> str:
    with open(path, 'r', encoding='utf-8') as f:
        return f.read()


def _fail(e: Exception) -> None:
    click.echo('error: {0}'.format(e), err=True)
    sys.exit(EXIT_ERROR)


@click.group(help="""\
Safety certificates for interval polynomial hybrid systems

Example usage:

\b
    hycert verify tests/fixtures/example2.hs --out example2.json
    hycert check tests/fixtures/example2.hs example2.json
""")
@click.option('--debug', '-d', is_flag=True, help='Log in debug mode')
@click.option('--config', 'config_file', type=click.Path(exists=True),
              help='Python file with UPPERCASE configuration keys')
@click.option('--log-folder', type=click.Path(file_okay=False),
              help='Also write rotating log files to this folder')
@click.option('--store', type=click.Path(dir_okay=False),
              help='JSON file keeping issued certificates')
@click.version_option(__version__)
@click.pass_context
@typechecked
def cli(ctx, debug: bool, config_file: Optional[str],
        log_folder: Optional[str], store: Optional[str]):
    verifier = Verifier(
        'hycert', root_path=os.getcwd(), log_folder=log_folder,
        store=FileCertificateStore(store) if store else None
    )
    if config_file:
        verifier.config.from_pyfile(os.path.abspath(config_file))
    if debug:
        verifier.debug = True
    ctx.obj = verifier


@cli.command(help='Synthesize invariants and certify a system safe')
@click.argument('system', type=click.Path(exists=True, dir_okay=False))
@click.option('--degree', type=int, help='Template degree')
@click.option('--auto', is_flag=True,
              help='Try every degree of AUTO_DEGREES in turn')
@click.option('--epsilon', type=RATIONAL,
              help='Radius above which coefficients become parameters')
@click.option('--mult-degree', type=int, help='Multiplier degree')
@click.option('--delta', type=RATIONAL,
              help='Required gap between invariants and unsafe sets')
@click.option('--out', type=click.Path(dir_okay=False),
              help='Write the certificate to this file')
@click.pass_obj
def verify(verifier: Verifier, system: str, degree: Optional[int],
           auto: bool, epsilon, mult_degree: Optional[int], delta,
           out: Optional[str]):
    try:
        hs = parse_system(_read(system))
        options = {}
        if mult_degree is not None:
            options['mult_degree'] = mult_degree
        result = verifier.verify(hs, degree, auto, epsilon, delta, **options)
    except HycertError as e:
        _fail(e)
    if not isinstance(result, SafetyCertificate):
        click.echo('inconclusive: {0}'.format(result))
        sys.exit(EXIT_INCONCLUSIVE)
    for location, phi in result.invariants:
        click.echo('invariant {0}: {1}'.format(location, phi))
    click.echo('certified: {0} conditions'.format(len(result.witnesses)))
    if out:
        with open(out, 'w', encoding='utf-8') as f:
            certfile.dump(result, f)


@cli.command(help='Replay a certificate against a system')
@click.argument('system', type=click.Path(exists=True, dir_okay=False))
@click.argument('certificate', type=click.Path(exists=True, dir_okay=False))
@click.option('--epsilon', type=RATIONAL,
              help='Override the radius threshold of the certificate')
@click.option('--mult-degree', type=int,
              help='Multiplier degree when witnesses must be found')
@click.option('--skip-reconstructed', is_flag=True,
              help='Leave out the conditions of reconstructed transitions')
@click.pass_obj
def check(verifier: Verifier, system: str, certificate: str, epsilon,
          mult_degree: Optional[int], skip_reconstructed: bool):
    try:
        hs = parse_system(_read(system))
        cert = certfile.loads(_read(certificate), hs.variables)
        if epsilon is not None:
            cert = cert._replace(epsilon=epsilon)
        options = {}
        if mult_degree is not None:
            options['mult_degree'] = mult_degree
        if skip_reconstructed:
            verifier.config['SKIP_RECONSTRUCTED'] = True
        verdict = verifier.check(hs, cert, **options)
    except HycertError as e:
        _fail(e)
    if not verdict:
        click.echo('rejected: {0}'.format(verdict))
        sys.exit(EXIT_INCONCLUSIVE)
    click.echo('accepted: {0} conditions'.format(verdict.conditions))
    if verifier.skip_reconstructed:
        for name in reconstructed_conditions(hs):
            click.echo('unchecked (reconstructed): {0}'.format(name))


@cli.command('certify-psd',
             help='Prove an interval polynomial nonnegative')
@click.argument('polyfile', type=click.Path(exists=True, dir_okay=False))
@click.option('--tau', type=float, help='Singularity threshold')
@click.pass_obj
def certify_psd(verifier: Verifier, polyfile: str, tau: Optional[float]):
    try:
        psi = parse_polynomial(_read(polyfile))
        if tau is not None:
            verifier.config['PSD_TAU'] = tau
        result = verifier.certify_psd(psi)
    except HycertError as e:
        _fail(e)
    if not result:
        click.echo('inconclusive: {0}'.format(result))
        sys.exit(EXIT_INCONCLUSIVE)
    click.echo('certificate: {0}'.format(type(result).__name__))
    verdict = getattr(result, 'verdict', None)
    if verdict is not None:
        click.echo('verdict: {0}'.format(verdict.value))
        click.echo('lambda_min lower bound: {0:.6g}'.format(
            float(result.lambda_lower)))
        click.echo('radius spectral bound: {0:.6g}'.format(
            float(result.rho_upper)))


@cli.command(help='Polynomial enclosure of a non-polynomial expression')
@click.argument('expr')
@click.option('--domain', required=True, help='Box such as [-2,2]x[0,1]')
@click.option('--degree', type=int, help='Fit degree')
@click.option('--spacing', type=RATIONAL, help='Mesh spacing')
@click.option('--vars', 'variables', default='x',
              help='Comma separated variable names')
@click.pass_obj
def approx(verifier: Verifier, expr: str, domain: str,
           degree: Optional[int], spacing, variables: str):
    names = [v.strip() for v in variables.split(',') if v.strip()]
    try:
        box = parse_box(domain)
        if len(box) != len(names):
            raise ValueError('domain has {0} sides for {1} variables'.format(
                len(box), len(names)
            ))
    except ValueError as e:
        _fail(e)
    try:
        term = parse(expr, names)
        enclosure = verifier.approx(term, box, degree, spacing)
    except HycertError as e:
        _fail(e)
    click.echo('g: {0}'.format(enclosure.g))
    click.echo('mu: {0} ({1:.6g})'.format(enclosure.mu,
                                          float(enclosure.mu)))


def main(as_module: bool = False) -> None:
    args = sys.argv[1:]

    if as_module:
        this_module = 'hycert'
        name = 'python -m ' + this_module
        sys.argv = ['-m', this_module] + args
    else:
        name = None
    cli(args=args, prog_name=name)


if __name__ == '__main__':
    main(as_module=True)
