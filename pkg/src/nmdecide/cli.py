# SPDX-FileCopyrightText: 2026 nmdecide developers
# SPDX-License-Identifier: EUPL-1.2

"""
Command-line interface module.

Every subcommand writes a :class:`~.RunReport` to ``--out`` (standard output by default). Exit codes are 0 on
success, 1 on usage or data errors and 2 when a relaxation does not converge.
"""

import argparse
import logging
import pathlib
import sys
import time

import numpy as np

from . import __version__
from .chain_analysis import analyze, decode
from .config import Settings
from .criteria import CriterionKind, CriterionSpec, InitKind, constraint, decompose, evaluate
from .errors import NmdecideError, NoAbsorbingStateError, NonConvergenceError, UnabsorbableStateError
from .io import parse_samples, read_odds, read_order, read_scenario, read_vector, write_samples, write_vector
from .optimizer import (block_relaxation, calibrate_lambda_marginal, calibrate_lambda_nonmarginal, conditional_updates,
                        step_down_ordered, step_up_ordered)
from .posterior_core import ConditioningMode, HypothesisPriorOdds, PosteriorSource, rank_by_bayes_factor
from .report import RunReport
from .simulator import generate, multiplicity_probe

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NONCONVERGENCE = 2

FILE_PREFIX = 'file:'


class _ArgumentParser(argparse.ArgumentParser):
    """
    Argument parser exiting with :data:`EXIT_ERROR` on usage errors.
    """
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f'{self.prog}: error: {message}\n')


def _file_choice(choices: tuple[str, ...]):
    """
    Returns an argparse type accepting one of ``choices`` or ``file:PATH``.
    """
    def parse(value: str):
        if value in choices:
            return value
        if value.startswith(FILE_PREFIX) and len(value) > len(FILE_PREFIX):
            return pathlib.Path(value[len(FILE_PREFIX):])
        raise argparse.ArgumentTypeError(f'expected one of {", ".join(choices)} or file:PATH, got "{value}"')
    return parse


def _odds_file(value: str) -> pathlib.Path:
    if value.startswith(FILE_PREFIX) and len(value) > len(FILE_PREFIX):
        return pathlib.Path(value[len(FILE_PREFIX):])
    raise argparse.ArgumentTypeError(f'expected file:PATH, got "{value}"')


def _probe_sizes(value: str) -> tuple[int, int]:
    try:
        m_small, m_large = (int(token) for token in value.split(','))
    except ValueError as error:
        raise argparse.ArgumentTypeError(f'expected m_small,m_large, got "{value}"') from error
    return m_small, m_large


def _positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError as error:
        raise argparse.ArgumentTypeError(f'expected an integer, got "{value}"') from error
    if number < 1:
        raise argparse.ArgumentTypeError(f'expected a positive integer, got {number}')
    return number


def _add_criterion_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--samples', type=pathlib.Path, required=True, help='CSV file of 0/1 posterior samples')
    parser.add_argument('--criterion', choices=('marginal', 'general', 'ordered'), default='general',
                        help='decision criterion')
    parser.add_argument('--order', type=_file_choice(('bf', 'index')), default='bf',
                        help='working order of the ordered criterion: bf, index or file:PATH')
    parser.add_argument('--sweep-order', type=_file_choice(('index', 'reverse', 'random')), default='index',
                        help='coordinate update order: index, reverse, random or file:PATH')
    parser.add_argument('--prior-odds', type=_odds_file, default=None,
                        help='file:PATH with the prior odds Pr(H0)/Pr(H1), one per line (default all 1)')
    parser.add_argument('--seed', type=int, default=0, help='seed of the random sweep order')


def parse_args(args: list[str]) -> argparse.Namespace:
    """
    Parses arguments passed to the CLI. Arguments must start with the first "real" arg, i.e. without executable.

    Args:
        args: :obj:`list` of :obj:`str` to parse as command-line arguments.

    Returns:
        :obj:`argparse.Namespace` with the parsed arguments, ``command`` naming the subcommand.
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--threads', type=_positive_int, default=None, help='worker threads (default: all cores)')
    common.add_argument('--out', default='-', help='report path, - for standard output')
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='count', default=0, help='more log output, repeatable')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='only log errors')

    parser = _ArgumentParser(description='Non-marginal Bayesian multiple testing decisions', prog='nmdecide',
                             formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    subparsers = parser.add_subparsers(dest='command', required=True, parser_class=_ArgumentParser)

    decide = subparsers.add_parser('decide', parents=[common], help='compute decisions for a sample file',
                                   formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_criterion_arguments(decide)
    strength = decide.add_mutually_exclusive_group(required=True)
    strength.add_argument('--lambda', dest='lam', type=float, help='Lagrange multiplier')
    strength.add_argument('--alpha', type=float, help='calibrate lambda to keep the expected error below alpha')
    decide.add_argument('--init', type=_file_choice(('ones', 'zeros')), default='ones',
                        help='initial decisions: ones, zeros or file:PATH')
    decide.add_argument('--procedure', choices=('relax', 'step-down', 'step-up'), default='relax',
                        help='procedure of the ordered criterion')
    decide.add_argument('--max-sweeps', type=_positive_int, default=None, help='sweep cap of a relaxation run')
    decide.add_argument('--truth', type=pathlib.Path, default=None, help='truth vector file for a decomposition')

    chain = subparsers.add_parser('chain', parents=[common], help='analyze the sweep map as an absorbing chain',
                                  formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_criterion_arguments(chain)
    chain.add_argument('--lambda', dest='lam', type=float, required=True, help='Lagrange multiplier')
    chain.add_argument('--max-m-states', type=_positive_int, default=None,
                       help='largest m whose 2**m states are enumerated')

    simulate = subparsers.add_parser('simulate', parents=[common], help='generate a conjugate Gaussian problem',
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    simulate.add_argument('--config', type=pathlib.Path, required=True, help='scenario file')
    simulate.add_argument('--out-samples', type=pathlib.Path, required=True,
                          help='sample file to write, the truth vector goes to <out-samples>.truth')
    simulate.add_argument('--probe', type=_probe_sizes, default=None, help='multiplicity probe m_small,m_large')

    decomposition = subparsers.add_parser('decompose', parents=[common], help='count errors against the truth',
                                          formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    decomposition.add_argument('--decisions', type=pathlib.Path, required=True, help='decision vector file')
    decomposition.add_argument('--truth', type=pathlib.Path, required=True, help='truth vector file')
    decomposition.add_argument('--mode', choices=('general', 'ordered'), default='general',
                               help='conditioning set of the z indicators')

    return parser.parse_args(args=args)


def _status(message: str, options: argparse.Namespace) -> None:
    if not options.quiet:
        print(message, file=sys.stderr)


def _configure(options: argparse.Namespace) -> None:
    if options.quiet:
        level = logging.ERROR
    else:
        level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(options.verbose, 2)]
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s', stream=sys.stderr)
    Settings().update(threads=options.threads, max_sweeps=getattr(options, 'max_sweeps', None),
                      chain_max_m=getattr(options, 'max_m_states', None))


def _resolve_order(choice, source: PosteriorSource, odds: HypothesisPriorOdds) -> list[int]:
    m = source.n_hypotheses
    if choice == 'bf':
        return rank_by_bayes_factor(source, odds)
    if choice == 'index':
        return list(range(m))
    return read_order(choice, m)


def _resolve_sweep(choice, m: int, seed: int) -> list[int]:
    if choice == 'index':
        return list(range(m))
    if choice == 'reverse':
        return list(reversed(range(m)))
    if choice == 'random':
        return [int(index) for index in np.random.default_rng(seed).permutation(m)]
    return read_order(choice, m)


def _resolve_init(choice, m: int):
    if choice == 'ones':
        return InitKind.ONES
    if choice == 'zeros':
        return InitKind.ZEROS
    return read_vector(choice, m)


def _load_problem(options: argparse.Namespace, report: RunReport) -> tuple[PosteriorSource, CriterionSpec]:
    """
    Reads the samples and builds the criterion from the shared flags. ``spec.lam`` is the flag value or, when
    ``--alpha`` is used, a placeholder replaced after calibration.
    """
    source = parse_samples(options.samples)
    m = source.n_hypotheses
    odds = HypothesisPriorOdds.uniform(m) if options.prior_odds is None else read_odds(options.prior_odds, m)
    order = _resolve_order(options.order, source, odds)
    sweep = _resolve_sweep(options.sweep_order, m, options.seed)
    init = _resolve_init(getattr(options, 'init', 'ones'), m)
    kind = CriterionKind.from_name(options.criterion)
    lam = options.lam if options.lam is not None else 1.0
    spec = CriterionSpec(kind, lam, order=order, sweep=sweep, init=init)
    report.inputs.update({
        'samples': options.samples.as_posix(),
        'm': m,
        'n_samples': source.n_samples,
        'names': source.names,
        'criterion': kind.value,
        'order': [index + 1 for index in order],
        'sweep_order': [index + 1 for index in sweep],
        'prior_odds': [odds[i] for i in range(m)],
        'seed': options.seed,
    })
    return source, spec


def _attach_trace(report: RunReport, trace) -> None:
    report.trace = trace.as_dict()
    report.sweeps = trace.sweeps


def run_decide(options: argparse.Namespace) -> RunReport:
    """
    Runs the ``decide`` subcommand: calibrates λ if ``--alpha`` is given, then computes the decisions.

    Raises:
        NonConvergenceError: the relaxation cycled or hit the sweep cap; the partial report is attached as
                             ``error.report``.
    """
    report = RunReport('decide')
    source, spec = _load_problem(options, report)
    m = source.n_hypotheses
    report.inputs.update({'procedure': options.procedure, 'alpha': options.alpha, 'lambda': options.lam})

    if options.alpha is not None:
        if spec.kind == CriterionKind.MARGINAL:
            calibration = calibrate_lambda_marginal(source.marginals(), options.alpha)
        else:
            calibration = calibrate_lambda_nonmarginal(source, options.alpha, spec.kind, spec=spec)
        report.calibration = calibration.as_dict()
        if calibration.decisions is None:
            report.status = 'nonconvergence'
            error = NonConvergenceError('no lambda of the calibration grid converged')
            error.report = report
            raise error
        spec = spec.replace(lam=calibration.lam)
        if not calibration.feasible:
            logger.warning('alpha=%g is not attainable on the grid, using lambda=%g', options.alpha, calibration.lam)
    report.spec = spec.as_dict()
    report.lam = spec.lam

    try:
        if options.procedure == 'relax':
            decisions, trace = block_relaxation(source, spec)
        elif spec.kind != CriterionKind.ORDERED:
            raise NmdecideError(f'--procedure {options.procedure} requires --criterion ordered')
        elif options.procedure == 'step-down':
            decisions, trace = step_down_ordered(source, spec.lam, spec.working_order(m))
        else:
            decisions, trace = step_up_ordered(source, spec.lam, spec.working_order(m))
    except NonConvergenceError as error:
        if error.trace is not None:
            _attach_trace(report, error.trace)
        report.status = 'nonconvergence'
        error.report = report
        raise
    _attach_trace(report, trace)
    report.decisions = [int(value) for value in decisions]
    report.objective = evaluate(source, spec, decisions)
    report.expected_error = constraint(source, spec, decisions)
    report.details['conditional'] = conditional_updates(source, spec, decisions)

    if options.truth is not None:
        truth = read_vector(options.truth, m)
        mode = ConditioningMode.ORDERED if spec.kind == CriterionKind.ORDERED else ConditioningMode.GENERAL
        report.inputs['truth'] = options.truth.as_posix()
        report.decomposition = decompose(decisions, truth, mode).as_dict()
    return report


def run_chain(options: argparse.Namespace) -> RunReport:
    """
    Runs the ``chain`` subcommand: enumerates the sweep map and verifies ``t = N 1`` against simulation.

    Raises:
        UnabsorbableStateError: the sweep map cycles; the partial report is attached as ``error.report``.
        NoAbsorbingStateError: the sweep map has no fixed point; the partial report is attached as ``error.report``.
    """
    report = RunReport('chain')
    options.init = 'ones'
    source, spec = _load_problem(options, report)
    report.inputs['max_m_states'] = Settings().chain_max_m
    report.spec = spec.as_dict()
    report.lam = spec.lam
    try:
        analysis = analyze(source, spec)
    except (UnabsorbableStateError, NoAbsorbingStateError) as error:
        report.status = 'nonconvergence'
        states = getattr(error, 'states', None) or []
        report.details['cycle'] = [decode(state, source.n_hypotheses).tolist() for state in states]
        error.report = report
        raise
    report.chain = analysis.as_dict()
    return report


def run_simulate(options: argparse.Namespace) -> RunReport:
    """
    Runs the ``simulate`` subcommand: writes the sample file, the truth vector sidecar and the optional probe.
    """
    scenario = read_scenario(options.config)
    report = RunReport('simulate', {'config': options.config.as_posix(), 'm': scenario.m,
                                    'scenario': scenario.as_dict()})
    problem = generate(scenario)
    truth_path = pathlib.Path(f'{options.out_samples.as_posix()}.truth')
    write_samples(options.out_samples, problem.samples)
    write_vector(truth_path, problem.truth)
    report.details.update({
        'samples': options.out_samples.as_posix(),
        'truth_file': truth_path.as_posix(),
        'truth': problem.truth.tolist(),
        'data': problem.data.tolist(),
        'posterior_mean': problem.posterior_mean.tolist(),
        'analytic_marginals': problem.analytic.tolist(),
        'sample_marginals': problem.samples.marginals().tolist(),
    })
    if options.probe is not None:
        report.details['probe'] = multiplicity_probe(scenario, *options.probe).as_dict()
    return report


def run_decompose(options: argparse.Namespace) -> RunReport:
    """
    Runs the ``decompose`` subcommand: counts the eight error terms and checks that they sum to ``m``.
    """
    decisions = read_vector(options.decisions)
    truth = read_vector(options.truth)
    mode = ConditioningMode(options.mode)
    decomposition = decompose(decisions, truth, mode)
    m = decisions.shape[0]
    report = RunReport('decompose', {'decisions': options.decisions.as_posix(), 'truth': options.truth.as_posix(),
                                     'mode': mode.value, 'm': m})
    report.decisions = decisions.tolist()
    report.decomposition = decomposition.as_dict()
    report.details.update({
        'partition_holds': decomposition.total == m,
        'true_positives': decomposition.true_positives,
        'controlled_error': decomposition.controlled_error,
    })
    return report


COMMANDS = {
    'decide': run_decide,
    'chain': run_chain,
    'simulate': run_simulate,
    'decompose': run_decompose,
}


def main(args: list[str] = None) -> int:
    """
    Runs the command-line interface. Arguments must start with the first "real" arg, i.e. without executable.

    Args:
        args: :obj:`list` of :obj:`str` to parse as command-line arguments. If :obj:`None` then :obj:`sys.argv` is used
              (excluding the first entry which is the executable).

    Returns:
        Exit code.
    """
    if args is None:
        args = sys.argv[1:]
    try:
        cli_options = parse_args(args)
    except SystemExit as error:
        return EXIT_OK if error.code is None else int(error.code)
    _configure(cli_options)

    start = time.perf_counter()
    return_code = EXIT_OK
    try:
        report = COMMANDS[cli_options.command](cli_options)
    except (NonConvergenceError, UnabsorbableStateError, NoAbsorbingStateError) as error:
        print(f'nmdecide: {error}', file=sys.stderr)
        report = getattr(error, 'report', None)
        return_code = EXIT_NONCONVERGENCE
        if report is None:
            return return_code
    except (NmdecideError, OSError) as error:
        print(f'nmdecide: {error}', file=sys.stderr)
        return EXIT_ERROR
    report.wall_clock = time.perf_counter() - start

    try:
        report.write(cli_options.out)
    except OSError as error:
        print(f'nmdecide: cannot write report: {error}', file=sys.stderr)
        return EXIT_ERROR
    if return_code == EXIT_OK:
        _status(f'{cli_options.command}: done in {report.wall_clock:.3f} s', cli_options)
    return return_code
