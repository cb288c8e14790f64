"""
The command-line frontend.

    quantlqg synth --scenario plant.json --bank bank.json --out run
    quantlqg schedule --out run --emit-lp
    quantlqg simulate --out run --trials 10000 --seed 7
    quantlqg verify
    quantlqg export-milp --out run
"""

import argparse
import dataclasses
import logging
import os
import sys

from . import artifacts
from .errors import (
    MalformedFieldError,
    MissingArtifactError,
    QuantLQGError,
    ScenarioValidationError,
    TrialError,
)
from .milp import export_milp
from .selection import plan_schedule
from .settings import load_settings
from .simulate import SimulationConfig, compare_schedules
from .synthesis import solve_riccati
from .innovation import propagate_statistics
from .quantizer import build_moment_tables
from .verify import default_instance, run_checks

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_MISSING = 3
EXIT_TRIAL = 4
EXIT_VERIFY = 5

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def _manifest(args, command, scenario, bank, parameters, seed=None):
    return artifacts.RunManifest(
        command=command,
        scenario=str(scenario) if scenario else '',
        bank=str(bank) if bank else '',
        parameters=parameters,
        version=artifacts.tool_version(),
        master_seed=seed,
        out=str(args.out),
    )


def _path(args, name):
    return os.path.join(args.out, name)


def _load_pipeline(args, settings):
    """Reads the model, bank and offline tables written by synth."""
    model = artifacts.load_scenario(
        _path(args, artifacts.SCENARIO_FILE), settings)
    bank = artifacts.load_bank(_path(args, artifacts.BANK_FILE))
    riccati = artifacts.riccati_from_dict(
        artifacts.read_json(_path(args, artifacts.RICCATI_FILE)))
    stats = artifacts.stats_from_dict(
        artifacts.read_json(_path(args, artifacts.STATS_FILE)), model)
    moments = artifacts.moments_from_dict(
        artifacts.read_json(_path(args, artifacts.MOMENTS_FILE)), bank)
    return model, bank, riccati, stats, moments


def cmd_synth(args, settings):
    """Validates the inputs and writes the offline tables."""
    model = artifacts.load_scenario(args.scenario, settings)
    if args.horizon_override is not None:
        model = model.with_horizon(args.horizon_override)
    bank = artifacts.load_bank(args.bank)
    if args.with_null:
        bank = bank.with_null_quantizer()

    riccati = solve_riccati(model, settings)
    stats = propagate_statistics(model, settings)
    moments = build_moment_tables(bank, stats, settings)

    os.makedirs(args.out, exist_ok=True)
    manifest = _manifest(args, 'synth', args.scenario, args.bank, {
        'horizon_override': args.horizon_override,
        'with_null': args.with_null,
    })
    artifacts.write_json(
        _path(args, artifacts.SCENARIO_FILE), model.to_dict(), manifest)
    artifacts.write_json(
        _path(args, artifacts.BANK_FILE), bank.to_dict(), manifest)
    artifacts.write_json(
        _path(args, artifacts.RICCATI_FILE),
        artifacts.riccati_to_dict(riccati), manifest)
    artifacts.write_json(
        _path(args, artifacts.STATS_FILE),
        artifacts.stats_to_dict(stats), manifest)
    artifacts.write_json(
        _path(args, artifacts.MOMENTS_FILE),
        artifacts.moments_to_dict(bank, moments), manifest)
    artifacts.write_json(
        _path(args, 'manifest_synth.json'), manifest.to_dict(), manifest)
    logger.info('Offline tables written to %s', args.out)
    return EXIT_OK


def cmd_schedule(args, settings):
    """Writes the optimal schedule and, on request, the LP export."""
    model, bank, riccati, stats, moments = _load_pipeline(args, settings)
    schedule = plan_schedule(model, bank, riccati, stats, moments)
    manifest = _manifest(
        args, 'schedule', _path(args, artifacts.SCENARIO_FILE),
        _path(args, artifacts.BANK_FILE), {'emit_lp': args.emit_lp})

    header, rows = artifacts.schedule_rows(schedule, bank)
    artifacts.write_csv(
        _path(args, artifacts.SCHEDULE_FILE), header, rows, manifest)
    header, rows = artifacts.selection_table_rows(schedule, bank)
    artifacts.write_csv(
        _path(args, artifacts.TABLE_FILE), header, rows, manifest)
    artifacts.write_json(_path(args, 'schedule.json'), {
        'theta_star': list(schedule.labels(bank)),
        'C0': schedule.C0,
        'J_star': schedule.J_star,
        'price_part': schedule.price_part,
    }, manifest)
    if args.emit_lp:
        text = export_milp(schedule.c, bank.labels)
        artifacts.write_lp(_path(args, artifacts.LP_FILE), text, manifest)
    return EXIT_OK


def cmd_export_milp(args, settings):
    """Writes only the LP export of the selection program."""
    model, bank, riccati, stats, moments = _load_pipeline(args, settings)
    schedule = plan_schedule(model, bank, riccati, stats, moments)
    manifest = _manifest(
        args, 'export-milp', _path(args, artifacts.SCENARIO_FILE),
        _path(args, artifacts.BANK_FILE), {})
    text = export_milp(schedule.c, bank.labels)
    artifacts.write_lp(_path(args, artifacts.LP_FILE), text, manifest)
    return EXIT_OK


def _user_schedule(args, bank, model):
    if args.constant is not None:
        try:
            i = bank.position(_label(args.constant))
        except KeyError as e:
            raise MalformedFieldError(
                'constant',
                f'Bank has no quantizer labelled {args.constant};'
            ) from e
        return tuple([i] * model.T)
    if args.schedule_file is not None:
        return artifacts.read_schedule(args.schedule_file, bank, model.T)
    return None


def _label(text):
    try:
        return int(text)
    except ValueError:
        return text


def cmd_simulate(args, settings):
    """Runs the Monte Carlo estimate and writes report.json."""
    model, bank, riccati, stats, moments = _load_pipeline(args, settings)
    if args.workers is not None:
        settings = settings.replace(simulation=dataclasses.replace(
            settings.simulation, workers=args.workers))
    theta = _user_schedule(args, bank, model)
    config = SimulationConfig(
        trials=args.trials,
        master_seed=args.seed,
        schedule=theta,
        record_trajectories=args.record,
        record_limit=args.record_limit,
    )
    manifest = _manifest(
        args, 'simulate', _path(args, artifacts.SCENARIO_FILE),
        _path(args, artifacts.BANK_FILE), {
            'trials': args.trials,
            'schedule_file': args.schedule_file,
            'constant': args.constant,
            'record': args.record,
            'record_limit': args.record_limit,
        }, seed=args.seed)

    schedules = {'simulated': theta}
    if theta is not None:
        schedules['optimal'] = None
    reports = compare_schedules(
        model, bank, schedules, config, riccati, stats, moments, settings)
    report = reports['simulated']

    content = report.to_dict()
    content['schedule'] = [bank.labels[i] for i in report.schedule]
    sigmas = settings.simulation.acceptance_sigmas
    content['acceptance_sigmas'] = sigmas
    content['within_band'] = report.within(sigmas)
    if 'optimal' in reports:
        optimal = reports['optimal']
        content['optimal'] = {
            'theoretical': optimal.theoretical,
            'empirical_mean': optimal.empirical_mean,
            'empirical_stderr': optimal.empirical_stderr,
            'schedule': [bank.labels[i] for i in optimal.schedule],
        }
        content['optimal_dominates'] = (
            optimal.theoretical <= report.theoretical
        )
    artifacts.write_json(_path(args, artifacts.REPORT_FILE), content,
                         manifest)

    for k, record in enumerate(report.trajectories):
        header, rows = artifacts.trajectory_rows(record, model, bank)
        artifacts.write_csv(
            _path(args, f'trajectory_{k}.csv'), header, rows, manifest)
    return EXIT_OK


def cmd_verify(args, settings):
    """Runs the oracle suite; exit 5 names the first failing check."""
    if args.scenario and args.bank:
        model = artifacts.load_scenario(args.scenario, settings)
        if args.horizon_override is not None:
            model = model.with_horizon(args.horizon_override)
        bank = artifacts.load_bank(args.bank)
    else:
        model, bank = default_instance(args.seed)
    results = run_checks(
        model, bank, settings, seed=args.seed, trials=args.trials,
        brute_force_cap=args.brute_force_cap, inject_fault=args.inject_fault)
    for result in results:
        print(result)
    failed = [r for r in results if r.failed]
    if failed:
        logger.error('Verification failed at check "%s"', failed[0].name)
        return EXIT_VERIFY
    return EXIT_OK


COMMANDS = {
    'synth': cmd_synth,
    'schedule': cmd_schedule,
    'simulate': cmd_simulate,
    'verify': cmd_verify,
    'export-milp': cmd_export_milp,
}


def build_parser():
    """Returns the argument parser of every subcommand."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='YAML file with settings overrides')
    common.add_argument('--out', default='out', help='artifact directory')
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true',
                           help='log debug messages')
    verbosity.add_argument('-q', '--quiet', action='store_true',
                           help='log warnings and errors only')

    parser = argparse.ArgumentParser(
        prog='quantlqg',
        description='Quantized-feedback LQG synthesis and simulation.'
    )
    commands = parser.add_subparsers(dest='command', required=True)

    synth = commands.add_parser('synth', parents=[common],
                                help='build the offline tables')
    synth.add_argument('--scenario', required=True, help='scenario file')
    synth.add_argument('--bank', required=True, help='quantizer-bank file')
    synth.add_argument('--horizon-override', type=int, metavar='T',
                       help='replace the scenario horizon')
    synth.add_argument('--with-null', action='store_true',
                       help='add the null quantizer to the bank')

    schedule = commands.add_parser('schedule', parents=[common],
                                   help='compute the optimal schedule')
    schedule.add_argument('--emit-lp', action='store_true',
                          help='also write milp.lp')

    commands.add_parser('export-milp', parents=[common],
                        help='write the selection program as milp.lp')

    simulate = commands.add_parser('simulate', parents=[common],
                                   help='run the Monte Carlo estimate')
    simulate.add_argument('--trials', type=int, default=10000, metavar='N')
    simulate.add_argument('--seed', type=int, default=0, metavar='U64')
    source = simulate.add_mutually_exclusive_group()
    source.add_argument('--schedule-file', metavar='CSV',
                        help='schedule with a theta column of labels')
    source.add_argument('--constant', metavar='LABEL',
                        help='use one quantizer at every stage')
    simulate.add_argument('--record', action='store_true',
                          help='write trajectory CSV files')
    simulate.add_argument('--record-limit', type=int, default=10)
    simulate.add_argument('--workers', type=int,
                          help='override the worker count')

    verify = commands.add_parser('verify', parents=[common],
                                 help='run the oracle suite')
    verify.add_argument('--scenario', help='scenario file')
    verify.add_argument('--bank', help='quantizer-bank file')
    verify.add_argument('--horizon-override', type=int, metavar='T')
    verify.add_argument('--seed', type=int, default=0, metavar='U64')
    verify.add_argument('--trials', type=int, default=10000, metavar='N')
    verify.add_argument('--brute-force-cap', type=int, metavar='COUNT')
    verify.add_argument('--inject-fault', choices=['ntilde'],
                        help='corrupt a table to exercise detection')
    return parser


def main(argv=None):
    """Runs one subcommand and returns its exit code."""
    args = build_parser().parse_args(argv)
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT)

    try:
        settings = load_settings(args.config)
        return COMMANDS[args.command](args, settings)
    except ScenarioValidationError as e:
        for error in e.errors:
            logger.error('%s: %s', error.name, error)
        return EXIT_VALIDATION
    except MissingArtifactError as e:
        logger.error('%s', e)
        return EXIT_MISSING
    except TrialError as e:
        logger.error('Trial %d failed: %s', e.trial, e.cause)
        return EXIT_TRIAL
    except (QuantLQGError, ValueError) as e:
        logger.error('%s', e)
        return EXIT_VALIDATION


def run():
    """Console-script entry point."""
    sys.exit(main())
