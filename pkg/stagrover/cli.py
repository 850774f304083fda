"""Command line interface: schedules, scans and diagnostics as CSV files.

Every subcommand writes one CSV file (`--out`) and a `<out>.manifest.json`
    file recording the resolved parameters. Exit codes:
    0 success, 2 divergence, 3 configuration error, 4 I/O error.
"""

# Standard library modules
import argparse
import dataclasses
import logging
import os
import sys
from typing import Any, Dict, List, Optional

# Third party modules
import numpy as np

# Project modules
import stagrover
from stagrover.config import DEFAULT_SETTINGS, Settings
from stagrover.counterdiabatic import error_functionals, integrate_functional
from stagrover.dynamics import log_grid, oracle_compare, scan_tf
from stagrover.errors import (EXIT_OUTPUT, EXIT_SUCCESS, ConfigurationError,
                              OutputError, StaError)
from stagrover.inverse import (Invariant, default_plan, divergence_map,
                               endpoint_commutators, evolve_inverse,
                               load_plan)
from stagrover.model import build_effective
from stagrover.schedules import FAMILIES, ScheduleSpec, load_tabulated
from stagrover.utilities import csv_write, json_read, json_write

BUILT_IN_FAMILIES = ['linear-naive', 'qab-linear', 'cd-linear',
                     'qab-quadratic', 'cd-quadratic']
DEFAULT_ARGUMENTS = {
    'family': 'cd-linear',
    'families': BUILT_IN_FAMILIES,
    'n': 64,
    'tf': 10.0,
    'samples': 1001,
    'tf_min': 1.0,
    'tf_max': 200.0,
    'points': 20,
    'workers': 1,
    'sizes': [2, 4, 10, 16, 64],
    'times': [0.5, 1.0, 2.0, 5.0, 10.0, 20.0],
}
LOG_FORMAT = "%(asctime)s [%(module)-10s %(levelname)-8s]     %(message)s"
_installed_handlers: List[logging.Handler] = []


class CliParser(argparse.ArgumentParser):
    """Argument parser reporting usage errors as configuration errors."""

    def error(self, message):
        raise ConfigurationError(f"{self.prog}: {message}")


def positive_float(value):
    try:
        number = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"`{value}` is not a number")
    if not number > 0:
        raise argparse.ArgumentTypeError(f"`{value}` is not positive")
    return number


def problem_size(value):
    try:
        size = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"`{value}` is not an integer")
    if size < 2:
        raise argparse.ArgumentTypeError(f"N must be at least 2, got {size}")
    return size


def family_name(value):
    if value not in FAMILIES:
        raise argparse.ArgumentTypeError(
            f"unknown family `{value}` (choose among "
            f"{', '.join(sorted(FAMILIES))})"
        )
    return value


def get_cli_arguments(argv=None) -> Dict[str, Any]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-o', '--out', type=str, required=True,
                        help='CSV file to write')
    common.add_argument('-c', '--config', type=str, default=None,
                        help='JSON file of default values for these flags')
    common.add_argument('-s', '--settings', type=str, default=None,
                        help='JSON file of numerical settings')
    common.add_argument('-l', '--log_file', type=argparse.FileType('a'),
                        default=None,
                        help='File path to store full log')
    common.add_argument('-e', '--error_log_file',
                        type=argparse.FileType('a'), default=None,
                        help='File path to store only error log')
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true',
                           help='Log debug messages')
    verbosity.add_argument('-q', '--quiet', action='store_true',
                           help='Log only warnings and errors')
    common.add_argument('--n', type=problem_size, default=None,
                        help='Number of search states N')
    common.add_argument('--tf', type=positive_float, default=None,
                        help='Run time t_f')
    common.add_argument('--samples', type=int, default=None,
                        help='Number of uniform time samples')

    cli_parser = CliParser(
        prog='stagrover',
        description='Engineer and evaluate annealing schedules of the '
                    'adiabatic Grover search.',
        allow_abbrev=False,
    )
    cli_parser.add_argument('--version', action='version',
                            version=f"%(prog)s {stagrover.__version__}")
    subparsers = cli_parser.add_subparsers(dest='command', required=True)

    schedule = subparsers.add_parser(
        'schedule', parents=[common], allow_abbrev=False,
        help='Tabulate A, B and the two-level quantities of a schedule'
    )
    schedule.add_argument('--family', type=family_name, default=None,
                          help='Schedule family')
    schedule.add_argument('--plan', type=str, default=None,
                          help='Plan file (inverse-engineered family)')
    schedule.add_argument('--table', type=str, default=None,
                          help='`t,A,B` CSV file (custom-tabulated family)')

    scan = subparsers.add_parser(
        'scan', parents=[common], allow_abbrev=False,
        help='Final ground-state probability over a log grid of t_f'
    )
    scan.add_argument('--families', type=family_name, nargs='+',
                      default=None, help='Schedule families to scan')
    scan.add_argument('--tf_min', type=positive_float, default=None,
                      help='Smallest run time of the grid')
    scan.add_argument('--tf_max', type=positive_float, default=None,
                      help='Largest run time of the grid')
    scan.add_argument('--points', type=int, default=None,
                      help='Number of grid points')
    scan.add_argument('--with_cd', action='store_true',
                      help='Add the counterdiabatic term')
    scan.add_argument('--steps', type=int, default=None,
                      help='Runge-Kutta steps (default: resolved per run)')
    scan.add_argument('--workers', type=int, default=None,
                      help='Worker processes')

    functionals = subparsers.add_parser(
        'functionals', parents=[common], allow_abbrev=False,
        help='Error functionals along a schedule and their actions'
    )
    functionals.add_argument('--family', type=family_name, default=None,
                             help='Schedule family')
    functionals.add_argument('--table', type=str, default=None,
                             help='`t,A,B` CSV file (custom-tabulated)')

    invariant = subparsers.add_parser(
        'invariant', parents=[common], allow_abbrev=False,
        help='Inverse-engineered schedule and invariant diagnostics'
    )
    invariant.add_argument('--plan', type=str, default=None,
                           help='Plan file (default plan otherwise)')
    invariant.add_argument('--steps', type=int, default=None,
                           help='Runge-Kutta steps of the final evolution')
    invariant.add_argument('--map', action='store_true',
                           help='Map divergence of the default plan over '
                                '--sizes x --times instead')
    invariant.add_argument('--sizes', type=problem_size, nargs='+',
                           default=None, help='Values of N of the map')
    invariant.add_argument('--times', type=positive_float, nargs='+',
                           default=None, help='Values of t_f of the map')

    oracle = subparsers.add_parser(
        'oracle-check', parents=[common], allow_abbrev=False,
        help='Compare two-level and dense N-dimensional evolutions'
    )
    oracle.add_argument('--families', type=family_name, nargs='+',
                        default=None, help='Schedule families to check')
    oracle.add_argument('--steps', type=int, default=None,
                        help='Runge-Kutta steps (default: resolved per run)')

    cli_parsed_arguments = vars(cli_parser.parse_args(argv))
    for key in cli_parsed_arguments:
        if key.endswith('_file') and cli_parsed_arguments[key]:
            cli_parsed_arguments[key].close()
            cli_parsed_arguments[key] = cli_parsed_arguments[key].name
    return cli_parsed_arguments


def set_loggers(log_file: Optional[str] = None,
                error_log_file: Optional[str] = None,
                verbose: bool = False, quiet: bool = False):
    root_logger = logging.getLogger()
    for handler in _installed_handlers:
        root_logger.removeHandler(handler)
        handler.close()
    _installed_handlers.clear()
    root_logger.setLevel(logging.DEBUG)
    log_formatter = logging.Formatter(LOG_FORMAT, style='%')

    if log_file:
        file_handler = logging.FileHandler(log_file, mode="a",
                                           encoding="utf-8")
        file_handler.setFormatter(log_formatter)
        file_handler.setLevel(logging.DEBUG)
        _installed_handlers.append(file_handler)

    if error_log_file:
        file_handler = logging.FileHandler(error_log_file, mode="a",
                                           encoding="utf-8")
        file_handler.setFormatter(log_formatter)
        file_handler.setLevel(logging.ERROR)
        _installed_handlers.append(file_handler)

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(log_formatter)
    console_handler.setLevel(
        logging.DEBUG if verbose else logging.WARNING if quiet
        else logging.INFO
    )
    _installed_handlers.append(console_handler)
    for handler in _installed_handlers:
        root_logger.addHandler(handler)


@dataclasses.dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce an output file."""

    command: str
    parameters: Dict[str, Any]
    seedless: bool = True
    tool_version: str = stagrover.__version__

    def store(self, out: str):
        """Write the manifest next to the `out` CSV file."""
        file_ = f"{out}.manifest.json"
        try:
            json_write(dataclasses.asdict(self), file_)
        except OSError as e:
            raise OutputError(f"Could not write `{file_}`: {e}")
        logging.info(f"Written manifest `{file_}`")


def write_rows(rows, out: str, header=None):
    try:
        csv_write(rows, out, header=header)
    except OSError as e:
        raise OutputError(f"Could not write `{out}`: {e}")


def build_spec(family: str, size: int, final_time: float,
               plan: Optional[str] = None, table: Optional[str] = None,
               settings: Settings = DEFAULT_SETTINGS) -> ScheduleSpec:
    """Return the ScheduleSpec of `family`, loading plan or table files."""
    if family == 'custom-tabulated':
        if table is None:
            raise ConfigurationError("custom-tabulated requires --table")
        return load_tabulated(table, size)
    if family == 'inverse-engineered':
        if plan is None:
            bloch_plan = default_plan(size, final_time, settings=settings)
        else:
            bloch_plan = load_plan(plan, size, final_time, settings=settings)
        return bloch_plan.to_spec()
    return ScheduleSpec(family=family, size=size, final_time=final_time,
                        quadrature_points=settings.quadrature_points,
                        settings=settings)


def cmd_schedule(family: str, size: int, final_time: float, samples: int,
                 out: str, plan: Optional[str] = None,
                 table: Optional[str] = None,
                 settings: Settings = DEFAULT_SETTINGS):
    """Write `t,A,B,dA,dB,Delta,theta,dtheta` on `samples` uniform times."""
    spec = build_spec(family, size, final_time, plan=plan, table=table,
                      settings=settings)
    t, point = spec.schedule.sample(samples)
    hamiltonian = build_effective(spec.size, point,
                                  gap_floor=settings.gap_floor)
    columns = dict(t=t, A=point.A, B=point.B, dA=point.dA, dB=point.dB,
                   Delta=hamiltonian.gap, theta=hamiltonian.theta,
                   dtheta=hamiltonian.dtheta)
    rows = [dict(zip(columns, values)) for values in zip(*columns.values())]
    write_rows(rows, out)
    return rows


def cmd_scan(families: List[str], size: int, tf_min: float, tf_max: float,
             points: int, out: str, with_cd: bool = False,
             steps: Optional[int] = None, workers: int = 1,
             settings: Settings = DEFAULT_SETTINGS):
    """Write `family,N,t_f,fidelity` over a log grid of run times."""
    grid = log_grid(tf_min, tf_max, points)
    rows = []
    for family in families:
        result = scan_tf(family, size, grid, with_cd=with_cd, steps=steps,
                         workers=workers,
                         quadrature_points=settings.quadrature_points,
                         settings=settings)
        rows.extend(result.rows())
        reached = result.first_reaching(0.9)
        logging.info(
            f"{family}: fidelity 0.9 "
            + (f"first reached at t_f={reached:.6g}" if reached is not None
               else "never reached on this grid")
        )
    write_rows(rows, out)
    return rows


def cmd_functionals(family: str, size: int, final_time: float, samples: int,
                    out: str, table: Optional[str] = None,
                    settings: Settings = DEFAULT_SETTINGS):
    """Write `t,L_qab,L_cd,part_offset,part_gap,part_direction` rows.

    A final row with `action` in the `t` column holds both action integrals.
    """
    spec = build_spec(family, size, final_time, table=table,
                      settings=settings)
    samples += 1 - samples % 2
    t, point = spec.schedule.sample(samples)
    values = error_functionals(spec.size, point,
                               gap_floor=settings.gap_floor)
    rows = [
        dict(t=time, L_qab=l_qab, L_cd=l_cd, part_offset=offset,
             part_gap=gap, part_direction=direction)
        for time, l_qab, l_cd, offset, gap, direction in zip(
            t, values.l_qab, values.l_cd, *values.parts
        )
    ]
    rows.append(dict(
        t='action',
        L_qab=integrate_functional(spec.size, point, t, 'qab'),
        L_cd=integrate_functional(spec.size, point, t, 'cd'),
    ))
    write_rows(rows, out)
    return rows


def cmd_invariant(size: int, final_time: float, samples: int, out: str,
                  plan: Optional[str] = None, steps: Optional[int] = None,
                  settings: Settings = DEFAULT_SETTINGS):
    """Write `t,Theta,Phi,A,B,residual` rows of the inverse-engineered run.

    Final rows carry a label in the `t` column and the value in `Theta`:
        commutator_initial, commutator_final and fidelity.
    """
    spec = build_spec('inverse-engineered', size, final_time, plan=plan,
                      settings=settings)
    bloch_plan = spec.plan
    t, point = spec.schedule.sample(samples)
    hamiltonian = build_effective(spec.size, point,
                                  gap_floor=settings.gap_floor)
    invariant = Invariant(bloch_plan)
    residual = np.linalg.norm(
        invariant.derivative(t) - np.asarray(hamiltonian.gap)[:, None]
        * np.cross(hamiltonian.axis, invariant.vector(t)),
        axis=-1
    )
    theta, phi, _, _ = bloch_plan.angles(t)
    rows = [
        dict(t=time, Theta=angle, Phi=other, A=a, B=b, residual=error)
        for time, angle, other, a, b, error in zip(
            t, theta, phi, point.A, point.B, residual
        )
    ]
    initial, final = endpoint_commutators(bloch_plan)
    fidelity = evolve_inverse(bloch_plan, steps=steps).fidelity
    rows.extend([dict(t='commutator_initial', Theta=initial),
                 dict(t='commutator_final', Theta=final),
                 dict(t='fidelity', Theta=fidelity)])
    write_rows(rows, out)
    return rows


def cmd_invariant_map(sizes: List[int], times: List[float], out: str,
                      settings: Settings = DEFAULT_SETTINGS):
    """Write `N,t_f,diverges,max_abs_A,max_abs_B` for the default plan."""
    rows = divergence_map(sizes, times, settings=settings)
    write_rows(rows, out)
    return rows


def cmd_oracle_check(families: List[str], size: int, final_time: float,
                     out: str, steps: Optional[int] = None,
                     settings: Settings = DEFAULT_SETTINGS):
    """Write `family,N,t_f,fidelity_two_level,fidelity_full,difference`."""
    rows = []
    for family in families:
        spec = build_spec(family, size, final_time, settings=settings)
        difference, two_level, full = oracle_compare(spec, steps=steps,
                                                     settings=settings)
        logging.info(f"{family}: |two-level - full| = {difference:.3e}")
        rows.append(dict(family=family, N=size, t_f=final_time,
                         fidelity_two_level=two_level, fidelity_full=full,
                         difference=difference))
    write_rows(rows, out)
    return rows


def merge_defaults(arguments: Dict[str, Any]) -> Dict[str, Any]:
    """Fill flags not given with `--config` values, then built-in defaults."""
    stored = {}
    if arguments.get('config'):
        if not os.path.isfile(arguments['config']):
            raise ConfigurationError(
                f"Configuration file `{arguments['config']}` not found"
            )
        try:
            stored = json_read(file_=arguments['config'])
        except ValueError as e:
            raise ConfigurationError(
                f"Configuration file `{arguments['config']}` is not valid "
                f"JSON: {e}"
            )
        if not isinstance(stored, dict):
            raise ConfigurationError(
                f"Configuration file `{arguments['config']}` must contain "
                f"a JSON object"
            )
    for source in (stored, DEFAULT_ARGUMENTS):
        for key, value in source.items():
            if key in arguments and (arguments[key] is None
                                     or arguments[key] is False):
                arguments[key] = value
    return arguments


def run_command(arguments: Dict[str, Any]):
    """Dispatch parsed `arguments` to the matching cmd_* function."""
    settings = DEFAULT_SETTINGS
    if arguments.get('settings'):
        settings = Settings.from_file(arguments['settings'])
    command = arguments['command']
    common = dict(out=arguments['out'], settings=settings)
    if command == 'schedule':
        return cmd_schedule(arguments['family'], arguments['n'],
                            arguments['tf'], arguments['samples'],
                            plan=arguments['plan'], table=arguments['table'],
                            **common)
    if command == 'scan':
        return cmd_scan(arguments['families'], arguments['n'],
                        arguments['tf_min'], arguments['tf_max'],
                        arguments['points'], with_cd=arguments['with_cd'],
                        steps=arguments['steps'],
                        workers=arguments['workers'], **common)
    if command == 'functionals':
        return cmd_functionals(arguments['family'], arguments['n'],
                               arguments['tf'], arguments['samples'],
                               table=arguments['table'], **common)
    if command == 'invariant':
        if arguments['map']:
            return cmd_invariant_map(arguments['sizes'], arguments['times'],
                                     **common)
        return cmd_invariant(arguments['n'], arguments['tf'],
                             arguments['samples'], plan=arguments['plan'],
                             steps=arguments['steps'], **common)
    return cmd_oracle_check(arguments['families'], arguments['n'],
                            arguments['tf'], steps=arguments['steps'],
                            **common)


def main(argv=None) -> int:
    """Run the command line interface and return its exit code."""
    try:
        arguments = merge_defaults(get_cli_arguments(argv))
        set_loggers(**{k: v
                       for k, v in arguments.items()
                       if k in ('log_file', 'error_log_file',
                                'verbose', 'quiet')})
        if arguments['samples'] < 2:
            raise ConfigurationError("--samples must be at least 2")
        if arguments.get('workers', 1) < 1:
            raise ConfigurationError("--workers must be at least 1")
        run_command(arguments)
        RunManifest(
            command=arguments['command'],
            parameters={k: v
                        for k, v in arguments.items()
                        if k not in ('log_file', 'error_log_file',
                                     'verbose', 'quiet', 'command')},
        ).store(arguments['out'])
    except StaError as e:
        logging.error(e.description)
        return e.code
    except OSError as e:
        logging.error(f"I/O error: {e}")
        return EXIT_OUTPUT
    return EXIT_SUCCESS


def run_from_command_line():
    sys.exit(main())
