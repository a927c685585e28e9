import argparse
import logging
import os
import sys
from contextlib import contextmanager
from fractions import Fraction
from time import perf_counter
from typing import NamedTuple

import numpy as np

VERSION = '0.3.0'

STOCHASTIC_TOL = 1e-12
STATIONARY_TOL = 1e-10
REVERSIBLE_TOL = 1e-10
POWER_TOL = 1e-13
POWER_MAX_ITER = 10**6
EVOLVE_MAX_STATES = 20000
JACOBI_MAX_STATES = 2000
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
EPSILON = 1e-3
C_FROM = -2.0
C_TO = 2.0
C_STEP = 0.5
SEED = 20240229
TRAJECTORIES = 100000
WORKERS = 1
FORMAT = 'csv'
MODE = 'float'
CONFIG_TRUE = ('1', 'true', 'yes', 'on')
CONFIG_FALSE = ('0', 'false', 'no', 'off')

FAMILIES = ('gibbs', 'kcycle', 'ehrenfest', 'hypercube')
SUITES = ('lemma1', 'krawtchouk', 'characters', 'gelfand', 'binomial-clt', 'all')


class CutoffError(Exception):
    pass

class DimensionError(CutoffError, ValueError):
    pass

class StateIndexError(CutoffError, IndexError):
    pass

class PreconditionError(CutoffError, ValueError):
    pass

class NumericError(CutoffError, ArithmeticError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual

class ConvergenceError(NumericError):
    pass

class DomainError(CutoffError, ValueError):
    pass

class SizeError(CutoffError, ValueError):
    pass

class ScheduleError(CutoffError, ValueError):
    pass

class UsageError(CutoffError):
    pass


def is_exact(values):
    return isinstance(values, np.ndarray) and values.dtype == object

def exact_array(values):
    return np.array([Fraction(v) for v in values], dtype=object)

def exact_matrix(rows):
    return np.array([[Fraction(v) for v in row] for row in rows], dtype=object)

def as_float(values):
    return np.asarray(values, dtype=float)

def check_distribution(probs, exact=None, tol=STOCHASTIC_TOL, what='distribution'):
    probs = np.asarray(probs) if not isinstance(probs, np.ndarray) else probs
    if probs.ndim != 1:
        raise DimensionError(f'{what} must be one-dimensional, got shape {probs.shape}')
    if exact is None:
        exact = is_exact(probs)
    if exact:
        if any(v < 0 for v in probs):
            raise NumericError(f'{what} has a negative entry')
        total = sum(probs, Fraction(0))
        if total != 1:
            raise NumericError(f'{what} sums to {total}, not 1', residual=abs(total - 1))
    else:
        if np.any(probs < -tol):
            raise NumericError(f'{what} has a negative entry', residual=float(-probs.min()))
        total = float(np.sum(probs))
        if abs(total - 1) > tol:
            raise NumericError(f'{what} sums to {total!r}, not 1', residual=abs(total - 1))
    return probs

def c_grid(c_from=C_FROM, c_to=C_TO, c_step=C_STEP):
    if c_step <= 0:
        raise UsageError(f'--c-step must be positive, got {c_step}')
    if c_to < c_from:
        raise UsageError(f'--c-to ({c_to}) is below --c-from ({c_from})')
    count = int(round((c_to - c_from) / c_step)) + 1
    # keep grid points exact decimals where the inputs are
    grid = [round(c_from + i * c_step, 12) for i in range(count)]
    return [c for c in grid if c <= c_to + 1e-12]

def parse_fraction(text):
    try:
        value = Fraction(str(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f'not a number: {text!r}')
    return value


def load_config(path):
    if not os.path.isfile(path):
        raise UsageError(f'config file not found: {path}')
    values = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise UsageError(f'{path}:{lineno}: expected key = value, got {line!r}')
            key, value = (part.strip() for part in line.split('=', 1))
            if not key:
                raise UsageError(f'{path}:{lineno}: empty key')
            values[key.lstrip('-').replace('-', '_')] = value
    return values


def _config_flag(key, value):
    lowered = value.lower()
    if lowered in CONFIG_TRUE:
        return True
    if lowered in CONFIG_FALSE:
        return False
    raise UsageError(f'config key {key} expects true or false, got {value!r}')


def _config_defaults(path, subparsers):
    """Config values keyed by option dest; on/off flags become bools and unknown keys are an error."""
    defaults = load_config(path)
    actions = {}
    for sub in subparsers:
        for action in sub._actions:
            if not isinstance(action, argparse._HelpAction):
                actions.setdefault(action.dest, action)
    unknown = sorted(set(defaults) - set(actions))
    if unknown:
        raise UsageError(f'{path}: unknown config keys: {", ".join(unknown)}')
    for key, value in defaults.items():
        if isinstance(actions[key], (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            defaults[key] = _config_flag(key, value)
    return defaults


def _add_common(parser):
    parser.add_argument('--format', default=FORMAT, choices=['csv', 'json'], help=f'Output format (default: {FORMAT})')
    parser.add_argument('--mode', default=MODE, choices=['exact', 'float'], help=f'Arithmetic mode (default: {MODE})')
    parser.add_argument('--out', default=None, help='Write output to PATH instead of stdout')
    parser.add_argument('--config', default=None, help='Plain-text key = value file of defaults (flags win)')
    parser.add_argument('--stats', default=False, action='store_true', help='Print timing statistics at end of execution')
    parser.add_argument('--quiet', '-q', default=False, action='store_true', help='Hide information during the run')
    parser.add_argument('--debug', default=False, action='store_true', help='Print debugging information to stderr')


def _add_family_params(parser, family):
    if family == 'gibbs':
        parser.add_argument('--n1', type=int, required=False, default=None, help='Prior size n1')
        parser.add_argument('--n2', type=int, required=False, default=None, help='Noise size n2')
        parser.add_argument('--p', type=parse_fraction, default=Fraction(1, 2), help='Success probability (default: 1/2)')
    elif family == 'kcycle':
        parser.add_argument('--n', type=int, default=None, help='Number of cards')
        parser.add_argument('--k', type=int, default=2, help='Cycle length (default: 2)')
    elif family == 'ehrenfest':
        parser.add_argument('--n', type=int, default=None, help='Number of balls')
        parser.add_argument('--m', type=int, default=1, help='Number of urns minus one (default: 1)')
    elif family == 'hypercube':
        parser.add_argument('--n', type=int, default=None, help='Dimension')

def parse_args(argv=None):
    parser = argparse.ArgumentParser(description='Exact total-variation mixing curves and limit-profile sandwiches for four Markov chain families')
    commands = parser.add_subparsers(dest='command', metavar='COMMAND')
    commands.required = True
    subparsers = []

    for family in FAMILIES:
        sub = commands.add_parser(family, help=f'Profile table for the {family} family')
        _add_family_params(sub, family)
        sub.add_argument('--c-from', type=float, default=C_FROM, help=f'First window coordinate (default: {C_FROM})')
        sub.add_argument('--c-to', type=float, default=C_TO, help=f'Last window coordinate (default: {C_TO})')
        sub.add_argument('--c-step', type=float, default=C_STEP, help=f'Window coordinate step (default: {C_STEP})')
        sub.add_argument('--epsilon', type=float, default=EPSILON, help=f'Error-term target used to pick the truncation level (default: {EPSILON})')
        sub.add_argument('--truncation', type=int, default=None, help='Explicit truncation level M (overrides --epsilon)')
        _add_common(sub)
        sub.set_defaults(family=family)
        subparsers.append(sub)

    sub = commands.add_parser('verify', help='Run a verification suite')
    sub.add_argument('suite', choices=SUITES, help='Suite to run')
    _add_common(sub)
    subparsers.append(sub)

    sub = commands.add_parser('simulate', help='Monte Carlo histogram with a chi-square gate')
    sub.add_argument('sim_family', choices=FAMILIES, metavar='FAMILY', help='One of: ' + ', '.join(FAMILIES))
    sub.add_argument('--n', type=int, default=None, help='Size parameter (kcycle, ehrenfest, hypercube)')
    sub.add_argument('--m', type=int, default=1, help='Ehrenfest urns minus one (default: 1)')
    sub.add_argument('--k', type=int, default=2, help='k-cycle length (default: 2)')
    sub.add_argument('--n1', type=int, default=None, help='Gibbs prior size')
    sub.add_argument('--n2', type=int, default=None, help='Gibbs noise size')
    sub.add_argument('--p', type=parse_fraction, default=Fraction(1, 2), help='Gibbs success probability (default: 1/2)')
    sub.add_argument('--t', type=int, default=None, help='Number of steps')
    sub.add_argument('--seed', type=int, default=SEED, help=f'Seed of the PCG64 stream (default: {SEED})')
    sub.add_argument('--trajectories', type=int, default=TRAJECTORIES, help=f'Number of trajectories (default: {TRAJECTORIES})')
    sub.add_argument('--workers', type=int, default=WORKERS, help=f'Number of derived streams (default: {WORKERS})')
    _add_common(sub)
    subparsers.append(sub)

    argv = sys.argv[1:] if argv is None else list(argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument('--config', default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config:
        defaults = _config_defaults(known.config, subparsers)
        for sub in subparsers:
            sub.set_defaults(**defaults)

    return parser.parse_args(argv)


class DurationSummary(NamedTuple):
    operation: str
    called: int
    total: float
    mean: float
    maximum: float


class Stats:
    def __init__(self):
        self.exec_start = perf_counter()
        self.durations = {}

    def total_exec_time(self):
        return perf_counter() - self.exec_start

    def show(self, stream=None):
        stream = stream or sys.stderr
        message = ''
        summaries = self.duration_summary()
        total_op_time = sum(summary.total for summary in summaries)
        for summary in summaries:
            percentage = int((summary.total/total_op_time)*100) if total_op_time else 0
            message += f'{summary.operation}:\n\tCalled: {summary.called} times \t ' + \
                       f'Total: {summary.total:0.2f} \t Mean: {summary.mean:0.4f} \t ' + \
                       f'Max: {summary.maximum:0.3f} \t Percentage: {percentage}%\n'
        message += f'Total operation time: {total_op_time:0.2f}s\n'
        message += f'Total execution time: {self.total_exec_time():0.2f}s'
        print(message, file=stream)

    def duration_summary(self):
        summary = []
        stats = sorted(self.durations.items(), key=lambda x: sum(x[1]), reverse=True)
        for operation, durations in stats:
            called = len(durations)
            total = sum(durations)
            summary.append(DurationSummary(operation.title(), called, total, total/called, max(durations)))
        return summary

    @contextmanager
    def duration(self, operation):
        start = perf_counter()
        try:
            yield
        finally:
            self.durations.setdefault(operation, []).append(perf_counter() - start)


class Settings:
    def __init__(self, cmd_line=False, argv=None, command=None, family=None, suite=None, info=True, quiet=False, debug=False,
                 show_stats=False, n=None, m=1, k=2, n1=None, n2=None, p=Fraction(1, 2), c_from=C_FROM, c_to=C_TO, c_step=C_STEP,
                 epsilon=EPSILON, truncation=None, fmt=FORMAT, mode=MODE, out=None, t=None, seed=SEED,
                 trajectories=TRAJECTORIES, workers=WORKERS, config=None):

        if cmd_line:
            args = parse_args(argv)
            command = args.command
            if command in FAMILIES:
                family, command = command, 'profile'
            elif command == 'simulate':
                family = args.sim_family
            suite = getattr(args, 'suite', None)
            n = getattr(args, 'n', None)
            m = getattr(args, 'm', m)
            k = getattr(args, 'k', k)
            n1 = getattr(args, 'n1', None)
            n2 = getattr(args, 'n2', None)
            p = getattr(args, 'p', p)
            c_from = getattr(args, 'c_from', c_from)
            c_to = getattr(args, 'c_to', c_to)
            c_step = getattr(args, 'c_step', c_step)
            epsilon = getattr(args, 'epsilon', epsilon)
            truncation = getattr(args, 'truncation', None)
            t = getattr(args, 't', None)
            seed = getattr(args, 'seed', seed)
            trajectories = getattr(args, 'trajectories', trajectories)
            workers = getattr(args, 'workers', workers)
            fmt = args.format
            mode = args.mode
            out = args.out
            config = args.config
            quiet = args.quiet
            debug = args.debug
            show_stats = args.stats
            self.argv = sys.argv[1:] if argv is None else list(argv)
        else:
            self.argv = None

        self.logger = logging.getLogger("cutoff")

        if quiet:
            pass
        elif debug:
            logging.basicConfig(format='%(message)s', level=logging.DEBUG, datefmt='%H:%M:%S')
        elif info:
            logging.basicConfig(format='%(asctime)s %(message)s', level=logging.INFO, datefmt='%H:%M:%S')

        self.command = command
        self.family = family
        self.suite = suite
        self.info = info
        self.debug = debug
        self.stats = Stats()
        self.stats.logger = self.logger
        self.show_stats = show_stats
        self.n = n
        self.m = m
        self.k = k
        self.n1 = n1
        self.n2 = n2
        self.p = Fraction(p) if not isinstance(p, Fraction) else p
        self.c_from = c_from
        self.c_to = c_to
        self.c_step = c_step
        self.epsilon = epsilon
        self.truncation = truncation
        self.format = fmt
        self.mode = mode
        self.out = out
        self.t = t
        self.seed = seed
        self.trajectories = trajectories
        self.workers = workers
        self.config = config

    @property
    def exact(self):
        return self.mode == 'exact'

    def c_values(self):
        return c_grid(self.c_from, self.c_to, self.c_step)

    def parameters(self):
        if self.family == 'gibbs':
            params = {'n1': self.n1, 'n2': self.n2, 'p': str(self.p)}
        elif self.family == 'kcycle':
            params = {'n': self.n, 'k': self.k}
        elif self.family == 'ehrenfest':
            params = {'n': self.n, 'm': self.m}
        elif self.family == 'hypercube':
            params = {'n': self.n}
        else:
            params = {}
        if self.command == 'profile':
            params.update({'c_from': self.c_from, 'c_to': self.c_to, 'c_step': self.c_step,
                           'epsilon': self.epsilon, 'truncation': self.truncation})
        elif self.command == 'simulate':
            params.update({'t': self.t, 'trajectories': self.trajectories, 'workers': self.workers})
        elif self.command == 'verify':
            params = {'suite': self.suite}
        return params

    def require(self, *names):
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            flags = ', '.join('--' + name.replace('_', '-') for name in missing)
            raise UsageError(f'{self.command} {self.family or ""}: missing {flags}'.replace('  ', ' '))
