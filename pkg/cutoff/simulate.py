import logging
import math
from multiprocessing import Pool
from typing import NamedTuple

import numpy as np
from scipy import stats

from . chain import evolve
from . gelfand import ehrenfest_orbit_chain
from . gibbs import gibbs_model, gibbs_kernel
from . hypercube import hypercube_weight_chain
from . report import RunRecord, write_table
from . symmetric import CHARACTER_MAX_N, cycle_types, kcycle_distribution, fixed_point_counts
from . util import DomainError, SizeError, UsageError

logger = logging.getLogger(__name__)

ALGORITHM = 'PCG64'
CHUNK = 4096
ALPHA = 1e-3
MIN_EXPECTED = 5
KCYCLE_MAX_N = 10**4


class SimConfig(NamedTuple):
    seed: int
    trajectories: int
    workers: int = 1


class Histogram(NamedTuple):
    counts: np.ndarray

    @property
    def total(self):
        return int(self.counts.sum())

    def frequencies(self):
        return self.counts / self.total


class GateResult(NamedTuple):
    statistic: float
    pvalue: float
    dof: int
    bins: int
    passed: bool


def sim_config(seed, trajectories, workers=1):
    if trajectories < 1:
        raise DomainError(f'trajectories must be at least 1, got {trajectories}')
    if workers < 1:
        raise DomainError(f'workers must be at least 1, got {workers}')
    if not (0 <= seed < 2**64):
        raise DomainError(f'seed must be a 64-bit unsigned integer, got {seed}')
    return SimConfig(int(seed), int(trajectories), int(workers))


def chunk_generator(seed, j):
    """Stream j of the run; independent of how chunks are spread over workers."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(j,))))


def _kcycle_chunk(rng, size, n, k, t):
    perms = np.tile(np.arange(n, dtype=np.int16), (size, 1))
    rows = np.arange(size)[:, None]
    for _ in range(t):
        picks = np.empty((size, k), dtype=np.int64)
        ordered = np.empty((size, 0), dtype=np.int64)
        for i in range(k):
            # uniform over the n - i positions not yet taken
            u = rng.integers(0, n - i, size=size)
            for col in range(i):
                u += u >= ordered[:, col]
            picks[:, i] = u
            ordered = np.sort(picks[:, :i + 1], axis=1)
        # right multiplication by the cycle (a_0 a_1 ... a_{k-1})
        perms[rows, picks] = perms[rows, np.roll(picks, -1, axis=1)]
    fixed = np.sum(perms == np.arange(n, dtype=np.int16), axis=1)
    return np.bincount(fixed, minlength=n + 1)


def _ehrenfest_chunk(rng, size, n, m, t):
    labels = np.zeros((size, n), dtype=np.int16)
    rows = np.arange(size)
    for _ in range(t):
        ball = rng.integers(0, n, size=size)
        urn = rng.integers(0, m + 1, size=size)
        labels[rows, ball] = urn
    return np.bincount(np.count_nonzero(labels, axis=1), minlength=n + 1)


def _gibbs_chunk(rng, size, n1, n2, p, t):
    n = n1 + n2
    x = np.zeros(size, dtype=np.int64)
    for _ in range(t):
        theta = rng.hypergeometric(n1, n2, np.clip(x, 1, n))
        theta[x == 0] = 0
        x = theta + rng.binomial(n2, p, size=size)
    return np.bincount(x, minlength=n + 1)


def _hypercube_chunk(rng, size, n, t):
    bits = np.zeros((size, n), dtype=bool)
    rows = np.arange(size)
    for _ in range(t):
        flip = rng.random(size) < 0.5
        coordinate = rng.integers(0, n, size=size)
        bits[rows[flip], coordinate[flip]] ^= True
    return np.bincount(bits.sum(axis=1), minlength=n + 1)


CHUNK_RUNNERS = {
    'kcycle': _kcycle_chunk,
    'ehrenfest': _ehrenfest_chunk,
    'gibbs': _gibbs_chunk,
    'hypercube': _hypercube_chunk,
}


def _run_chunk(family, seed, j, size, args):
    return CHUNK_RUNNERS[family](chunk_generator(seed, j), size, *args)


def _simulate(family, args, config):
    jobs = []
    for j, start in enumerate(range(0, config.trajectories, CHUNK)):
        jobs.append((family, config.seed, j, min(CHUNK, config.trajectories - start), args))
    if config.workers > 1 and len(jobs) > 1:
        with Pool(min(config.workers, len(jobs))) as pool:
            parts = pool.starmap(_run_chunk, jobs)
    else:
        parts = [_run_chunk(*job) for job in jobs]
    return Histogram(np.sum(parts, axis=0))


def _check_steps(t):
    if t is None or t < 0:
        raise DomainError(f'number of steps must be a nonnegative integer, got {t}')


def simulate_kcycle_fixed_points(n, k, t, config):
    if not (2 <= k <= n):
        raise DomainError(f'cycle length must satisfy 2 <= k <= n, got k={k}, n={n}')
    if n > KCYCLE_MAX_N:
        raise SizeError(f'k-cycle simulation is limited to n <= {KCYCLE_MAX_N}')
    _check_steps(t)
    return _simulate('kcycle', (n, k, t), config)


def simulate_ehrenfest_occupancy(n, m, t, config):
    if n < 1 or m < 1:
        raise DomainError(f'need n >= 1 balls and m >= 1, got n={n}, m={m}')
    _check_steps(t)
    return _simulate('ehrenfest', (n, m, t), config)


def simulate_gibbs(n1, n2, p, t, config):
    model = gibbs_model(n1, n2, p)
    _check_steps(t)
    return _simulate('gibbs', (model.n1, model.n2, float(model.p), t), config)


def simulate_hypercube(n, t, config):
    if n < 1:
        raise DomainError(f'dimension must be positive, got {n}')
    _check_steps(t)
    return _simulate('hypercube', (n, t), config)


def kcycle_fixed_point_law(n, k, t):
    """Law of Fix sigma after t steps: exact through characters for small n, else uniform on the parity class."""
    if n <= CHARACTER_MAX_N:
        law = np.zeros(n + 1)
        for cls, mass in zip(cycle_types(n), kcycle_distribution(n, k, t)):
            law[cls.fixed_points] += float(cls.size * mass)
        return law, True
    parity = ((k - 1) * t) % 2
    half = math.factorial(n) // 2
    counts = [fixed_point_counts(n, r) for r in range(n + 1)]
    law = np.array([(even if parity == 0 else total - even) / half for total, even in counts])
    return law, False


def chi_square_gate(counts, probs, alpha=ALPHA):
    """Chi-square goodness of fit; bins expecting fewer than five counts are pooled into one tail bin."""
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if counts.shape != probs.shape:
        raise DomainError(f'{len(counts)} observed bins for {len(probs)} probabilities')
    if np.any(counts[probs <= 0] > 0):
        return GateResult(math.inf, 0.0, 0, len(counts), False)
    expected = probs * counts.sum()
    keep = expected >= MIN_EXPECTED
    observed = list(counts[keep])
    wanted = list(expected[keep])
    tail_obs, tail_exp = counts[~keep].sum(), expected[~keep].sum()
    if tail_exp > 0:
        if tail_exp >= MIN_EXPECTED or not wanted:
            observed.append(tail_obs)
            wanted.append(tail_exp)
        else:
            smallest = int(np.argmin(wanted))
            observed[smallest] += tail_obs
            wanted[smallest] += tail_exp
    if len(observed) < 2:
        return GateResult(0.0, 1.0, 0, len(observed), True)
    observed = np.array(observed)
    wanted = np.array(wanted) * observed.sum() / np.sum(wanted)
    statistic, pvalue = stats.chisquare(observed, wanted)
    return GateResult(float(statistic), float(pvalue), len(observed) - 1, len(observed), bool(pvalue >= alpha))


def _exact_law(settings):
    family, t = settings.family, settings.t
    if family == 'kcycle':
        law, exact = kcycle_fixed_point_law(settings.n, settings.k, t)
        if not exact:
            logger.warning(f'k-cycle n={settings.n}: comparing against the stationary parity-class law')
        return law
    if family == 'ehrenfest':
        return evolve(ehrenfest_orbit_chain(settings.n, settings.m), 0, t)
    if family == 'gibbs':
        return evolve(gibbs_kernel(gibbs_model(settings.n1, settings.n2, settings.p)), 0, t)
    return evolve(hypercube_weight_chain(settings.n), 0, t)


def _required(family):
    return {'kcycle': ('n', 't'), 'ehrenfest': ('n', 't'), 'gibbs': ('n1', 'n2', 't'), 'hypercube': ('n', 't')}[family]


def cmd_simulate(settings):
    settings.require(*_required(settings.family))
    if settings.trajectories < 1:
        raise UsageError(f'--trajectories must be at least 1, got {settings.trajectories}')
    config = sim_config(settings.seed, settings.trajectories, settings.workers)

    with settings.stats.duration('simulate'):
        if settings.family == 'kcycle':
            histogram = simulate_kcycle_fixed_points(settings.n, settings.k, settings.t, config)
        elif settings.family == 'ehrenfest':
            histogram = simulate_ehrenfest_occupancy(settings.n, settings.m, settings.t, config)
        elif settings.family == 'gibbs':
            histogram = simulate_gibbs(settings.n1, settings.n2, settings.p, settings.t, config)
        else:
            histogram = simulate_hypercube(settings.n, settings.t, config)

    with settings.stats.duration('exact law'):
        law = np.asarray(_exact_law(settings), dtype=float)
    gate = chi_square_gate(histogram.counts, law)
    settings.logger.info(f'chi-square {gate.statistic:.4g} on {gate.dof} dof, p = {gate.pvalue:.4g}: '
                         f'{"pass" if gate.passed else "FAIL"}')

    record = RunRecord.from_settings(settings, extra={'algorithm': ALGORITHM})
    rows = [(value, int(count), float(count) / histogram.total, float(law[value]))
            for value, count in enumerate(histogram.counts)]
    footer = {'chi_square': gate.statistic, 'dof': gate.dof, 'bins': gate.bins, 'p_value': gate.pvalue,
              'alpha': ALPHA, 'passed': gate.passed}
    write_table(record, ('value', 'count', 'frequency', 'expected'), rows, settings, footer=footer)
    return 0 if gate.passed else 1
