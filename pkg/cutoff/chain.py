import logging
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . util import (STOCHASTIC_TOL, STATIONARY_TOL, REVERSIBLE_TOL, POWER_TOL, POWER_MAX_ITER, EVOLVE_MAX_STATES,
                    DimensionError, StateIndexError, PreconditionError, NumericError, ConvergenceError, SizeError,
                    is_exact, exact_array, check_distribution)

logger = logging.getLogger(__name__)


class ProfilePoint(NamedTuple):
    c: float
    t: int
    exact_tv: float
    main_term: float
    error_term: float
    limit_value: float
    realized_c: float

    @property
    def gap(self):
        return abs(self.exact_tv - self.limit_value)

    def sandwich_holds(self, tol=1e-9):
        return abs(self.exact_tv - self.main_term) <= self.error_term + tol


class ReversibilityReport(NamedTuple):
    holds: bool
    max_violation: float

    def __bool__(self):
        return self.holds


class Chain:
    """
    A finite Markov chain: a square row-stochastic kernel and its stationary law.

    Both backends share one code path. A float kernel is a float64 array; an exact
    kernel is an object array of Fractions, in which case every check below is an
    exact equality.
    """

    def __init__(self, kernel, stationary=None, reversible=None, name='chain'):
        kernel = kernel if isinstance(kernel, np.ndarray) else np.asarray(kernel)
        if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
            raise DimensionError(f'{name}: kernel must be square, got shape {kernel.shape}')
        self.exact = is_exact(kernel)
        if not self.exact:
            kernel = kernel.astype(float)
        self.kernel = kernel
        self.name = name
        self.size = kernel.shape[0]

        for x in range(self.size):
            check_distribution(kernel[x], exact=self.exact, what=f'{name}: row {x}')

        if stationary is None:
            if self.exact:
                raise PreconditionError(f'{name}: exact chains need a supplied stationary distribution')
            stationary = stationary_by_power_iteration(kernel)
        if self.exact:
            stationary = exact_array(stationary)
        else:
            stationary = np.asarray(stationary, dtype=float)
        if len(stationary) != self.size:
            raise DimensionError(f'{name}: stationary has {len(stationary)} entries for {self.size} states')
        check_distribution(stationary, exact=self.exact, what=f'{name}: stationary')
        self.stationary = stationary

        drift = stationary @ kernel - stationary
        if self.exact:
            if any(v != 0 for v in drift):
                raise NumericError(f'{name}: stationary law is not invariant', residual=max(abs(v) for v in drift))
        else:
            residual = float(np.max(np.abs(drift)))
            if residual > STATIONARY_TOL:
                raise NumericError(f'{name}: stationary law is not invariant (residual {residual:.3e})', residual=residual)

        if reversible is None:
            reversible = check_reversible(self).holds
        self.reversible = reversible

    def __repr__(self):
        mode = 'exact' if self.exact else 'float'
        return f'Chain({self.name!r}, states={self.size}, {mode})'

    def point_mass(self, start):
        self.check_state(start)
        dist = np.zeros(self.size, dtype=object if self.exact else float)
        if self.exact:
            dist[:] = Fraction(0)
            dist[start] = Fraction(1)
        else:
            dist[start] = 1.0
        return dist

    def check_state(self, x):
        if not (0 <= x < self.size):
            raise StateIndexError(f'{self.name}: state {x} outside 0..{self.size - 1}')


def stationary_by_power_iteration(kernel, tol=POWER_TOL, max_iter=POWER_MAX_ITER):
    kernel = np.asarray(kernel, dtype=float)
    size = kernel.shape[0]
    # the lazy kernel has the same stationary law and is aperiodic
    lazy = 0.5 * (kernel + np.eye(size))
    dist = np.full(size, 1.0 / size)
    for _ in range(max_iter):
        nxt = dist @ lazy
        delta = float(np.max(np.abs(nxt - dist)))
        dist = nxt
        if delta < tol:
            return dist / dist.sum()
    raise ConvergenceError(f'power iteration did not converge in {max_iter} iterations', residual=delta)


def tv_distance(p, q):
    if len(p) != len(q):
        raise DimensionError(f'distributions of lengths {len(p)} and {len(q)}')
    if is_exact(p) or is_exact(q):
        return sum((abs(a - b) for a, b in zip(p, q)), Fraction(0)) / 2
    return 0.5 * float(np.sum(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))))


def _check_evolve(chain, t):
    if chain.size > EVOLVE_MAX_STATES:
        raise SizeError(f'{chain.name}: {chain.size} states exceeds the evolve cap of {EVOLVE_MAX_STATES}')
    if t < 0:
        raise PreconditionError(f'number of steps must be nonnegative, got {t}')


def evolve_distribution(chain, dist, t):
    _check_evolve(chain, t)
    if len(dist) != chain.size:
        raise DimensionError(f'{chain.name}: distribution of length {len(dist)} for {chain.size} states')
    for _ in range(t):
        dist = dist @ chain.kernel
    return dist


def evolve(chain, start, t):
    return evolve_distribution(chain, chain.point_mass(start), t)


def tv_profile_exact(chain, start, times):
    times = list(times)
    if any(b < a for a, b in zip(times, times[1:])):
        raise PreconditionError('times must be nondecreasing')
    dist = chain.point_mass(start)
    now = 0
    profile = []
    for t in times:
        dist = evolve_distribution(chain, dist, t - now)
        now = t
        profile.append((t, tv_distance(dist, chain.stationary)))

    if chain.reversible:
        for (s, a), (t, b) in zip(profile, profile[1:]):
            if b > a + STOCHASTIC_TOL:
                logger.warning(f'{chain.name}: TV increased from {float(a):.6g} at t={s} to {float(b):.6g} at t={t}')
                break
    return profile


def check_reversible(chain, tol=REVERSIBLE_TOL):
    flow = chain.stationary[:, None] * chain.kernel
    violation = flow - flow.T
    if chain.exact:
        worst = max((abs(v) for v in violation.ravel()), default=Fraction(0))
        return ReversibilityReport(worst == 0, float(worst))
    worst = float(np.max(np.abs(violation))) if violation.size else 0.0
    return ReversibilityReport(worst <= tol, worst)


def two_state_chain(a, b, exact=False):
    if exact:
        a, b = Fraction(a), Fraction(b)
        kernel = np.array([[1 - a, a], [b, 1 - b]], dtype=object)
        stationary = np.array([b / (a + b), a / (a + b)], dtype=object)
    else:
        kernel = np.array([[1 - a, a], [b, 1 - b]], dtype=float)
        stationary = np.array([b / (a + b), a / (a + b)], dtype=float)
    return Chain(kernel, stationary, name=f'two-state({a},{b})')


def identity_chain(size):
    return Chain(np.eye(size), np.full(size, 1.0 / size), reversible=True, name=f'identity({size})')


def cycle_chain(length, exact=False):
    one = Fraction(1) if exact else 1.0
    kernel = np.zeros((length, length), dtype=object if exact else float)
    kernel[:] = 0 * one
    for x in range(length):
        kernel[x, x] += one / 2
        kernel[x, (x + 1) % length] += one / 4
        kernel[x, (x - 1) % length] += one / 4
    stationary = np.array([one / length] * length, dtype=object if exact else float)
    return Chain(kernel, stationary, name=f'lazy-cycle({length})')


def random_reversible_chain(size, rng, exact=False):
    """Random reversible chain from symmetric positive integer edge weights; π is proportional to the row sums."""
    weights = rng.integers(1, 10, size=(size, size))
    weights = np.triu(weights) + np.triu(weights, 1).T
    degree = weights.sum(axis=1)
    if exact:
        kernel = np.array([[Fraction(int(weights[x, y]), int(degree[x])) for y in range(size)] for x in range(size)], dtype=object)
        total = int(degree.sum())
        stationary = np.array([Fraction(int(d), total) for d in degree], dtype=object)
    else:
        kernel = weights / degree[:, None]
        stationary = degree / degree.sum()
    return Chain(kernel, stationary, reversible=True, name=f'random-reversible({size})')


def random_circulant_chain(size, rng):
    """Random symmetric circulant kernel: vertex-transitive with uniform π."""
    weights = rng.integers(1, 10, size=size).astype(float)
    steps = np.arange(size)
    weights = weights + weights[(-steps) % size]
    weights /= weights.sum()
    kernel = np.array([np.roll(weights, x) for x in range(size)])
    return Chain(kernel, np.full(size, 1.0 / size), reversible=True, name=f'random-circulant({size})')
