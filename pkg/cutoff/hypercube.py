import logging
import math
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from bitarray.util import int2ba, ba2int, count_and

from . chain import Chain, ProfilePoint
from . gelfand import ehrenfest_orbit_chain, ehrenfest_tv_curve
from . special import krawtchouk_rows, tv_binomials, gaussian_profile
from . util import EVOLVE_MAX_STATES, DomainError, PreconditionError, ScheduleError, SizeError

logger = logging.getLogger(__name__)

FOURIER_MAX_N = 64
CHARACTER_MAX_N = 12
METHODS = ('auto', 'fourier', 'walk')


class HypercubeModel(NamedTuple):
    n: int

    @property
    def size(self):
        return 2**self.n


def hypercube_model(n):
    if int(n) != n or n < 1:
        raise DomainError(f'dimension must be a positive integer, got {n}')
    return HypercubeModel(int(n))


def hypercube_chain(n):
    """Lazy walk on {0,1}^n: hold with 1/2, else flip a uniform coordinate."""
    model = hypercube_model(n)
    if model.size > EVOLVE_MAX_STATES:
        raise SizeError(f'hypercube({n}): {model.size} states exceeds the oracle cap of {EVOLVE_MAX_STATES}')
    kernel = np.zeros((model.size, model.size))
    for x in range(model.size):
        kernel[x, x] = 0.5
        bits = int2ba(x, length=n)
        for j in range(n):
            bits.invert(j)
            kernel[x, ba2int(bits)] += 0.5 / n
            bits.invert(j)
    return Chain(kernel, np.full(model.size, 1.0 / model.size), reversible=True, name=f'hypercube({n})')


def hypercube_weights(n):
    """Hamming weight of every vertex, in integer order."""
    return np.array([int2ba(x, length=n).count() for x in range(2**n)])


def hypercube_weight_chain(n, exact=False):
    """Birth-death chain of the Hamming weight; identical to the one-urn Ehrenfest distance chain."""
    hypercube_model(n)
    chain = ehrenfest_orbit_chain(n, 1, exact=exact)
    chain.name = f'hypercube-weights({n})'
    return chain


def hypercube_character_tv(n, t):
    """2^-n sum_x |sum_{y != 0} (-1)^(x.y) (1 - |y|/n)^t| / 2, summed over every pair of vertices."""
    hypercube_model(n)
    if n > CHARACTER_MAX_N:
        raise SizeError(f'hypercube({n}): character oracle is limited to n <= {CHARACTER_MAX_N}')
    vectors = [int2ba(y, length=n) for y in range(2**n)]
    decay = [Fraction(n - v.count(), n)**t for v in vectors]
    total = Fraction(0)
    for x in vectors:
        total += abs(sum(-d if count_and(x, y) % 2 else d for y, d in zip(vectors[1:], decay[1:])))
    return total / 2**(n + 1)


def _fourier_tv(n, t):
    """Weight-grouped sum: sum_r binom(n,r) |sum_{j>=1} Kr_j(r) (n-j)^t| / (2^(n+1) n^t), in integers."""
    inner = np.zeros(n + 1, dtype=object)
    for j, row in krawtchouk_rows(n, 1):
        if j:
            inner = inner + row * (n - j)**t
    numerator = sum(math.comb(n, r) * abs(int(inner[r])) for r in range(n + 1))
    return Fraction(numerator, 2**(n + 1) * n**t)


def hypercube_exact_tv(n, t, method='auto', exact=False):
    hypercube_model(n)
    if t < 0:
        raise PreconditionError(f'number of steps must be nonnegative, got {t}')
    if method not in METHODS:
        raise DomainError(f'method must be one of {", ".join(METHODS)}, got {method!r}')
    if method == 'auto':
        method = 'fourier' if n <= FOURIER_MAX_N else 'walk'
    if method == 'fourier':
        value = _fourier_tv(n, t)
        return value if exact else float(value)
    if exact:
        raise PreconditionError('exact values need the fourier method')
    return ehrenfest_tv_curve(n, 1, [t])[0][1]


def hypercube_tv_curve(n, times):
    hypercube_model(n)
    return ehrenfest_tv_curve(n, 1, times)


def hypercube_schedule(n, c):
    hypercube_model(n)
    if not math.isfinite(c):
        raise PreconditionError(f'window coordinate must be finite, got {c}')
    raw = 0.5 * n * math.log(n) + c * n
    t = math.floor(raw + 0.5)
    if t < 1:
        raise ScheduleError(f'hypercube({n}): c={c} gives the nonpositive time {raw:.4g}')
    return t


def hypercube_realized_c(n, t):
    return t / n - 0.5 * math.log(n)


def hypercube_binomial_surrogate(n, c):
    """d_TV(Bin(n, 1/2 - e^-c / (2 sqrt n)), Bin(n, 1/2))."""
    hypercube_model(n)
    return tv_binomials(n, 0.5 - 0.5 * math.exp(-c) / math.sqrt(n), 0.5)


def hypercube_profile_point(n, c):
    t = hypercube_schedule(n, c)
    realized = hypercube_realized_c(n, t)
    exact_tv = hypercube_exact_tv(n, t)
    logger.debug(f'hypercube({n}): c={c} realized={realized:.6g} t={t} tv={exact_tv:.6g}')
    # every eigen-index is kept, so the main term is exact and the error vanishes
    return ProfilePoint(c, t, exact_tv, exact_tv, 0.0, gaussian_profile(realized), realized)
