import math
from fractions import Fraction
from functools import cache
from typing import NamedTuple

import numpy as np
from scipy import special, stats

from . util import DomainError, StateIndexError, PreconditionError

POISSON_TAIL_SIGMAS = 40
POISSON_TAIL_PAD = 20
KRAWTCHOUK_INTEGER_MAX_N = 600
TRUNCATION_SCAN = 10**4
# half-width of the summed window around the largest term, in units of sqrt(e^(-2c) + 1)
TRUNCATION_SPREAD = 20
TRUNCATION_MAX_PEAK = 1e10


class KrawtchoukParams(NamedTuple):
    n: int
    alpha: Fraction

    @property
    def p(self):
        return self.alpha / (self.alpha + 1)


def krawtchouk_params(n, alpha):
    alpha = Fraction(alpha)
    if n < 1:
        raise DomainError(f'Krawtchouk degree bound n must be at least 1, got {n}')
    if alpha <= 0:
        raise DomainError(f'odds alpha must be positive, got {alpha}')
    return KrawtchoukParams(n, alpha)


def log_binomial(n, k):
    """log binom(n, k), vectorised; -inf outside 0 <= k <= n."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    inside = (k >= 0) & (k <= n)
    with np.errstate(invalid='ignore'):
        value = special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)
    return np.where(inside, value, -np.inf)


def _binom(n, k):
    return math.comb(n, k) if 0 <= k <= n else 0


def _check_index(params, *indices):
    for v in indices:
        if not (0 <= v <= params.n):
            raise StateIndexError(f'Krawtchouk index {v} outside 0..{params.n}')


def krawtchouk(params, i, x, exact=True):
    """
    K_i(x) = binom(n,i)^-1 sum_j binom(x,j) binom(n-x,i-j) (-1/alpha)^j.

    Binomials vanish outside 0 <= r <= N, so the j-range may be taken loosely.
    Float mode sums the scaled integers and rounds once up to n = KRAWTCHOUK_INTEGER_MAX_N,
    and sums log-binomials beyond it.
    """
    _check_index(params, i, x)
    n, alpha = params
    if exact:
        total = sum(Fraction(_binom(x, j) * _binom(n - x, i - j)) * (-1 / alpha) ** j for j in range(i + 1))
        return total / math.comb(n, i)

    if n <= KRAWTCHOUK_INTEGER_MAX_N:
        a, b = alpha.numerator, alpha.denominator
        total = sum(_binom(x, j) * _binom(n - x, i - j) * (-b)**j * a**(i - j) for j in range(i + 1))
        return total / (a**i * math.comb(n, i))

    # K_i(x; alpha) = (-1/alpha)^i K_i(n - x; 1/alpha) keeps the alternating terms at most 1
    sign, scale = 1.0, 0.0
    if alpha < 1:
        sign, scale = (-1.0)**i, -i * math.log(alpha)
        x, alpha = n - x, 1 / alpha
    j = np.arange(max(0, i - (n - x)), min(i, x) + 1)
    logs = log_binomial(x, j) + log_binomial(n - x, i - j) - j * math.log(alpha) - log_binomial(n, i) + scale
    signs = np.where(j % 2 == 0, 1.0, -1.0)
    return sign * math.fsum(signs * np.exp(logs))


def krawtchouk_rows(n, alpha, upto=None):
    """
    Yield (i, R_i) for i = 0..upto where R_i(y) = b^i alpha^i binom(n,i) K_i(y), y = 0..n.

    alpha = a/b in lowest terms; the R_i are exact integer vectors (object arrays).
    They come from the three-term recurrence in i of the generating function
    sum_i alpha^i binom(n,i) K_i(y) w^i = (1 - w)^y (1 + alpha w)^(n-y).
    """
    alpha = Fraction(alpha)
    a, b = alpha.numerator, alpha.denominator
    upto = n if upto is None else min(upto, n)
    y = np.arange(n + 1, dtype=object)
    prev = np.ones(n + 1, dtype=object)
    yield 0, prev
    if upto < 1:
        return
    cur = a * (n - y) - b * y
    yield 1, cur
    for i in range(1, upto):
        nxt = ((a * (n - y) - b * y - (a - b) * i) * cur - a * b * (n - i + 1) * prev) // (i + 1)
        prev, cur = cur, nxt
        yield i + 1, cur


def krawtchouk_table(params, exact=True):
    """Table K[i, x] of all Krawtchouk values, exact Fractions or correctly rounded floats."""
    n, alpha = params
    a = alpha.numerator
    table = np.empty((n + 1, n + 1), dtype=object)
    for i, row in krawtchouk_rows(n, alpha):
        scale = a**i * math.comb(n, i)
        table[i] = [Fraction(int(v), scale) for v in row]
    return table if exact else table.astype(float)


def krawtchouk_orthogonality_residual(params, i, j, exact=True):
    _check_index(params, i, j)
    n, alpha = params
    if exact:
        total = sum(krawtchouk(params, i, x) * krawtchouk(params, j, x) * alpha**x * math.comb(n, x) for x in range(n + 1))
        expected = (alpha + 1)**n / (alpha**i * math.comb(n, i)) if i == j else 0
        return total - expected
    values = [krawtchouk(params, i, x, exact=False) * krawtchouk(params, j, x, exact=False) for x in range(n + 1)]
    weights = np.exp(np.arange(n + 1) * math.log(alpha) + log_binomial(n, np.arange(n + 1)) - n * math.log(alpha + 1))
    total = math.fsum(np.asarray(values) * weights)
    expected = math.exp(-i * math.log(alpha) - float(log_binomial(n, i))) if i == j else 0.0
    return total - expected


def _check_probability(p, what='p'):
    if not (0 < p < 1):
        raise DomainError(f'{what} must lie in (0, 1), got {p}')


def binomial_pmf(n, p, k):
    _check_probability(p)
    if isinstance(p, Fraction):
        return Fraction(_binom(n, k)) * p**k * (1 - p)**(n - k)
    return float(stats.binom.pmf(k, n, float(p)))


def binomial_pmf_vector(n, p, exact=None):
    _check_probability(p)
    if exact is None:
        exact = isinstance(p, Fraction)
    if exact:
        p = Fraction(p)
        return np.array([Fraction(math.comb(n, k)) * p**k * (1 - p)**(n - k) for k in range(n + 1)], dtype=object)
    return stats.binom.pmf(np.arange(n + 1), n, float(p))


def tv_binomials(n, p, q):
    _check_probability(p)
    _check_probability(q, 'q')
    if isinstance(p, Fraction) and isinstance(q, Fraction):
        return sum((abs(u - v) for u, v in zip(binomial_pmf_vector(n, p), binomial_pmf_vector(n, q))), Fraction(0)) / 2
    return 0.5 * math.fsum(np.abs(binomial_pmf_vector(n, float(p)) - binomial_pmf_vector(n, float(q))))


def std_normal_cdf(x):
    value = 0.5 * special.erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(value) if np.ndim(value) == 0 else value


def gaussian_profile(c):
    with np.errstate(over='ignore'):
        z = 0.5 * np.exp(-np.asarray(c, dtype=float))
    value = 2.0 * std_normal_cdf(z) - 1.0
    return float(value) if np.ndim(value) == 0 else value


def poisson_pmf(rate, k):
    if rate <= 0:
        raise DomainError(f'Poisson rate must be positive, got {rate}')
    return float(stats.poisson.pmf(k, rate))


def poisson_truncation(a, b):
    top = max(a, b)
    return int(math.ceil(top + POISSON_TAIL_SIGMAS * math.sqrt(top) + POISSON_TAIL_PAD))


def tv_poissons(a, b):
    if a <= 0 or b <= 0:
        raise DomainError(f'Poisson rates must be positive, got {a} and {b}')
    if a == b:
        return 0.0
    k = np.arange(poisson_truncation(a, b) + 1)
    return 0.5 * math.fsum(np.abs(stats.poisson.pmf(k, a) - stats.poisson.pmf(k, b)))


def poisson_profile(c):
    return tv_poissons(1.0 + math.exp(-c), 1.0)


def binomial_clt_gap(n, alpha, y):
    if n < 1:
        raise DomainError(f'n must be at least 1, got {n}')
    if alpha <= 0:
        raise DomainError(f'alpha must be positive, got {alpha}')
    alpha = float(alpha)
    p = alpha / (alpha + 1)
    shifted = p - p * y / math.sqrt(alpha * n)
    _check_probability(shifted, 'perturbed p')
    if y == 0:
        return 0.0
    return abs(tv_binomials(n, shifted, p) - (2 * std_normal_cdf(0.5 * abs(y)) - 1))


def log_truncation_tail(c, M):
    """log sum_{i > M} e^(-c i) / sqrt(i!), summed over the window of i where the terms matter."""
    if M < 0:
        raise PreconditionError(f'truncation level must be nonnegative, got {M}')
    if -2 * c > math.log(TRUNCATION_MAX_PEAK):
        raise PreconditionError(f'window coordinate c={c} puts the largest tail term beyond i={TRUNCATION_MAX_PEAK:.0e}')
    # terms rise until i ~ e^(-2c) and fall faster than geometrically after it
    peak = math.exp(-2 * c)
    spread = TRUNCATION_SPREAD * math.sqrt(peak + 1)
    lo = max(M + 1, math.floor(peak - spread))
    hi = max(lo, math.ceil(peak + spread)) + TRUNCATION_SCAN
    i = np.arange(lo, hi, dtype=float)
    # the skipped terms in (M, lo) sit about e^-100 below the largest one
    return float(special.logsumexp(-c * i - 0.5 * special.gammaln(i + 1)))


def truncation_tail(c, M):
    """sum_{i > M} e^(-c i) / sqrt(i!); inf once the sum leaves the float range."""
    with np.errstate(over='ignore'):
        return float(np.exp(log_truncation_tail(c, M)))


@cache
def truncation_level(c, epsilon):
    """Smallest M >= 1 with sum_{i > M} e^(-c i) / sqrt(i!) < epsilon."""
    if epsilon <= 0:
        raise PreconditionError(f'epsilon must be positive, got {epsilon}')
    if truncation_tail(c, 1) < epsilon:
        return 1
    # the tail is decreasing in M: double past the answer, then bisect
    lo, hi = 1, 2
    while truncation_tail(c, hi) >= epsilon:
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if truncation_tail(c, mid) < epsilon:
            hi = mid
        else:
            lo = mid
    return hi
