import logging
import math
from fractions import Fraction
from functools import cache
from typing import NamedTuple

import numpy as np

from . chain import ProfilePoint
from . special import poisson_profile
from . util import NumericError, PreconditionError, ScheduleError, SizeError, DomainError

logger = logging.getLogger(__name__)

PARTITION_MAX_N = 40
CHARACTER_MAX_N = 14
SANDWICH_TOL = 1e-12
# surrogate constant for the long-first-row correction
LONG_ROW_CONSTANT = 10
SHORT_ROW_RATE = 0.6
SHORT_ROW_THETA = 0.68


class FrobeniusCoords(NamedTuple):
    a: tuple
    b: tuple


class CycleType(NamedTuple):
    parts: tuple
    size: int

    @property
    def n(self):
        return sum(self.parts)

    @property
    def fixed_points(self):
        return self.parts.count(1)

    @property
    def parity(self):
        return (self.n - len(self.parts)) % 2


class CharacterTable(NamedTuple):
    partitions: list
    classes: list
    values: np.ndarray


class HoughEstimate(NamedTuple):
    value: Fraction
    error_bound: float
    exact_branch: bool


class ShortRowReport(NamedTuple):
    partition: tuple
    k: int
    ratio: float
    bound: float
    regime: str
    hypothesis: bool
    holds: bool


def _check_size(n, cap, what):
    if n > cap:
        raise SizeError(f'{what} is limited to n <= {cap}, got {n}')


def _check_partition(lam):
    lam = tuple(int(v) for v in lam)
    if not lam or any(v < 1 for v in lam) or any(u < v for u, v in zip(lam, lam[1:])):
        raise DomainError(f'not a partition: {lam}')
    return lam


@cache
def _partitions_bounded(n, largest):
    if n == 0:
        return ((),)
    found = []
    for first in range(min(n, largest), 0, -1):
        for rest in _partitions_bounded(n - first, first):
            found.append((first,) + rest)
    return tuple(found)


def partitions(n):
    """All partitions of n as weakly decreasing tuples, in ascending lexicographic order."""
    if n < 1:
        raise DomainError(f'n must be positive, got {n}')
    _check_size(n, PARTITION_MAX_N, 'partition enumeration')
    return sorted(_partitions_bounded(n, n))


def conjugate(lam):
    lam = _check_partition(lam)
    return tuple(sum(1 for v in lam if v > j) for j in range(lam[0]))


def frobenius_coordinates(lam):
    lam = _check_partition(lam)
    con = conjugate(lam)
    rank = sum(1 for i, v in enumerate(lam, 1) if v >= i)
    half = Fraction(1, 2)
    return FrobeniusCoords(tuple(lam[i - 1] - i + half for i in range(1, rank + 1)),
                           tuple(con[i - 1] - i + half for i in range(1, rank + 1)))


def hook_dimension(lam):
    lam = _check_partition(lam)
    n = sum(lam)
    _check_size(n, PARTITION_MAX_N, 'hook-length formula')
    con = conjugate(lam)
    hooks = math.prod(lam[i] - j + con[j] - i - 1 for i in range(len(lam)) for j in range(lam[i]))
    return math.factorial(n) // hooks


def _class_size(parts):
    n = sum(parts)
    denominator = 1
    for j in set(parts):
        m = parts.count(j)
        denominator *= j**m * math.factorial(m)
    return math.factorial(n) // denominator


@cache
def cycle_types(n):
    return tuple(CycleType(parts, _class_size(parts)) for parts in partitions(n))


@cache
def _mn(lam, rho):
    if not rho:
        return 1
    h, rest = rho[0], rho[1:]
    length = len(lam)
    beads = [lam[i] + length - 1 - i for i in range(length)]
    occupied = set(beads)
    total = 0
    for bead in beads:
        target = bead - h
        if target < 0 or target in occupied:
            continue
        sign = -1 if sum(1 for c in beads if target < c < bead) % 2 else 1
        moved = sorted((occupied - {bead}) | {target}, reverse=True)
        shape = tuple(v for v in (c - (length - 1 - j) for j, c in enumerate(moved)) if v > 0)
        total += sign * _mn(shape, rest)
    return total


def mn_character(lam, rho):
    """chi_lambda(rho) by removing border strips of the cycle lengths, longest first."""
    lam = _check_partition(lam)
    parts = rho.parts if isinstance(rho, CycleType) else tuple(rho)
    n = sum(lam)
    if sum(parts) != n:
        raise DomainError(f'shape {lam} and cycle type {parts} have different sizes')
    _check_size(n, CHARACTER_MAX_N, 'Murnaghan-Nakayama evaluation')
    return _mn(lam, tuple(sorted(parts, reverse=True)))


@cache
def character_table(n):
    shapes = partitions(n)
    classes = cycle_types(n)
    values = np.array([[mn_character(lam, cls) for cls in classes] for lam in shapes], dtype=object)
    return CharacterTable(shapes, list(classes), values)


def _kcycle_class(n, k):
    if not (1 <= k <= n):
        raise DomainError(f'cycle length must satisfy 1 <= k <= n, got k={k}, n={n}')
    return (k,) + (1,) * (n - k)


def character_ratio_exact(lam, k):
    lam = _check_partition(lam)
    n = sum(lam)
    return Fraction(mn_character(lam, _kcycle_class(n, k)), hook_dimension(lam))


def _falling(z, k):
    return math.prod(range(z - k + 1, z + 1)) if k <= z else 0


def character_ratio_hough(lam, k, strict=True):
    """
    Leading product P0 P1 P2 for the k-cycle character ratio of a long-first-row shape.

    The product is exact when r = n - lambda_1 < k; otherwise the reported error
    magnitude is exp(k log(k + r + 1) + 1 - k log(n - k)).
    """
    lam = _check_partition(lam)
    n = sum(lam)
    r = n - lam[0]
    if not (2 <= k < n):
        raise DomainError(f'cycle length must satisfy 2 <= k < n, got k={k}, n={n}')
    if not r + k + 1 < n / 3:
        message = f'{lam}, k={k}: r + k + 1 = {r + k + 1} is not below n/3 = {n / 3:.4g}'
        if strict:
            raise PreconditionError(message)
        logger.warning(message + '; evaluating anyway')

    con = conjugate(lam)
    rank = len(frobenius_coordinates(lam).a)
    value = Fraction(_falling(n - r - 1, k), _falling(n, k))
    for i in range(2, rank + 1):
        value *= 1 - Fraction(k, n - (1 + r + lam[i - 1] - i))
    for i in range(1, rank + 1):
        factor = 1 - Fraction(k, n - (r - con[i - 1] + i))
        if factor == 0:
            raise NumericError(f'{lam}, k={k}: Hough product is singular at column {i}')
        value /= factor

    exact = r < k
    error = 0.0 if exact else math.exp(k * math.log(k + r + 1) + 1 - k * math.log(n - k))
    return HoughEstimate(value, error, exact)


def t_r_polynomial(r, z):
    """T_r(z) = sum_{i=0}^r binom(z, r-i) (-1)^i / i!."""
    if r < 1:
        raise DomainError(f'degree must be at least 1, got {r}')
    if z < 0:
        raise DomainError(f'argument must be a nonnegative integer, got {z}')
    return sum((Fraction((-1)**i * math.comb(z, r - i), math.factorial(i)) for i in range(r + 1)), Fraction(0))


def f_c_function(c, m):
    if m < 0:
        raise DomainError(f'argument must be a nonnegative integer, got {m}')
    x = math.exp(-c)
    return math.exp(-x) * (1 + x)**m - 1


@cache
def derangements(m):
    if m < 0:
        raise DomainError(f'm must be nonnegative, got {m}')
    if m < 2:
        return 1 - m
    return (m - 1) * (derangements(m - 1) + derangements(m - 2))


def even_derangements(m):
    """Even fixed-point-free permutations of m points: (D_m + (-1)^(m-1) (m-1)) / 2."""
    sign = -1 if (m - 1) % 2 else 1
    return (derangements(m) + sign * (m - 1)) // 2


def fixed_point_counts(n, r):
    """(f, f'): permutations of n points with exactly r fixed points, in S_n and in A_n."""
    if not (0 <= r <= n):
        raise DomainError(f'need 0 <= r <= n, got r={r}, n={n}')
    _check_size(n, PARTITION_MAX_N, 'fixed-point counting')
    choose = math.comb(n, r)
    return choose * derangements(n - r), choose * even_derangements(n - r)


def _parity_fixed_point_counts(n, parity):
    counts = []
    for r in range(n + 1):
        total, even = fixed_point_counts(n, r)
        counts.append(even if parity == 0 else total - even)
    return counts


def dimension_sum(n, r):
    """sum of d_lambda over shapes with lambda_1 = n - r."""
    if not (0 <= r < n):
        raise DomainError(f'need 0 <= r < n, got r={r}, n={n}')
    return sum(hook_dimension(lam) for lam in partitions(n) if lam[0] == n - r)


def dimension_sum_bound(n, r):
    if not (1 <= r <= n):
        raise DomainError(f'need 1 <= r <= n, got r={r}, n={n}')
    return n**r * 2**r / r**(r / 2)


def dimension_sum_bound_large(n, r):
    if not (n / 3 <= r <= n):
        raise DomainError(f'need n/3 <= r <= n, got r={r}, n={n}')
    return n**(r / 2) * 4**r


def _target_parity(k, t):
    return ((k - 1) * t) % 2


def _check_walk(n, k):
    if not (2 <= k <= n):
        raise DomainError(f'cycle length must satisfy 2 <= k <= n, got k={k}, n={n}')
    _check_size(n, CHARACTER_MAX_N, 'exact k-cycle evaluation')


def _ratios(n, k):
    table = character_table(n)
    column = table.classes.index(CycleType(_kcycle_class(n, k), _class_size(_kcycle_class(n, k))))
    dims = [hook_dimension(lam) for lam in table.partitions]
    return table, dims, [Fraction(table.values[i, column], d) for i, d in enumerate(dims)]


def kcycle_distribution(n, k, t):
    """mu^{*t} as a class function: the mass of a single permutation in each class of cycle_types(n)."""
    _check_walk(n, k)
    if t < 0:
        raise PreconditionError(f'number of steps must be nonnegative, got {t}')
    table, dims, ratios = _ratios(n, k)
    weights = [d * s**t for d, s in zip(dims, ratios)]
    total = math.factorial(n)
    mass = np.array([sum((w * table.values[i, j] for i, w in enumerate(weights)), Fraction(0)) / total
                     for j in range(len(table.classes))], dtype=object)
    if any(v < 0 for v in mass):
        raise NumericError(f'k-cycle walk n={n}, k={k}, t={t} has negative mass')
    norm = sum(cls.size * v for cls, v in zip(table.classes, mass))
    if norm != 1:
        raise NumericError(f'k-cycle walk n={n}, k={k}, t={t} has total mass {norm}', residual=abs(norm - 1))
    return mass


def kcycle_exact_tv(n, k, t):
    """Exact TV distance to the uniform law on the permutations of the parity the walk lives on."""
    mass = kcycle_distribution(n, k, t)
    parity = _target_parity(k, t)
    target = Fraction(2, math.factorial(n))
    total = Fraction(0)
    for cls, v in zip(cycle_types(n), mass):
        total += cls.size * abs(v - (target if cls.parity == parity else 0))
    return total / 2


def _long_row_surrogate(n, k, r):
    if r < n / 3:
        return min(1.0, math.exp(-r * k / n) * (1 + LONG_ROW_CONSTANT * k * (r + 1)**2 / n**2))
    if k >= 6 * math.log(n):
        return math.exp(-SHORT_ROW_RATE * k)
    return math.exp(-SHORT_ROW_RATE * r * k / n)


def kcycle_error_term(n, k, t, M):
    """
    ET_M = sum d_lambda |s_lambda(k)|^t over lambda_1 <= n - M with lambda_1 >= lambda'_1.

    Exact through characters up to n = 14; beyond that the ratios are replaced by
    their asymptotic bounds and the value is not a certified bound.
    """
    if M < 1:
        raise PreconditionError(f'truncation level must be at least 1, got {M}')
    if not (2 <= k <= n):
        raise DomainError(f'cycle length must satisfy 2 <= k <= n, got k={k}, n={n}')
    if M > n:
        return Fraction(0)
    shapes = [lam for lam in partitions(n) if lam[0] <= n - M and lam[0] >= len(lam)]
    if n <= CHARACTER_MAX_N:
        return sum((hook_dimension(lam) * abs(character_ratio_exact(lam, k))**t for lam in shapes), Fraction(0))
    logger.warning(f'k-cycle error term at n={n}: asymptotic bound, not certified')
    return math.fsum(hook_dimension(lam) * _long_row_surrogate(n, k, n - lam[0])**t for lam in shapes)


def kcycle_main_term(n, k, t, M):
    """MT_M = (1/n!) sum over the parity class of |sum_{n-M < lambda_1 < n} d_lambda s_lambda^t chi_lambda(sigma)|."""
    _check_walk(n, k)
    if not (1 <= M <= n):
        raise PreconditionError(f'truncation level must satisfy 1 <= M <= n, got {M}')
    table, dims, ratios = _ratios(n, k)
    chosen = [i for i, lam in enumerate(table.partitions) if n - M < lam[0] < n]
    if not chosen:
        return Fraction(0)
    parity = _target_parity(k, t)
    total = Fraction(0)
    for j, cls in enumerate(table.classes):
        if cls.parity != parity:
            continue
        inner = sum((dims[i] * ratios[i]**t * table.values[i, j] for i in chosen), Fraction(0))
        total += cls.size * abs(inner)
    return total / math.factorial(n)


def kcycle_schedule(n, k, c):
    if not math.isfinite(c):
        raise PreconditionError(f'window coordinate must be finite, got {c}')
    raw = n / k * (math.log(n) + c)
    t = math.floor(raw + 0.5)
    if t < 1:
        raise ScheduleError(f'k-cycle n={n}, k={k}: c={c} gives the nonpositive time {raw:.4g}')
    return t


def kcycle_realized_c(n, k, t):
    return k * t / n - math.log(n)


def kcycle_profile_point(n, k, c, M=None):
    _check_walk(n, k)
    if M is None:
        M = n // 2
    if not (1 <= M <= n / 2):
        raise PreconditionError(f'truncation level must satisfy 1 <= M <= n/2, got {M}')
    t = kcycle_schedule(n, k, c)
    realized = kcycle_realized_c(n, k, t)
    exact_tv = float(kcycle_exact_tv(n, k, t))
    main = float(kcycle_main_term(n, k, t, M))
    error = float(kcycle_error_term(n, k, t, M))
    point = ProfilePoint(c, t, exact_tv, main, error, poisson_profile(realized), realized)
    if not point.sandwich_holds(SANDWICH_TOL):
        raise NumericError(f'k-cycle n={n}, k={k}: sandwich fails at c={c}', residual=abs(exact_tv - main) - error)
    return point


def short_row_bound_check(lam, k, n=None):
    """
    Compare |s_lambda(k)| with the short-row bound of the matching regime.

    For 6 log n <= k the bound is exp(-0.6 k) under a_1 <= e^-0.68 n; for smaller
    k it is exp(-0.6 r k / n) under r >= n/3. A failure with the hypothesis met is
    logged; the hypotheses are asymptotic, so nothing is raised.
    """
    lam = _check_partition(lam)
    n = sum(lam) if n is None else n
    if n != sum(lam):
        raise DomainError(f'{lam} is not a partition of {n}')
    if conjugate(lam)[0] > lam[0]:
        raise PreconditionError(f'{lam}: short-row bounds need lambda_1 >= lambda\'_1')
    ratio = abs(float(character_ratio_exact(lam, k)))
    r = n - lam[0]
    if k >= 6 * math.log(n):
        regime = 'k-large'
        bound = math.exp(-SHORT_ROW_RATE * k)
        hypothesis = float(frobenius_coordinates(lam).a[0]) <= math.exp(-SHORT_ROW_THETA) * n
    else:
        regime = 'k-small'
        bound = math.exp(-SHORT_ROW_RATE * r * k / n)
        hypothesis = r >= n / 3
    holds = ratio <= bound
    if hypothesis and not holds:
        logger.warning(f'{lam}, k={k}: |s| = {ratio:.6g} exceeds the {regime} bound {bound:.6g}')
    elif not hypothesis:
        logger.debug(f'{lam}, k={k}: {regime} hypothesis not met')
    return ShortRowReport(lam, k, ratio, bound, regime, hypothesis, holds)


def tr_main_term(n, c, M, parity):
    """(1/n!) sum over one parity class of |sum_{r=1}^{M-1} e^{-rc} T_r(Fix sigma)|."""
    if parity not in (0, 1):
        raise DomainError(f'parity must be 0 or 1, got {parity}')
    if M < 1:
        raise PreconditionError(f'truncation level must be at least 1, got {M}')
    counts = _parity_fixed_point_counts(n, parity)
    total = math.factorial(n)
    value = 0.0
    for fixed, count in enumerate(counts):
        if count:
            inner = math.fsum(math.exp(-r * c) * float(t_r_polynomial(r, fixed)) for r in range(1, M))
            value += count / total * abs(inner)
    return value


def parity_fixed_point_functional(n, c, parity):
    """(2/n!) sum over one parity class of |f_c(Fix sigma)|."""
    if parity not in (0, 1):
        raise DomainError(f'parity must be 0 or 1, got {parity}')
    counts = _parity_fixed_point_counts(n, parity)
    total = math.factorial(n)
    return math.fsum(2 * count / total * abs(f_c_function(c, fixed)) for fixed, count in enumerate(counts))
