import itertools
import logging
import math
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy import special

from . chain import Chain, ProfilePoint
from . special import (krawtchouk_rows, krawtchouk_table, krawtchouk_params, log_binomial, binomial_pmf_vector,
                       tv_binomials, gaussian_profile, truncation_level)
from . util import (EPSILON, EVOLVE_MAX_STATES, DimensionError, DomainError, NumericError, PreconditionError,
                    ScheduleError, SizeError, StateIndexError, is_exact)

logger = logging.getLogger(__name__)

STRUCTURE_MAX_N = 300
INVERSION_TOL = 1e-10
SANDWICH_TOL = 1e-9


class StructureResiduals(NamedTuple):
    normalization: float
    orthogonality: float
    dimension_sum: float

    def max(self):
        return max(self)


class SphericalStructure:
    """
    Orbit-indexed spherical data of a distance-regular homogeneous space.

    values[i, l] is the spherical function phi_i on the orbit at distance l from
    the base point; orbit_sizes[l] counts its points and dimensions[i] is the
    dimension of the i-th spherical representation.
    """

    def __init__(self, orbit_sizes, values, dimensions, name='structure'):
        self.orbit_sizes = [int(w) for w in orbit_sizes]
        self.values = values
        self.dimensions = [int(d) for d in dimensions]
        self.name = name
        self.size = len(self.orbit_sizes)
        self.space_size = sum(self.orbit_sizes)
        self.exact = is_exact(values)
        if values.shape != (self.size, self.size) or len(self.dimensions) != self.size:
            raise DimensionError(f'{name}: {self.size} orbits but a {values.shape} table and {len(self.dimensions)} dimensions')

    def __repr__(self):
        return f'SphericalStructure({self.name!r}, orbits={self.size}, points={self.space_size})'

    def residuals(self):
        """Worst deviation from phi normalisation, orthogonality and sum d_i = |X|."""
        values = self.values
        normal = max(max(abs(v - 1) for v in values[0]), max(abs(v - 1) for v in values[:, 0]))
        weights = np.array(self.orbit_sizes, dtype=object)
        gram = (values * weights) @ values.T
        expected = np.array([[Fraction(self.space_size, d) if i == j else 0 for j in range(self.size)]
                             for i, d in enumerate(self.dimensions)], dtype=object)
        orthogonal = max(abs(v) for v in (gram - expected).ravel())
        if not self.exact:
            orthogonal /= self.space_size
        return StructureResiduals(float(normal), float(orthogonal), float(abs(sum(self.dimensions) - self.space_size)))


def _check_coefficients(s, coeffs):
    if len(coeffs) != s.size:
        raise DimensionError(f'{s.name}: {len(coeffs)} coefficients for {s.size} orbits')


def spherical_fourier_transform(mu, s):
    """mu~(i) = sum_l mu(l) phi_i(l) for a step law given as mass per orbit."""
    if len(mu) != s.size:
        raise DimensionError(f'{s.name}: step law over {len(mu)} orbits, expected {s.size}')
    if s.exact and is_exact(mu):
        return np.array([sum((m * v for m, v in zip(mu, row)), Fraction(0)) for row in s.values], dtype=object)
    return np.asarray(s.values, dtype=float) @ np.asarray(mu, dtype=float)


def _powers(coeffs, t):
    if is_exact(coeffs):
        return np.array([Fraction(v)**t for v in coeffs], dtype=object)
    return np.asarray(coeffs, dtype=float)**t


def _weighted_sums(s, coeffs, t, I):
    """Sigma(l) = sum_{i in I} d_i phi_i(l) mu~(i)^t."""
    powered = _powers(coeffs, t)
    exact = s.exact and is_exact(coeffs)
    sums = np.zeros(s.size, dtype=object if exact else float)
    if exact:
        sums[:] = Fraction(0)
    values = s.values if exact else np.asarray(s.values, dtype=float)
    for i in I:
        sums = sums + s.dimensions[i] * powered[i] * values[i]
    return sums


def _index_set(s, I):
    I = sorted(set(int(i) for i in I))
    if 0 in I:
        raise PreconditionError('index set must exclude the trivial index 0')
    for i in I:
        if not (0 < i < s.size):
            raise StateIndexError(f'{s.name}: spherical index {i} outside 1..{s.size - 1}')
    return I


def fourier_inversion(s, coeffs, t):
    """Point probability on each orbit after t steps from the base point."""
    _check_coefficients(s, coeffs)
    if t < 0:
        raise PreconditionError(f'number of steps must be nonnegative, got {t}')
    sums = _weighted_sums(s, coeffs, t, range(1, s.size))
    if is_exact(sums):
        point = (1 + sums) / s.space_size
        total = sum(w * p for w, p in zip(s.orbit_sizes, point))
        if any(p < 0 for p in point) or total != 1:
            raise NumericError(f'{s.name}: inversion is not a distribution at t={t}', residual=abs(total - 1))
        return point
    point = (1.0 + sums) / s.space_size
    total = float(np.dot(s.orbit_sizes, point))
    if point.min() * s.space_size < -INVERSION_TOL or abs(total - 1) > INVERSION_TOL:
        raise NumericError(f'{s.name}: inversion is not a distribution at t={t} (mass {total:.12g})', residual=abs(total - 1))
    return point


def _half_weighted_abs(s, sums):
    if is_exact(sums):
        return sum((w * abs(v) for w, v in zip(s.orbit_sizes, sums)), Fraction(0)) / (2 * s.space_size)
    return 0.5 * math.fsum(w * abs(v) for w, v in zip(s.orbit_sizes, sums)) / s.space_size


def hom_exact_tv(s, coeffs, t):
    _check_coefficients(s, coeffs)
    return _half_weighted_abs(s, _weighted_sums(s, coeffs, t, range(1, s.size)))


def hom_main_term(s, coeffs, t, I):
    _check_coefficients(s, coeffs)
    return _half_weighted_abs(s, _weighted_sums(s, coeffs, t, _index_set(s, I)))


def hom_error_term(s, coeffs, t, I):
    _check_coefficients(s, coeffs)
    chosen = set(_index_set(s, I))
    rest = [i for i in range(1, s.size) if i not in chosen]
    return 0.5 * math.fsum(math.sqrt(s.dimensions[i]) * abs(float(coeffs[i]))**t for i in rest)


def _check_urns(n, m):
    if n < 1 or m < 1:
        raise DomainError(f'need n >= 1 balls and m >= 1, got n={n}, m={m}')


def ehrenfest_structure(n, m, exact=True):
    """Distance orbits of {0..m}^n: w_l = m^l binom(n,l), d_i = m^i binom(n,i), phi_i = K_i(.; alpha = m)."""
    _check_urns(n, m)
    if n > STRUCTURE_MAX_N:
        raise SizeError(f'ehrenfest({n},{m}): spherical tables are limited to n <= {STRUCTURE_MAX_N}')
    sizes = [m**ell * math.comb(n, ell) for ell in range(n + 1)]
    table = krawtchouk_table(krawtchouk_params(n, m), exact=exact)
    return SphericalStructure(sizes, table, sizes, name=f'ehrenfest({n},{m})')


def ehrenfest_step_law(n, m):
    """Orbit masses of one step: stay with 1/(m+1), otherwise move to distance 1."""
    _check_urns(n, m)
    law = np.full(n + 1, Fraction(0), dtype=object)
    law[0] = Fraction(1, m + 1)
    law[1] = Fraction(m, m + 1)
    return law


def ehrenfest_coefficients(n, exact=True):
    if exact:
        return np.array([1 - Fraction(i, n) for i in range(n + 1)], dtype=object)
    return 1.0 - np.arange(n + 1) / n


def ehrenfest_states(n, m):
    return list(itertools.product(range(m + 1), repeat=n))


def ehrenfest_chain(n, m):
    """Full chain on {0..m}^n: hold with 1/(m+1), else relabel one ball to one of the other m urns."""
    _check_urns(n, m)
    size = (m + 1)**n
    if size > EVOLVE_MAX_STATES:
        raise SizeError(f'ehrenfest({n},{m}): {size} states exceeds the oracle cap of {EVOLVE_MAX_STATES}')
    states = ehrenfest_states(n, m)
    index = {x: i for i, x in enumerate(states)}
    kernel = np.full((size, size), Fraction(0), dtype=object)
    hold, move = Fraction(1, m + 1), Fraction(1, n * (m + 1))
    for i, x in enumerate(states):
        kernel[i, i] = hold
        for j in range(n):
            for urn in range(m + 1):
                if urn != x[j]:
                    kernel[i, index[x[:j] + (urn,) + x[j + 1:]]] += move
    stationary = np.full(size, Fraction(1, size), dtype=object)
    return Chain(kernel, stationary, reversible=True, name=f'ehrenfest-full({n},{m})')


def ehrenfest_distances(n, m):
    """Orbit label (number of balls away from urn 0) of every state, in ehrenfest_states order."""
    return np.array([sum(1 for v in x if v) for x in ehrenfest_states(n, m)])


def _orbit_rates(n, m, exact):
    if exact:
        ell = [Fraction(v) for v in range(n + 1)]
        down = np.array([v / n / (m + 1) for v in ell], dtype=object)
        up = np.array([(n - v) / n * m / (m + 1) for v in ell], dtype=object)
    else:
        ell = np.arange(n + 1)
        down = ell / n / (m + 1)
        up = (n - ell) / n * m / (m + 1)
    return down, up, 1 - down - up


def ehrenfest_orbit_chain(n, m, exact=False):
    """Birth-death chain of the distance from the base point."""
    _check_urns(n, m)
    if n + 1 > EVOLVE_MAX_STATES:
        raise SizeError(f'ehrenfest({n},{m}): {n + 1} orbits exceeds the dense kernel cap of {EVOLVE_MAX_STATES}')
    down, up, stay = _orbit_rates(n, m, exact)
    kernel = np.zeros((n + 1, n + 1), dtype=object if exact else float)
    if exact:
        kernel[:] = Fraction(0)
    for ell in range(n + 1):
        kernel[ell, ell] = stay[ell]
        if ell > 0:
            kernel[ell, ell - 1] = down[ell]
        if ell < n:
            kernel[ell, ell + 1] = up[ell]
    p = Fraction(m, m + 1)
    stationary = binomial_pmf_vector(n, p if exact else float(p), exact=exact)
    return Chain(kernel, stationary, reversible=True, name=f'ehrenfest-orbits({n},{m})')


def ehrenfest_tv_curve(n, m, times):
    """Exact d_TV(t) from the base point by evolving the distance chain in O(n) per step."""
    _check_urns(n, m)
    times = sorted(set(int(t) for t in times))
    if times and times[0] < 0:
        raise PreconditionError(f'number of steps must be nonnegative, got {times[0]}')
    down, up, stay = _orbit_rates(n, m, exact=False)
    target = binomial_pmf_vector(n, m / (m + 1))
    law = np.zeros(n + 1)
    law[0] = 1.0
    now = 0
    curve = []
    for t in times:
        for _ in range(t - now):
            moved = law * stay
            moved[1:] += law[:-1] * up[:-1]
            moved[:-1] += law[1:] * down[1:]
            law = moved
        now = t
        curve.append((t, 0.5 * float(np.sum(np.abs(law - target)))))
    return curve


def ehrenfest_exact_tv(n, m, t):
    return ehrenfest_tv_curve(n, m, [t])[0][1]


def ehrenfest_schedule(n, m, c):
    _check_urns(n, m)
    if not math.isfinite(c):
        raise PreconditionError(f'window coordinate must be finite, got {c}')
    raw = 0.5 * n * math.log(n * m) + c * n
    t = math.floor(raw + 0.5)
    if t < 1:
        raise ScheduleError(f'ehrenfest({n},{m}): c={c} gives the nonpositive time {raw:.4g}')
    return t


def ehrenfest_realized_c(n, m, t):
    return t / n - 0.5 * math.log(n * m)


def ehrenfest_main_term(n, m, t, M, exact=False):
    """
    Main term for I = {1..M}: (1/2) (m+1)^-n sum_l w_l |sum_{i<=M} R_i(l) (n-i)^t| / n^t.

    d_i phi_i(l) is the integer Krawtchouk row R_i(l) at alpha = m, so the sum is exact.
    """
    _check_urns(n, m)
    if M < 1:
        raise PreconditionError(f'truncation level must be at least 1, got {M}')
    if t < 0:
        raise PreconditionError(f'number of steps must be nonnegative, got {t}')
    inner = np.zeros(n + 1, dtype=object)
    for i, row in krawtchouk_rows(n, m, upto=min(M, n)):
        if i:
            inner = inner + row * (n - i)**t
    numerator = sum(m**ell * math.comb(n, ell) * abs(int(inner[ell])) for ell in range(n + 1))
    denominator = 2 * (m + 1)**n * n**t
    return Fraction(numerator, denominator) if exact else numerator / denominator


def ehrenfest_error_term(n, m, t, M):
    """(1/2) sum_{i>M} sqrt(d_i) (1 - i/n)^t, summed in the log domain."""
    _check_urns(n, m)
    if M < 1:
        raise PreconditionError(f'truncation level must be at least 1, got {M}')
    # mu~(n) = 0 drops out once t >= 1
    i = np.arange(M + 1, n + 1 if t == 0 else n)
    if not len(i):
        return 0.0
    logs = 0.5 * (i * math.log(m) + log_binomial(n, i))
    if t:
        logs = logs + t * np.log1p(-i / n)
    return 0.5 * float(np.exp(special.logsumexp(logs)))


def ehrenfest_adjusted_main_term(n, m, c):
    """MT' with alpha = m: 2 d_TV(Bin(n, p(1 - e^-c / sqrt(mn))), Bin(n, p)), p = m/(m+1)."""
    _check_urns(n, m)
    p = m / (m + 1)
    return 2 * tv_binomials(n, p * (1 - math.exp(-c) / math.sqrt(m * n)), p)


def ehrenfest_profile_point(n, m, c, M=None, epsilon=EPSILON):
    t = ehrenfest_schedule(n, m, c)
    realized = ehrenfest_realized_c(n, m, t)
    if M is None:
        M = truncation_level(realized, epsilon)
        logger.debug(f'ehrenfest({n},{m}): c={c} realized={realized:.6g} t={t} M={M}')
    exact_tv = ehrenfest_exact_tv(n, m, t)
    main = ehrenfest_main_term(n, m, t, M)
    error = ehrenfest_error_term(n, m, t, M)
    point = ProfilePoint(c, t, exact_tv, main, error, gaussian_profile(realized), realized)
    if not point.sandwich_holds(SANDWICH_TOL):
        raise NumericError(f'ehrenfest({n},{m}): sandwich fails at c={c}', residual=abs(exact_tv - main) - error)
    return point
