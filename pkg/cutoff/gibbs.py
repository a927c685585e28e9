import logging
import math
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy import special, stats

from . chain import Chain, ProfilePoint
from . spectral import EigenSystem
from . special import (krawtchouk_rows, krawtchouk_table, krawtchouk_params, log_binomial, binomial_pmf_vector,
                       tv_binomials, gaussian_profile, truncation_level)
from . util import (EPSILON, EVOLVE_MAX_STATES, DomainError, PreconditionError, NumericError, ScheduleError,
                    SizeError)

logger = logging.getLogger(__name__)

EIGEN_MAX_N = 600
SANDWICH_TOL = 1e-9
# dyadic precision of the series parameter w in the exact MT' series
SERIES_BITS = 96
SERIES_CUTOFF_LOG2 = -60


class GibbsModel(NamedTuple):
    n1: int
    n2: int
    p: Fraction

    @property
    def n(self):
        return self.n1 + self.n2

    @property
    def alpha(self):
        return self.p / (1 - self.p)

    def __str__(self):
        return f'gibbs(n1={self.n1}, n2={self.n2}, p={self.p})'


class GibbsHypotheses(NamedTuple):
    min_side: float
    centering: float


def _as_probability(p):
    if isinstance(p, float):
        # 0.3 means 3/10, not the nearest binary fraction
        return Fraction(repr(p))
    return Fraction(p)


def gibbs_model(n1, n2, p):
    p = _as_probability(p)
    if int(n1) != n1 or int(n2) != n2 or n1 < 1 or n2 < 1:
        raise DomainError(f'n1 and n2 must be positive integers, got {n1} and {n2}')
    if not (0 < p < 1):
        raise DomainError(f'p must lie in (0, 1), got {p}')
    return GibbsModel(int(n1), int(n2), p)


def gibbs_hypotheses(model):
    """The two growth diagnostics behind the limit profile: min{p, 1-p} n and alpha n."""
    p = float(model.p)
    found = GibbsHypotheses(min(p, 1 - p) * model.n, float(model.alpha) * model.n)
    logger.debug(f'{model}: min(p,1-p)*n={found.min_side:.6g} alpha*n={found.centering:.6g}')
    return found


def posterior_matrix(model, exact=False):
    """H[x, theta]: hypergeometric posterior of theta given x; p cancels."""
    n, n1, n2 = model.n, model.n1, model.n2
    if exact:
        return np.array([[Fraction(math.comb(n1, th) * math.comb(n2, x - th), math.comb(n, x)) if 0 <= x - th <= n2 else Fraction(0)
                          for th in range(n1 + 1)] for x in range(n + 1)], dtype=object)
    x = np.arange(n + 1)[:, None]
    theta = np.arange(n1 + 1)[None, :]
    return stats.hypergeom.pmf(theta, n, n1, x)


def noise_matrix(model, exact=False):
    """B[theta, x']: the law of theta + eps with eps ~ Bin(n2, p)."""
    n, n1, n2 = model.n, model.n1, model.n2
    if exact:
        noise = binomial_pmf_vector(n2, model.p, exact=True)
        out = np.full((n1 + 1, n + 1), Fraction(0), dtype=object)
        for th in range(n1 + 1):
            out[th, th:th + n2 + 1] = noise
        return out
    theta = np.arange(n1 + 1)[:, None]
    y = np.arange(n + 1)[None, :]
    return stats.binom.pmf(y - theta, n2, float(model.p))


def gibbs_kernel(model, exact=False):
    if model.n + 1 > EVOLVE_MAX_STATES:
        raise SizeError(f'{model}: {model.n + 1} states exceeds the dense kernel cap of {EVOLVE_MAX_STATES}')
    kernel = posterior_matrix(model, exact) @ noise_matrix(model, exact)
    stationary = binomial_pmf_vector(model.n, model.p if exact else float(model.p), exact=exact)
    return Chain(kernel, stationary, name=str(model))


def gibbs_eigenvalues(model):
    """Exact lambda_i = prod_{j<i} (n1 - j)/(n - j), zero from i = n1 + 1 on."""
    values = [Fraction(1)]
    for j in range(model.n):
        values.append(values[-1] * Fraction(model.n1 - j, model.n - j))
    return values


def _float_krawtchouk(model):
    """Float K[i, x] from the exact integer rows, each entry correctly rounded."""
    n = model.n
    a = model.alpha.numerator
    table = np.empty((n + 1, n + 1))
    for i, row in krawtchouk_rows(n, model.alpha):
        scale = a**i * math.comb(n, i)
        table[i] = [int(v) / scale for v in row]
    return table


def gibbs_eigensystem(model):
    n = model.n
    if n > EIGEN_MAX_N:
        raise SizeError(f'{model}: closed-form eigensystem is limited to n <= {EIGEN_MAX_N}')
    i = np.arange(n + 1)
    scale = np.exp(0.5 * i * math.log(model.alpha) + 0.5 * log_binomial(n, i))
    functions = _float_krawtchouk(model) * scale[:, None]
    values = np.array([float(v) for v in gibbs_eigenvalues(model)])
    return EigenSystem(values, functions, binomial_pmf_vector(n, float(model.p)))


def gibbs_kernel_residual(model, exact=False):
    """Exact mode: max |P K_i - lambda_i K_i| over the rational K_i. Float mode: the L2(pi) defect of the normalised f_i."""
    if exact:
        kernel = gibbs_kernel(model, exact=True).kernel
        table = krawtchouk_table(krawtchouk_params(model.n, model.alpha))
        values = gibbs_eigenvalues(model)
        worst = Fraction(0)
        for k, lam in enumerate(values):
            residual = kernel @ table[k] - lam * table[k]
            worst = max(worst, max(abs(v) for v in residual))
        return worst
    return gibbs_eigensystem(model).kernel_residual(gibbs_kernel(model).kernel)


def _log_rate(model):
    return math.log(model.n / model.n1)


def gibbs_mixing_schedule(model, c):
    if not math.isfinite(c):
        raise PreconditionError(f'window coordinate must be finite, got {c}')
    raw = (0.5 * math.log(float(model.alpha) * model.n) + c) / _log_rate(model)
    t = math.floor(raw + 0.5)
    if t <= 0:
        raise ScheduleError(f'{model}: c={c} gives the nonpositive time {raw:.4g}')
    return t


def gibbs_realized_c(model, t):
    return t * _log_rate(model) - 0.5 * math.log(float(model.alpha) * model.n)


def _check_truncation(model, M):
    if M < 1:
        raise PreconditionError(f'truncation level must be at least 1, got {M}')
    return min(M, model.n)


def gibbs_error_term(model, t, M):
    """
    (ET, ET') for I = {1..M} started at 0:
    ET = sum_{i>M} |f_i(0)| lambda_i^t and ET' = sum_{i>M} |f_i(0)| lambda_1^(it).
    """
    M = _check_truncation(model, M)
    n, n1 = model.n, model.n1
    if M >= n:
        return 0.0, 0.0
    i = np.arange(M + 1, n + 1)
    log_f0 = 0.5 * i * math.log(model.alpha) + 0.5 * log_binomial(n, i)
    bound = log_f0 + i * t * math.log(n1 / n)

    alive = i <= n1
    if t == 0:
        # lambda_i^0 = 1 even past n1
        et = float(np.exp(special.logsumexp(log_f0)))
    elif alive.any():
        ii = i[alive]
        # log lambda_i = sum_{j<i} log(n1 - j) - log(n - j)
        log_lam = special.gammaln(n1 + 1) - special.gammaln(n1 - ii + 1) - special.gammaln(n + 1) + special.gammaln(n - ii + 1)
        et = float(np.exp(special.logsumexp(log_f0[alive] + t * log_lam)))
    else:
        et = 0.0
    et_bound = float(np.exp(special.logsumexp(bound)))
    if et > et_bound * (1 + 1e-12):
        raise NumericError(f'{model}: ET={et:.6g} exceeds its bound {et_bound:.6g}', residual=et - et_bound)
    return et, et_bound


def gibbs_main_term(model, t, M, exact=False):
    """
    MT = sum_x pi(x) |sum_{i=1}^M f_i(0) f_i(x) lambda_i^t|, without the factor 1/2.

    f_i(0) f_i(x) = R_i(x) / b^i with R_i the integer Krawtchouk rows, so with
    D = b^M ((n)_M)^t the inner sum is S(x)/D for an integer S(x) and the whole
    term is one exact fraction.
    """
    if t < 0:
        raise PreconditionError(f'number of steps must be nonnegative, got {t}')
    M = _check_truncation(model, M)
    n, n1 = model.n, model.n1
    a, b = model.alpha.numerator, model.alpha.denominator

    inner = np.zeros(n + 1, dtype=object)
    falling_n1 = 1
    for i, row in krawtchouk_rows(n, model.alpha, upto=M):
        if i == 0:
            continue
        falling_n1 *= n1 - i + 1
        # lambda_i^0 = 1 even once (n1)_i vanishes
        if falling_n1 == 0 and t > 0:
            break
        # ((n)_M / (n)_i)^t
        tail = math.prod(range(n - M + 1, n - i + 1))
        inner = inner + row * (falling_n1**t * tail**t * b**(M - i))

    denominator = b**M * math.prod(range(n - M + 1, n + 1))**t * (a + b)**n
    numerator = sum(math.comb(n, x) * a**x * b**(n - x) * abs(int(inner[x])) for x in range(n + 1))
    value = Fraction(numerator, denominator)
    return value if exact else numerator / denominator


def gibbs_adjusted_main_term(model, c):
    """MT' = 2 d_TV(Bin(n, p(1 - e^-c / sqrt(alpha n))), Bin(n, p))."""
    p = float(model.p)
    shifted = p * (1 - math.exp(-c) / math.sqrt(float(model.alpha) * model.n))
    return 2 * tv_binomials(model.n, shifted, p)


def gibbs_adjusted_main_term_series(model, c):
    """
    MT' from its defining series (alpha + 1)^-n sum_x alpha^x binom(n,x) |sum_{i>=1} R_i(x) w^i / b^i|
    with w = e^-c / sqrt(alpha n), summed in integers after rounding w to a dyadic rational.
    """
    n = model.n
    a, b = model.alpha.numerator, model.alpha.denominator
    w = math.exp(-c) / math.sqrt(float(model.alpha) * n)
    W = int(round(w * 2**SERIES_BITS))
    if W == 0:
        return 0.0

    # inner(x) = sum_i R_i(x) (W / (b 2^s))^i, kept as a numerator over (b 2^s)^top
    step = b << SERIES_BITS
    inner = np.zeros(n + 1, dtype=object)
    top = 0
    previous = math.inf
    for i, row in krawtchouk_rows(n, model.alpha):
        if i == 0:
            continue
        inner = inner * step + row * W**i
        top = i
        size = math.log2(max(abs(int(v)) for v in row)) + i * (math.log2(W) - math.log2(step))
        if size < SERIES_CUTOFF_LOG2 and size < previous:
            break
        previous = size

    denominator = step**top * (a + b)**n
    numerator = sum(math.comb(n, x) * a**x * b**(n - x) * abs(int(inner[x])) for x in range(n + 1))
    return numerator / denominator


def gibbs_tv_curve(model, times, start=0):
    """Exact d_TV(t) from start by evolving through the factored kernel, never forming P."""
    times = sorted(set(int(t) for t in times))
    if times and times[0] < 0:
        raise PreconditionError(f'number of steps must be nonnegative, got {times[0]}')
    posterior = posterior_matrix(model)
    noise = noise_matrix(model)
    target = binomial_pmf_vector(model.n, float(model.p))
    dist = np.zeros(model.n + 1)
    dist[start] = 1.0
    now = 0
    curve = []
    for t in times:
        for _ in range(t - now):
            dist = (dist @ posterior) @ noise
        now = t
        curve.append((t, 0.5 * float(np.sum(np.abs(dist - target)))))
    return curve


def gibbs_profile_point(model, c, M=None, epsilon=EPSILON):
    t = gibbs_mixing_schedule(model, c)
    realized = gibbs_realized_c(model, t)
    if M is None:
        M = truncation_level(realized, epsilon)
        logger.debug(f'{model}: c={c} realized={realized:.6g} t={t} M={M}')
    exact_tv = gibbs_tv_curve(model, [t])[0][1]
    main = 0.5 * gibbs_main_term(model, t, M)
    error = 0.5 * gibbs_error_term(model, t, M)[0]
    point = ProfilePoint(c, t, exact_tv, main, error, gaussian_profile(realized), realized)
    if not point.sandwich_holds(SANDWICH_TOL):
        raise NumericError(f'{model}: sandwich fails at c={c}: |{exact_tv:.6g} - {main:.6g}| > {error:.6g}',
                           residual=abs(exact_tv - main) - error)
    return point
