import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from scipy import special

from cutoff.special import (krawtchouk_params, krawtchouk, krawtchouk_rows, krawtchouk_table,
                            krawtchouk_orthogonality_residual, log_binomial, binomial_pmf, binomial_pmf_vector,
                            tv_binomials, std_normal_cdf, gaussian_profile, tv_poissons, poisson_profile,
                            binomial_clt_gap, log_truncation_tail, truncation_tail, truncation_level)
from cutoff.util import DomainError, StateIndexError, PreconditionError

mpmath.mp.dps = 40


def test_krawtchouk_first_values():
    params = krawtchouk_params(5, 2)
    assert krawtchouk(params, 0, 3) == 1
    assert krawtchouk(params, 4, 0) == 1
    # K_1(x) = (n - x - x / alpha) / n
    assert krawtchouk(params, 1, 2) == Fraction(2, 5)


@pytest.mark.parametrize('alpha', [Fraction(1), Fraction(2), Fraction(1, 3)])
def test_krawtchouk_duality(alpha):
    params = krawtchouk_params(7, alpha)
    for i in range(8):
        for x in range(8):
            assert krawtchouk(params, i, x) == krawtchouk(params, x, i)


@pytest.mark.parametrize('alpha', [1, 2, Fraction(1, 3), Fraction(3, 2)])
def test_table_matches_direct_sum(alpha):
    params = krawtchouk_params(9, alpha)
    table = krawtchouk_table(params)
    for i in range(10):
        assert list(table[i]) == [krawtchouk(params, i, x) for x in range(10)]


def test_rows_are_scaled_integers():
    alpha = Fraction(2, 3)
    n = 6
    params = krawtchouk_params(n, alpha)
    for i, row in krawtchouk_rows(n, alpha):
        assert all(isinstance(v, int) for v in row)
        scale = alpha.denominator**i * alpha**i * math.comb(n, i)
        assert [Fraction(int(v)) for v in row] == [scale * krawtchouk(params, i, x) for x in range(n + 1)]


def test_rows_stop_early():
    assert [i for i, _ in krawtchouk_rows(10, 1, upto=3)] == [0, 1, 2, 3]
    assert [i for i, _ in krawtchouk_rows(10, 1, upto=0)] == [0]


def test_float_krawtchouk_close_to_exact():
    params = krawtchouk_params(12, Fraction(1, 3))
    for i in range(13):
        for x in range(13):
            assert krawtchouk(params, i, x, exact=False) == pytest.approx(float(krawtchouk(params, i, x)), rel=1e-9, abs=1e-9)


def test_orthogonality_residual():
    params = krawtchouk_params(6, 2)
    for i in range(7):
        for j in range(7):
            assert krawtchouk_orthogonality_residual(params, i, j) == 0
            assert abs(krawtchouk_orthogonality_residual(params, i, j, exact=False)) < 1e-12


def test_krawtchouk_domain():
    with pytest.raises(DomainError):
        krawtchouk_params(0, 1)
    with pytest.raises(DomainError):
        krawtchouk_params(4, 0)
    with pytest.raises(StateIndexError):
        krawtchouk(krawtchouk_params(4, 1), 5, 0)


def test_log_binomial():
    assert math.exp(log_binomial(10, 3)) == pytest.approx(120)
    assert log_binomial(5, 7) == -np.inf
    assert log_binomial(5, -1) == -np.inf


def test_binomial_pmfs():
    assert binomial_pmf(4, Fraction(1, 2), 2) == Fraction(3, 8)
    assert binomial_pmf(4, 0.5, 2) == pytest.approx(0.375)
    exact = binomial_pmf_vector(5, Fraction(1, 3))
    assert sum(exact) == 1
    assert np.allclose(binomial_pmf_vector(5, 1 / 3), [float(v) for v in exact], atol=1e-15)
    with pytest.raises(DomainError):
        binomial_pmf(3, 1.5, 1)


def test_tv_binomials():
    assert tv_binomials(1, Fraction(1, 2), Fraction(1, 3)) == Fraction(1, 6)
    assert tv_binomials(1, 0.5, 1 / 3) == pytest.approx(1 / 6)
    assert tv_binomials(30, 0.4, 0.4) == 0


@pytest.mark.parametrize('x', [-5.0, -1.3, 0.0, 0.2, 1.0, 3.7, 8.0])
def test_normal_cdf_against_mpmath(x):
    assert std_normal_cdf(x) == pytest.approx(float(mpmath.ncdf(x)), rel=1e-13, abs=1e-15)


@pytest.mark.parametrize('c', [-2.0, -1.0, 0.0, 1.0, 2.0, 5.0])
def test_gaussian_profile_against_mpmath(c):
    expected = mpmath.erf(mpmath.exp(-c) / (2 * mpmath.sqrt(2)))
    assert gaussian_profile(c) == pytest.approx(float(expected), abs=1e-13)


def test_gaussian_profile_vectorised_and_limits():
    values = gaussian_profile(np.array([-3.0, 0.0, 3.0]))
    assert values.shape == (3,)
    assert np.all(np.diff(values) < 0)
    assert gaussian_profile(-50.0) == pytest.approx(1.0)
    assert gaussian_profile(50.0) == pytest.approx(0.0, abs=1e-20)


def test_tv_poissons_against_direct_sum():
    expected = mpmath.mpf(0)
    for k in range(80):
        expected += abs(mpmath.exp(-2) * mpmath.mpf(2)**k - mpmath.exp(-1)) / mpmath.factorial(k)
    assert tv_poissons(2.0, 1.0) == pytest.approx(float(expected / 2), abs=1e-13)
    assert tv_poissons(1.0, 1.0) == 0.0
    assert poisson_profile(0.0) == pytest.approx(tv_poissons(2.0, 1.0))
    with pytest.raises(DomainError):
        tv_poissons(0.0, 1.0)


def test_binomial_clt_gap_small():
    assert binomial_clt_gap(10**4, 1, 1.0) < 0.05
    assert binomial_clt_gap(100, 2, 0.0) == 0.0
    with pytest.raises(DomainError):
        binomial_clt_gap(100, 0, 1.0)


@pytest.mark.slow
@pytest.mark.parametrize('y', [0.5, 1.0, 2.0])
def test_binomial_clt_gate(y):
    gaps = [binomial_clt_gap(n, 1, y) for n in (10**3, 10**4, 10**5, 10**6)]
    assert gaps[-1] <= 0.01
    assert all(b <= a + 2e-3 for a, b in zip(gaps, gaps[1:]))


def test_truncation_tail_against_mpmath():
    for c, M in [(0.0, 9), (1.0, 3), (-1.0, 12)]:
        expected = mpmath.nsum(lambda i: mpmath.exp(-c * i) / mpmath.sqrt(mpmath.factorial(i)), [M + 1, mpmath.inf])
        assert truncation_tail(c, M) == pytest.approx(float(expected), rel=1e-10)


def test_truncation_level():
    assert truncation_level(0.0, 1e-3) == 9
    assert truncation_tail(0.0, 9) < 1e-3 <= truncation_tail(0.0, 8)
    assert truncation_level(-2.0, 1e-3) > truncation_level(2.0, 1e-3)
    with pytest.raises(PreconditionError):
        truncation_level(0.0, 0.0)


@pytest.mark.parametrize('n', [pytest.param(n, marks=pytest.mark.slow) if n > 30 else n for n in range(1, 61)])
def test_float_krawtchouk_matches_exact_table(n):
    for alpha in (Fraction(1), Fraction(2), Fraction(1, 3)):
        params = krawtchouk_params(n, alpha)
        table = krawtchouk_table(params)
        for i in range(n + 1):
            for x in range(n + 1):
                assert krawtchouk(params, i, x, exact=False) == pytest.approx(float(table[i, x]), rel=1e-9)


def test_float_krawtchouk_large_n_reflects_small_alpha():
    # the integer path ends at n = 600; beyond it the log-domain sum takes over
    params = krawtchouk_params(700, Fraction(1, 3))
    for i, x in [(1, 5), (2, 350), (3, 699)]:
        exact = krawtchouk(params, i, x)
        assert krawtchouk(params, i, x, exact=False) == pytest.approx(float(exact), rel=1e-9, abs=1e-12)


def test_normal_cdf_grid_against_mpmath():
    grid = np.linspace(-8.0, 8.0, 1000)
    values = std_normal_cdf(grid)
    assert values.shape == (1000,)
    for x, value in zip(grid, values):
        assert value == pytest.approx(float(mpmath.ncdf(x)), rel=1e-13, abs=1e-16)
    assert np.all(np.diff(values) >= 0)


@pytest.mark.parametrize('n', [1, 7, 40, 300])
def test_tv_binomials_symmetric_and_bounded(n):
    rng = np.random.default_rng(n)
    for p, q in rng.uniform(0.01, 0.99, size=(20, 2)):
        value = tv_binomials(n, p, q)
        assert value == tv_binomials(n, q, p)
        assert 0.0 <= value <= 1.0
    assert tv_binomials(n, Fraction(1, 5), Fraction(2, 3)) == tv_binomials(n, Fraction(2, 3), Fraction(1, 5))


def test_tv_poissons_symmetric_and_bounded():
    rng = np.random.default_rng(8)
    for a, b in rng.uniform(0.05, 60.0, size=(40, 2)):
        value = tv_poissons(a, b)
        assert value == tv_poissons(b, a)
        assert 0.0 <= value <= 1.0
    assert tv_poissons(1.0, 500.0) == pytest.approx(1.0)


@pytest.mark.parametrize('profile', [gaussian_profile, poisson_profile])
def test_profiles_strictly_decrease(profile):
    values = [profile(c) for c in np.round(np.arange(-3.0, 3.0001, 0.1), 10)]
    assert len(values) == 61
    # near c = -3 the Gaussian profile is within an ulp of 1 and saturates
    assert all(b < a for a, b in zip(values, values[1:]) if a < 1.0)
    assert all(0.0 < v <= 1.0 for v in values)
    assert values[-1] < 0.1


def test_tv_poissons_grows_with_rate_gap():
    values = [tv_poissons(1.0 + s, 1.0) for s in np.linspace(0.01, 20.0, 200)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_binomial_pmf_stirling_at_a_million():
    n = 10**6
    # the central term of Bin(n, 1/2) is sqrt(2 / (pi n)) (1 - 1/(4n) + ...)
    expected = math.sqrt(2 / (math.pi * n)) * (1 - 1 / (4 * n))
    assert binomial_pmf(n, 0.5, n // 2) == pytest.approx(expected, rel=1e-9)
    # local limit: the law of Bin(n, p) near its mean is the normal density
    p = 0.3
    sd = math.sqrt(n * p * (1 - p))
    for z in (-2.0, 0.0, 1.5):
        k = round(n * p + z * sd)
        density = math.exp(-0.5 * ((k - n * p) / sd)**2) / (sd * math.sqrt(2 * math.pi))
        assert binomial_pmf(n, p, k) == pytest.approx(density, rel=1e-2)
    assert binomial_pmf_vector(n, 0.5).sum() == pytest.approx(1.0, abs=1e-12)


def test_truncation_tail_reaches_a_distant_peak():
    # at c = -5 the terms peak near i = e^10, far past any fixed scan length after M
    c = -5.0
    i = np.arange(2, 200000, dtype=float)
    expected = special.logsumexp(-c * i - 0.5 * special.gammaln(i + 1))
    assert log_truncation_tail(c, 1) == pytest.approx(expected, rel=1e-12)
    assert truncation_tail(c, 1) == math.inf
    beyond = 40000
    i = np.arange(beyond + 1, 200000, dtype=float)
    assert log_truncation_tail(c, beyond) == pytest.approx(special.logsumexp(-c * i - 0.5 * special.gammaln(i + 1)), rel=1e-12)


def test_truncation_level_past_a_distant_peak():
    M = truncation_level(-5.0, 1e-3)
    assert M > math.exp(10)
    assert truncation_tail(-5.0, M) < 1e-3 <= truncation_tail(-5.0, M - 1)
    with pytest.raises(PreconditionError):
        truncation_tail(-20.0, 1)
