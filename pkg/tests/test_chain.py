from fractions import Fraction

import numpy as np
import pytest

from cutoff.chain import (Chain, ProfilePoint, tv_distance, evolve, evolve_distribution, tv_profile_exact,
                          check_reversible, stationary_by_power_iteration, two_state_chain, cycle_chain,
                          identity_chain, random_reversible_chain, random_circulant_chain)
from cutoff.util import DimensionError, StateIndexError, PreconditionError, NumericError, SizeError, EVOLVE_MAX_STATES


def test_two_state_exact_curve():
    a, b = Fraction(1, 3), Fraction(1, 4)
    chain = two_state_chain(a, b, exact=True)
    assert list(chain.stationary) == [Fraction(3, 7), Fraction(4, 7)]
    profile = tv_profile_exact(chain, 0, range(6))
    assert [t for t, _ in profile] == list(range(6))
    assert [d for _, d in profile] == [Fraction(5, 12)**t * Fraction(4, 7) for t in range(6)]


def test_two_state_float_matches_exact():
    exact = two_state_chain(Fraction(1, 3), Fraction(1, 4), exact=True)
    approx = two_state_chain(1 / 3, 1 / 4)
    for t in (0, 1, 5, 20):
        assert float(tv_distance(evolve(exact, 1, t), exact.stationary)) == pytest.approx(
            tv_distance(evolve(approx, 1, t), approx.stationary), abs=1e-12)


def test_evolve_one_step_is_kernel_row():
    chain = cycle_chain(5, exact=True)
    assert list(evolve(chain, 2, 1)) == list(chain.kernel[2])
    assert list(evolve(chain, 2, 0)) == [0, 0, 1, 0, 0]


def test_evolve_distribution_is_linear():
    rng = np.random.default_rng(7)
    chain = random_reversible_chain(6, rng)
    mix = 0.25 * chain.point_mass(0) + 0.75 * chain.point_mass(4)
    expected = 0.25 * evolve(chain, 0, 9) + 0.75 * evolve(chain, 4, 9)
    assert np.allclose(evolve_distribution(chain, mix, 9), expected, atol=1e-14)


def test_power_iteration_finds_stationary():
    kernel = np.array([[0.7, 0.3], [0.2, 0.8]])
    assert np.allclose(stationary_by_power_iteration(kernel), [0.4, 0.6], atol=1e-10)
    chain = Chain(kernel)
    assert np.allclose(chain.stationary, [0.4, 0.6], atol=1e-10)


def test_periodic_chain_stationary_by_power_iteration():
    flip = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(stationary_by_power_iteration(flip), [0.5, 0.5])


def test_random_reversible_exact_chain_is_consistent():
    rng = np.random.default_rng(3)
    chain = random_reversible_chain(5, rng, exact=True)
    assert chain.exact
    assert check_reversible(chain).holds
    assert check_reversible(chain).max_violation == 0.0
    assert sum(chain.stationary) == 1


def test_directed_cycle_is_not_reversible():
    kernel = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
    chain = Chain(kernel, np.full(3, 1 / 3))
    report = check_reversible(chain)
    assert not report
    assert report.max_violation == pytest.approx(1 / 6)
    assert not chain.reversible


def test_circulant_chain_is_transitive():
    rng = np.random.default_rng(11)
    chain = random_circulant_chain(7, rng)
    curves = [tv_distance(evolve(chain, x, 4), chain.stationary) for x in range(chain.size)]
    assert max(curves) - min(curves) < 1e-12


def test_tv_distance_exact_and_float():
    assert tv_distance(np.array([Fraction(1), Fraction(0)], dtype=object),
                       np.array([Fraction(1, 2), Fraction(1, 2)], dtype=object)) == Fraction(1, 2)
    assert tv_distance([0.2, 0.8], [0.5, 0.5]) == pytest.approx(0.3)
    with pytest.raises(DimensionError):
        tv_distance([1.0], [0.5, 0.5])


def test_kernel_must_be_square():
    with pytest.raises(DimensionError):
        Chain(np.ones((2, 3)) / 3)


def test_rows_must_be_distributions():
    with pytest.raises(NumericError):
        Chain(np.array([[0.5, 0.6], [0.5, 0.5]]), [0.5, 0.5])
    with pytest.raises(NumericError):
        Chain(np.array([[1.2, -0.2], [0.5, 0.5]]), [0.5, 0.5])


def test_stationary_must_be_invariant():
    kernel = np.array([[0.7, 0.3], [0.2, 0.8]])
    with pytest.raises(NumericError) as info:
        Chain(kernel, [0.5, 0.5])
    assert info.value.residual > 0
    with pytest.raises(DimensionError):
        Chain(kernel, [1.0])


def test_exact_chain_needs_stationary():
    kernel = np.array([[Fraction(1, 2), Fraction(1, 2)], [Fraction(1, 2), Fraction(1, 2)]], dtype=object)
    with pytest.raises(PreconditionError):
        Chain(kernel)


def test_bad_state_and_steps():
    chain = identity_chain(3)
    with pytest.raises(StateIndexError):
        evolve(chain, 3, 1)
    with pytest.raises(PreconditionError):
        evolve(chain, 0, -1)
    with pytest.raises(PreconditionError):
        tv_profile_exact(chain, 0, [3, 1])


def test_evolve_size_cap():
    size = EVOLVE_MAX_STATES + 1
    chain = Chain.__new__(Chain)
    chain.size, chain.name = size, 'big'
    with pytest.raises(SizeError):
        evolve_distribution(chain, np.zeros(size), 1)


def test_profile_point_gap_and_sandwich():
    point = ProfilePoint(c=0.0, t=3, exact_tv=0.4, main_term=0.35, error_term=0.06, limit_value=0.38, realized_c=0.01)
    assert point.gap == pytest.approx(0.02)
    assert point.sandwich_holds()
    assert not point._replace(error_term=0.01).sandwich_holds()


def random_distribution(rng, size):
    return rng.dirichlet(np.full(size, 0.5))


@pytest.mark.parametrize('seed', range(20))
def test_tv_distance_is_a_metric(seed):
    rng = np.random.default_rng(seed)
    size = int(rng.integers(2, 12))
    for _ in range(25):
        p, q, r = (random_distribution(rng, size) for _ in range(3))
        assert tv_distance(p, q) == tv_distance(q, p)
        assert 0.0 <= tv_distance(p, q) <= 1.0
        assert tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r) + 1e-15
        assert tv_distance(p, p) == 0.0


def test_tv_distance_is_a_metric_exactly():
    rng = np.random.default_rng(17)
    for _ in range(50):
        p, q, r = (np.array([Fraction(int(w), int(weights.sum())) for w in weights], dtype=object)
                   for weights in (rng.integers(0, 20, size=5) + 1 for _ in range(3)))
        assert tv_distance(p, q) == tv_distance(q, p)
        assert tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r)


@pytest.mark.parametrize('seed', [1, 2, 3])
def test_evolve_semigroup_exact(seed):
    rng = np.random.default_rng(seed)
    chain = random_reversible_chain(5, rng, exact=True)
    for x in range(chain.size):
        for s in range(4):
            for t in range(4):
                assert list(evolve(chain, x, s + t)) == list(evolve_distribution(chain, evolve(chain, x, s), t))


def test_evolve_semigroup_float():
    rng = np.random.default_rng(4)
    chain = random_reversible_chain(10, rng)
    for s, t in [(0, 7), (3, 4), (11, 9)]:
        assert np.allclose(evolve(chain, 2, s + t), evolve_distribution(chain, evolve(chain, 2, s), t), atol=1e-14)


@pytest.mark.parametrize('seed', range(10))
def test_random_chains_converge(seed):
    rng = np.random.default_rng(seed)
    chain = random_reversible_chain(8, rng)
    times = [0, 1, 2, 5, 10, 50, 10 * chain.size**2]
    distances = [d for _, d in tv_profile_exact(chain, int(rng.integers(8)), times)]
    assert distances[-1] < 0.2
    assert all(b <= a + 1e-14 for a, b in zip(distances, distances[1:]))
