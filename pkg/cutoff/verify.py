import math
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . chain import evolve, tv_distance, random_reversible_chain, random_circulant_chain, cycle_chain
from . gelfand import (ehrenfest_structure, ehrenfest_step_law, ehrenfest_coefficients, ehrenfest_chain,
                       ehrenfest_distances, spherical_fourier_transform, fourier_inversion, hom_exact_tv,
                       hom_main_term, hom_error_term)
from . hypercube import hypercube_chain
from . report import RunRecord, write_table
from . special import krawtchouk_params, krawtchouk_table, binomial_clt_gap
from . spectral import symmetric_eigendecomposition, lemma1_sandwich, typical_tv, typical_tv_approx, transitive_tv_approx
from . symmetric import (partitions, hook_dimension, character_table, t_r_polynomial, f_c_function,
                         derangements, fixed_point_counts)
from . util import SEED, SUITES, UsageError

SANDWICH_TOL = 1e-9
MAX_REPORTED = 20
CLT_SIZES = (10**3, 10**4, 10**5, 10**6)
CLT_SHIFTS = (0.5, 1.0, 2.0)
CLT_GATE = 0.01
CLT_NOISE = 2e-3
PROP_TERMS = 60
PROP_TOL = 1e-8


class SuiteResult(NamedTuple):
    suite: str
    checks: int
    failures: list

    @property
    def passed(self):
        return not self.failures


class _Tally:
    def __init__(self, suite):
        self.suite = suite
        self.checks = 0
        self.failures = []

    def check(self, ok, **payload):
        self.checks += 1
        if not ok:
            self.failures.append({'suite': self.suite, **payload})
        return ok

    def result(self):
        return SuiteResult(self.suite, self.checks, self.failures)


def _random_subset(rng, size):
    return [i for i in range(1, size) if rng.random() < 0.5]


def verify_lemma1(chains=200, variant_chains=50, seed=SEED):
    tally = _Tally('lemma1')
    rng = np.random.default_rng(seed)
    for trial in range(chains):
        chain = random_reversible_chain(int(rng.integers(2, 13)), rng)
        es = symmetric_eigendecomposition(chain)
        x, t = int(rng.integers(chain.size)), int(rng.integers(0, 51))
        I = _random_subset(rng, chain.size)
        exact = float(tv_distance(evolve(chain, x, t), chain.stationary))
        bounds = lemma1_sandwich(es, x, t, I)
        tally.check(bounds.contains(exact, SANDWICH_TOL), check='sandwich', trial=trial, size=chain.size, x=x, t=t,
                    I=I, exact=exact, low=bounds.low, high=bounds.high)

    for trial in range(variant_chains):
        chain = random_reversible_chain(int(rng.integers(2, 13)), rng)
        es = symmetric_eigendecomposition(chain)
        t = int(rng.integers(0, 51))
        I = _random_subset(rng, chain.size)
        main, error = typical_tv_approx(es, t, I)
        exact = typical_tv(chain, t)
        tally.check(abs(exact - main) <= error + SANDWICH_TOL, check='typical', trial=trial, size=chain.size, t=t,
                    I=I, exact=exact, main=main, error=error)

    transitive = [cycle_chain(size) for size in range(3, 9)] + [hypercube_chain(n) for n in (1, 2, 3)]
    transitive += [random_circulant_chain(int(rng.integers(2, 9)), rng) for _ in range(variant_chains)]
    for chain in transitive:
        es = symmetric_eigendecomposition(chain)
        t = int(rng.integers(0, 51))
        I = _random_subset(rng, chain.size)
        main, error = transitive_tv_approx(es, t, I, chain=chain)
        exact = float(tv_distance(evolve(chain, 0, t), chain.stationary))
        tally.check(abs(exact - main) <= error + SANDWICH_TOL, check='transitive', chain=chain.name, t=t, I=I,
                    exact=exact, main=main, error=error)
    return tally.result()


def verify_krawtchouk(max_n=20, alphas=(Fraction(1), Fraction(2), Fraction(1, 3))):
    tally = _Tally('krawtchouk')
    for alpha in alphas:
        for n in range(1, max_n + 1):
            table = krawtchouk_table(krawtchouk_params(n, alpha))
            weights = np.array([alpha**x * math.comb(n, x) for x in range(n + 1)], dtype=object)
            gram = (table * weights) @ table.T
            for i in range(n + 1):
                for j in range(n + 1):
                    expected = (alpha + 1)**n / (alpha**i * math.comb(n, i)) if i == j else 0
                    residual = gram[i, j] - expected
                    tally.check(residual == 0, check='orthogonality', n=n, alpha=str(alpha), i=i, j=j,
                                residual=str(residual))
    return tally.result()


def verify_characters(max_n=12, orthogonality_n=10, identity_n=10, max_r=4):
    tally = _Tally('characters')
    for n in range(1, max_n + 1):
        total = sum(hook_dimension(lam)**2 for lam in partitions(n))
        tally.check(total == math.factorial(n), check='dimension squares', n=n, total=total)

    for n in range(1, orthogonality_n + 1):
        table = character_table(n)
        gram = table.values.T @ table.values
        for a, first in enumerate(table.classes):
            for b in range(len(table.classes)):
                expected = math.factorial(n) // first.size if a == b else 0
                tally.check(gram[a, b] == expected, check='column orthogonality', n=n,
                            classes=[first.parts, table.classes[b].parts], value=int(gram[a, b]))

    for n in range(2, identity_n + 1):
        table = character_table(n)
        for r in range(1, min(max_r, n - 1) + 1):
            rows = [(i, hook_dimension(lam[1:])) for i, lam in enumerate(table.partitions) if lam[0] == n - r]
            for j, cls in enumerate(table.classes):
                if max(cls.parts) <= r:
                    continue
                value = Fraction(sum(d * table.values[i, j] for i, d in rows), math.factorial(r))
                expected = t_r_polynomial(r, cls.fixed_points)
                tally.check(value == expected, check='T_r identity', n=n, r=r, cycle_type=cls.parts,
                            value=str(value), expected=str(expected))

    for c in (0.0, 1.0, 2.0):
        for m in range(11):
            series = math.fsum(math.exp(-r * c) * float(t_r_polynomial(r, m)) for r in range(1, PROP_TERMS + 1))
            tally.check(abs(series - f_c_function(c, m)) <= PROP_TOL, check='T_r series', c=c, m=m, series=series)

    for m in range(13):
        formula = math.factorial(m) * sum(Fraction((-1)**j, math.factorial(j)) for j in range(m + 1))
        tally.check(formula == derangements(m), check='derangements', m=m)
        if m >= 2:
            total, even = fixed_point_counts(m, 0)
            tally.check(abs(Fraction(even, total) - Fraction(1, 2)) == Fraction(m - 1, 2 * total),
                        check='even derangements', m=m, even=even, total=total)
    return tally.result()


def verify_gelfand(max_n=12, max_m=4, oracle_pairs=((3, 1), (3, 2), (4, 1), (4, 2)), max_t=8):
    tally = _Tally('gelfand')
    for n in range(1, max_n + 1):
        for m in range(1, max_m + 1):
            s = ehrenfest_structure(n, m)
            worst = s.residuals().max()
            tally.check(worst == 0, check='structure', n=n, m=m, residual=worst)
            coeffs = spherical_fourier_transform(ehrenfest_step_law(n, m), s)
            tally.check(list(coeffs) == list(ehrenfest_coefficients(n)), check='transform', n=n, m=m)

    for n, m in oracle_pairs:
        s = ehrenfest_structure(n, m)
        coeffs = ehrenfest_coefficients(n)
        chain = ehrenfest_chain(n, m)
        labels = ehrenfest_distances(n, m)
        for t in range(max_t + 1):
            point = fourier_inversion(s, coeffs, t)
            dist = evolve(chain, 0, t)
            tally.check(all(dist[x] == point[labels[x]] for x in range(chain.size)), check='inversion', n=n, m=m, t=t)
            exact = hom_exact_tv(s, coeffs, t)
            tally.check(exact == tv_distance(dist, chain.stationary), check='exact tv', n=n, m=m, t=t)
            for top in range(0, n + 1):
                I = list(range(1, top + 1))
                main, error = hom_main_term(s, coeffs, t, I), hom_error_term(s, coeffs, t, I)
                tally.check(abs(float(exact - main)) <= error + SANDWICH_TOL, check='sandwich', n=n, m=m, t=t, I=I)
    return tally.result()


def verify_binomial_clt():
    tally = _Tally('binomial-clt')
    for y in CLT_SHIFTS:
        gaps = [binomial_clt_gap(n, 1, y) for n in CLT_SIZES]
        tally.check(gaps[-1] <= CLT_GATE, check='gap', y=y, n=CLT_SIZES[-1], gap=gaps[-1])
        for (a, ga), (b, gb) in zip(zip(CLT_SIZES, gaps), zip(CLT_SIZES[1:], gaps[1:])):
            tally.check(gb <= ga + CLT_NOISE, check='trend', y=y, sizes=[a, b], gaps=[ga, gb])
    return tally.result()


SUITE_RUNNERS = {
    'lemma1': verify_lemma1,
    'krawtchouk': verify_krawtchouk,
    'characters': verify_characters,
    'gelfand': verify_gelfand,
    'binomial-clt': verify_binomial_clt,
}


def run_suites(suite, stats=None):
    if suite not in SUITES:
        raise UsageError(f'unknown suite {suite!r}; choose from {", ".join(SUITES)}')
    names = [name for name in SUITES if name != 'all'] if suite == 'all' else [suite]
    results = []
    for name in names:
        if stats is None:
            results.append(SUITE_RUNNERS[name]())
        else:
            with stats.duration(f'verify {name}'):
                results.append(SUITE_RUNNERS[name]())
    return results


def cmd_verify(settings):
    results = run_suites(settings.suite, settings.stats)
    rows = []
    failures = []
    for result in results:
        status = 'pass' if result.passed else 'FAIL'
        settings.logger.info(f'{result.suite}: {result.checks} checks, {len(result.failures)} failures: {status}')
        for failure in result.failures[:MAX_REPORTED]:
            settings.logger.warning(f'{result.suite}: counterexample {failure}')
        rows.append((result.suite, result.checks, len(result.failures), result.passed))
        failures.extend(result.failures[:MAX_REPORTED])
    passed = all(result.passed for result in results)
    write_table(RunRecord.from_settings(settings), ('suite', 'checks', 'failures', 'passed'), rows, settings,
                footer={'passed': passed, 'counterexamples': failures})
    return 0 if passed else 1
