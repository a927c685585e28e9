import logging
import math
from typing import NamedTuple

import numpy as np

from . chain import tv_distance, evolve, check_reversible
from . util import (JACOBI_MAX_STATES, JACOBI_TOL, JACOBI_MAX_SWEEPS, REVERSIBLE_TOL, PreconditionError,
                    ConvergenceError, SizeError, StateIndexError, as_float)

logger = logging.getLogger(__name__)

TRANSITIVE_TOL = 1e-9
UNIFORM_TOL = 1e-12
TIE_DECIMALS = 12


class Interval(NamedTuple):
    low: float
    high: float

    def contains(self, value, tol=0.0):
        return self.low - tol <= value <= self.high + tol


class EigenSystem:
    """
    Eigenvalues in descending order with pi-orthonormal eigenfunctions.

    eigenvectors[i] is the function f_i on the state space; index 0 is the
    trivial pair (1, constant 1).
    """

    def __init__(self, eigenvalues, eigenvectors, pi):
        self.eigenvalues = as_float(eigenvalues)
        self.eigenvectors = as_float(eigenvectors)
        self.pi = as_float(pi)
        self.size = len(self.eigenvalues)

    def __repr__(self):
        return f'EigenSystem(states={self.size}, gap={1 - self.eigenvalues[1] if self.size > 1 else 0:.6g})'

    def orthonormality_residual(self):
        gram = (self.eigenvectors * self.pi) @ self.eigenvectors.T
        return float(np.max(np.abs(gram - np.eye(self.size))))

    def kernel_residual(self, kernel):
        """max_i ||P f_i - lambda_i f_i|| in L2(pi), the norm in which every f_i has length one."""
        applied = as_float(kernel) @ self.eigenvectors.T
        defect = applied - self.eigenvectors.T * self.eigenvalues
        return float(np.max(np.sqrt(self.pi @ defect**2)))


def _off_norm(a):
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def jacobi_eigh(matrix, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi rotations on a symmetric matrix; returns (eigenvalues, column eigenvectors), unsorted."""
    a = np.array(matrix, dtype=float)
    size = a.shape[0]
    v = np.eye(size)
    for _ in range(max_sweeps):
        if _off_norm(a) < tol:
            return np.diag(a).copy(), v
        for p in range(size - 1):
            for q in range(p + 1, size):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                sign = 1.0 if theta >= 0 else -1.0
                t = sign / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    residual = _off_norm(a)
    if residual < tol:
        return np.diag(a).copy(), v
    raise ConvergenceError(f'Jacobi did not converge in {max_sweeps} sweeps (off-diagonal norm {residual:.3e})', residual=residual)


def _first_nonzero(vector, tol=1e-12):
    hits = np.flatnonzero(np.abs(vector) > tol)
    return int(hits[0]) if len(hits) else len(vector)


def symmetric_eigendecomposition(chain):
    if chain.size > JACOBI_MAX_STATES:
        raise SizeError(f'{chain.name}: {chain.size} states exceeds the Jacobi cap of {JACOBI_MAX_STATES}')
    report = check_reversible(chain, REVERSIBLE_TOL)
    if not report.holds:
        raise PreconditionError(f'{chain.name}: not reversible (max detailed-balance violation {report.max_violation:.3e})')

    pi = as_float(chain.stationary)
    root = np.sqrt(pi)
    sym = root[:, None] * as_float(chain.kernel) / root[None, :]
    sym = 0.5 * (sym + sym.T)
    values, vectors = jacobi_eigh(sym)
    functions = (vectors / root[:, None]).T

    for i in range(len(values)):
        lead = _first_nonzero(functions[i])
        if lead < chain.size and functions[i][lead] < 0:
            functions[i] = -functions[i]
    order = sorted(range(len(values)), key=lambda i: (-round(float(values[i]), TIE_DECIMALS), _first_nonzero(functions[i])))
    return EigenSystem(values[order], functions[order], pi)


def _index_set(es, I):
    I = sorted(set(int(i) for i in I))
    if 0 in I:
        raise PreconditionError('index set must exclude the trivial index 0')
    for i in I:
        if not (0 < i < es.size):
            raise StateIndexError(f'eigen-index {i} outside 1..{es.size - 1}')
    return I


def _complement(es, I):
    chosen = set(I)
    return [i for i in range(1, es.size) if i not in chosen]


def main_term(es, x, t, I):
    I = _index_set(es, I)
    if not (0 <= x < es.size):
        raise StateIndexError(f'state {x} outside 0..{es.size - 1}')
    if not I:
        return 0.0
    weights = es.eigenvectors[I, x] * es.eigenvalues[I] ** t
    inner = weights @ es.eigenvectors[I]
    return 0.5 * float(np.sum(es.pi * np.abs(inner)))


def error_term(es, x, t, I):
    rest = _complement(es, _index_set(es, I))
    if not (0 <= x < es.size):
        raise StateIndexError(f'state {x} outside 0..{es.size - 1}')
    if not rest:
        return 0.0
    return 0.5 * float(np.sum(np.abs(es.eigenvectors[rest, x]) * np.abs(es.eigenvalues[rest]) ** t))


def lemma1_sandwich(es, x, t, I):
    main = main_term(es, x, t, I)
    error = error_term(es, x, t, I)
    return Interval(main - error, main + error)


def _pair_sums(es, t, I):
    if not I:
        return np.zeros((es.size, es.size))
    F = es.eigenvectors[I]
    return (F.T * es.eigenvalues[I] ** t) @ F


def _spectral_error(es, t, I):
    rest = _complement(es, I)
    return 0.5 * float(np.sum(np.abs(es.eigenvalues[rest]) ** t)) if rest else 0.0


def transitive_tv_approx(es, t, I, chain=None):
    I = _index_set(es, I)
    if np.max(np.abs(es.pi - 1.0 / es.size)) > UNIFORM_TOL:
        raise PreconditionError('transitive approximation needs a uniform stationary distribution')
    if chain is not None:
        for s in (1, 2, 3):
            spread = [tv_distance(evolve(chain, x, s), chain.stationary) for x in range(chain.size)]
            if max(spread) - min(spread) > TRANSITIVE_TOL:
                logger.warning(f'{chain.name}: TV at t={s} differs across starting states by {max(spread) - min(spread):.3e}')
                break
    main = 0.5 * float(np.sum(np.abs(_pair_sums(es, t, I)))) / es.size**2
    return main, _spectral_error(es, t, I)


def typical_tv_approx(es, t, I):
    I = _index_set(es, I)
    main = 0.5 * float(es.pi @ np.abs(_pair_sums(es, t, I)) @ es.pi)
    return main, _spectral_error(es, t, I)


def typical_tv(chain, t):
    """Brute-force d_typ(t) = sum_x pi(x) d_TV(P^t(x, .), pi)."""
    total = 0.0
    for x in range(chain.size):
        total += float(chain.stationary[x]) * float(tv_distance(evolve(chain, x, t), chain.stationary))
    return total
