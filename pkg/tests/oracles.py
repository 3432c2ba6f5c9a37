"""Independent reference computations used to check the library.

Everything here is brute force: explicit enumeration of permutations,
direct sums over ballots, and bounded scalar minimization from scipy.  None
of it calls into the library's dynamic programs or rate solvers.
"""

from __future__ import annotations

import math
from itertools import permutations

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import multinomial


def inversions(perm_positions, ref_positions) -> int:
    """Number of candidate pairs ordered differently by two position vectors."""
    M = len(perm_positions)
    return sum(
        (perm_positions[a] - perm_positions[b]) * (ref_positions[a] - ref_positions[b]) < 0
        for a in range(M)
        for b in range(a + 1, M)
    )


def mallows_enumeration(M: int, phi: float, ref_positions=None):
    """Every ranking as a position vector with its normalized Mallows probability."""
    ref = tuple(range(M)) if ref_positions is None else tuple(ref_positions)
    rows, weights = [], []
    for order in permutations(range(M)):
        pos = [0] * M
        for k, c in enumerate(order):
            pos[c] = k
        d = inversions(pos, ref)
        rows.append(pos)
        weights.append(1.0 if d == 0 else (phi**d if phi > 0 else 0.0))
    w = np.array(weights)
    return np.array(rows), w / w.sum()


def joint_positions(M, phi, i, j, ref_positions=None) -> np.ndarray:
    rows, w = mallows_enumeration(M, phi, ref_positions)
    p = np.zeros((M, M))
    np.add.at(p, (rows[:, i], rows[:, j]), w)
    return p


def position_cdfs(M, phi, ref_positions=None) -> np.ndarray:
    rows, w = mallows_enumeration(M, phi, ref_positions)
    pmf = np.zeros((M, M))
    for c in range(M):
        np.add.at(pmf[c], rows[:, c], w)
    return np.cumsum(pmf, axis=1)


def score_diff(M, phi, beta, i, j, ref_positions=None):
    """Support and probabilities of ``beta[pos_i] - beta[pos_j]`` by enumeration."""
    rows, w = mallows_enumeration(M, phi, ref_positions)
    beta = np.asarray(beta, dtype=float)
    d = beta[rows[:, i]] - beta[rows[:, j]]
    vals, inv = np.unique(np.round(d, 12), return_inverse=True)
    return vals, np.bincount(inv, weights=w)


def brute_rate(values, probs, zmax=200.0) -> float:
    """``-min_z log E exp(z D)`` over z <= 0 by bounded Brent minimization.

    The log-MGF is convex, so a coarse grid locates the basin before the
    bounded solve.
    """
    values = np.asarray(values, dtype=float)
    probs = np.asarray(probs, dtype=float)
    keep = probs > 0
    values, probs = values[keep], probs[keep]
    if values.min() >= 0:
        return math.inf if probs[values == 0].sum() == 0 else -math.log(probs[values == 0].sum())

    def f(z):
        a = z * values
        m = a.max()
        return m + math.log(np.sum(probs * np.exp(a - m)))

    grid = -np.geomspace(1e-6, zmax, 4000)
    a = grid[:, None] * values[None, :]
    m = a.max(axis=1)
    k = int(np.argmin(m + np.log(np.exp(a - m[:, None]) @ probs)))
    lo = grid[min(k + 1, len(grid) - 1)]
    hi = grid[max(k - 1, 0)]
    res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
    return -min(res.fun, f(grid[k]))


def approval_closed_form(ti, tj) -> float:
    return -math.log(1.0 - (math.sqrt(ti) - math.sqrt(tj)) ** 2)


def pair_error_exact(values, probs, N) -> float:
    """``Pr(sum of N draws < 0) + Pr(sum == 0) / 2`` for a three-point D in {-1, 0, 1}."""
    vals = list(np.round(values, 12))
    pp = probs[vals.index(1.0)] if 1.0 in vals else 0.0
    pm = probs[vals.index(-1.0)] if -1.0 in vals else 0.0
    p0 = 1.0 - pp - pm
    err = 0.0
    for a in range(N + 1):
        b = np.arange(0, N - a + 1)
        pmf = multinomial.pmf(np.stack([np.full_like(b, a), b, N - a - b], axis=1), N, [pp, pm, p0])
        err += pmf[b > a].sum() + 0.5 * pmf[b == a].sum()
    return float(err)


def disjoint_rankings():
    """The five-voter profile with disjoint 1- and 2-Approval winners.

    Candidates A..D are 0..3; returns best-first orders.
    """
    return [(0, 1, 2, 3), (0, 1, 2, 3), (3, 2, 1, 0), (3, 2, 1, 0), (1, 2, 3, 0)]
