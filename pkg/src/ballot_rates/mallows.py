"""Exact Mallows-model computations.

Rankings are built by repeated insertion: items are inserted in reference
order, and the item that brings the list to length ``m`` lands in position
``j`` (1-based) with probability ``phi**(m - j) / (1 + phi + ... + phi**(m-1))``.
Because each insertion is independent of the current list, the positions of
any two candidates evolve as a small Markov chain, which gives their exact
joint distribution in polynomial time.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import EmpiricalPreferences, Ranking, approval_rule
from .errors import CensoredPositionError, InvalidParameterError

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class MallowsModel:
    """``Pr(sigma) ∝ phi ** kendall_tau(sigma, reference)``."""

    M: int
    phi: float
    reference: Ranking = None

    def __post_init__(self):
        if self.M < 2:
            raise InvalidParameterError("need at least two candidates")
        if not 0.0 <= self.phi <= 1.0:
            raise InvalidParameterError(f"phi must lie in [0, 1], got {self.phi}")
        object.__setattr__(self, "phi", float(self.phi))
        if self.reference is None:
            object.__setattr__(self, "reference", Ranking.identity(self.M))
        elif self.reference.M != self.M:
            raise InvalidParameterError("reference ranking has the wrong length")

    def position_cdfs(self) -> np.ndarray:
        """``cdf[i, k] = Pr(position of i <= k)`` for every candidate."""
        return np.array([position_cdf(self, i) for i in range(self.M)])

    def label(self) -> str:
        return f"Mallows(M={self.M}, phi={self.phi:g})"


def insertion_weights(m: int, phi: float) -> np.ndarray:
    """Insertion probabilities for positions 1..m when the list grows to length m."""
    if m < 1:
        raise InvalidParameterError("m must be positive")
    if phi == 0.0:
        w = np.zeros(m)
        w[-1] = 1.0
        return w
    if phi == 1.0:
        return np.full(m, 1.0 / m)
    powers = np.empty(m)
    powers[-1] = 1.0
    for k in range(m - 2, -1, -1):
        powers[k] = powers[k + 1] * phi
    if powers[0] < _TINY:
        warnings.warn(f"phi**{m - 1} underflows; floored at {_TINY:.3g}", RuntimeWarning, stacklevel=2)
        powers = np.maximum(powers, _TINY)
    return powers / powers.sum()


def insertion_probability(m: int, j: int, phi: float) -> float:
    """Probability that the ``m``-th inserted item lands in position ``j`` (both 1-based)."""
    if not 1 <= j <= m:
        raise InvalidParameterError(f"need 1 <= j <= m, got j={j}, m={m}")
    if not 0.0 <= phi <= 1.0:
        raise InvalidParameterError(f"phi must lie in [0, 1], got {phi}")
    return float(insertion_weights(m, phi)[j - 1])


def sample_positions(model: MallowsModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` rankings; row ``s`` holds the position of each candidate."""
    M = model.M
    items = np.zeros((n, 0), dtype=np.int64)
    cols = np.arange(M)
    for m in range(1, M + 1):
        w = insertion_weights(m, model.phi)
        slot = rng.choice(m, size=n, p=w)[:, None]
        c = cols[:m][None, :]
        shifted = np.concatenate([items[:, :1], items], axis=1) if m > 1 else np.zeros((n, 1), dtype=np.int64)
        padded = np.concatenate([items, np.zeros((n, 1), dtype=np.int64)], axis=1)
        items = np.where(c < slot, padded, np.where(c == slot, m - 1, shifted))
    # items[s, k] = reference rank at position k
    ref_order = np.asarray(model.reference.order)
    candidates = ref_order[items]
    positions = np.empty_like(candidates)
    np.put_along_axis(positions, candidates, np.broadcast_to(cols, (n, M)), axis=1)
    return positions


def sample(model: MallowsModel, seed: int = 0) -> Ranking:
    return Ranking(tuple(sample_positions(model, 1, np.random.default_rng(seed))[0]))


@dataclass(frozen=True)
class PairPositionDistribution:
    """Joint law of the positions of candidates ``i`` and ``j``.

    ``p[l, k] = Pr(pos(i) = l, pos(j) = k)`` over observed positions.  Data
    from partial ballots adds ``tail_i[l]`` (i at l, j unlisted),
    ``tail_j[k]`` (j at k, i unlisted) and ``censored_mass`` (both unlisted);
    every unlisted candidate sits at position ``horizon`` or later.
    """

    M: int
    i: int
    j: int
    p: np.ndarray
    tail_i: np.ndarray = None
    tail_j: np.ndarray = None
    censored_mass: float = 0.0
    horizon: int = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.tail_i is None:
            object.__setattr__(self, "tail_i", np.zeros(self.M))
        if self.tail_j is None:
            object.__setattr__(self, "tail_j", np.zeros(self.M))
        if self.horizon is None:
            object.__setattr__(self, "horizon", self.M)

    @property
    def is_censored(self) -> bool:
        return bool(self.censored_mass > 0 or self.tail_i.any() or self.tail_j.any())

    def total_mass(self) -> float:
        """Probability that at least one of the pair is observed; adds to ``censored_mass`` to give 1."""
        return float(self.p.sum() + self.tail_i.sum() + self.tail_j.sum())

    def separations(self) -> tuple[np.ndarray, np.ndarray]:
        """``(t_i, t_j)`` arrays indexed by K-1 for K = 1..M-1, observed depths only.

        ``t_i[K-1]`` is the probability that K-Approval approves i but not j.
        Entries with ``K > horizon`` are NaN when censored mass is present.
        """
        if "sep" not in self._cache:
            p = self.p
            M = self.M
            # rows[K, k] = sum_{l < K} p[l, k]
            rows = np.vstack([np.zeros(M), np.cumsum(p, axis=0)])
            ti = np.empty(M - 1)
            tj = np.empty(M - 1)
            for K in range(1, M):
                ti[K - 1] = rows[K, K:].sum() + self.tail_i[:K].sum()
                tj[K - 1] = p[K:, :K].sum() + self.tail_j[:K].sum()
            if self.is_censored:
                bad = np.arange(1, M) > self.horizon
                ti[bad] = np.nan
                tj[bad] = np.nan
            self._cache["sep"] = (ti, tj)
        return self._cache["sep"]

    def separation(self, K: int) -> tuple[float, float]:
        if not 1 <= K <= self.M - 1:
            raise InvalidParameterError(f"need 1 <= K <= M-1, got K={K}")
        if self.is_censored and K > self.horizon:
            raise CensoredPositionError(
                f"{K}-Approval needs depth {K} but some ballots list only {self.horizon} candidates"
            )
        ti, tj = self.separations()
        return float(ti[K - 1]), float(tj[K - 1])

    def diff_support(self, beta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Values and probabilities of ``beta[pos(i)] - beta[pos(j)]``."""
        beta = np.asarray(beta, dtype=float)
        values = [(beta[:, None] - beta[None, :]).ravel()]
        probs = [self.p.ravel()]
        if self.is_censored:
            tail = beta[self.horizon:]
            if tail.size and tail.max() - tail.min() > 1e-12:
                raise CensoredPositionError(
                    f"rule varies beyond position {self.horizon}, which partial ballots do not reveal"
                )
            t = beta[self.horizon] if self.horizon < self.M else 0.0
            values += [beta - t, t - beta, np.zeros(1)]
            probs += [self.tail_i, self.tail_j, np.array([self.censored_mass])]
        values = np.concatenate(values)
        probs = np.concatenate(probs)
        keep = probs > 0
        return values[keep], probs[keep]


def _cumulative(q: np.ndarray, M: int) -> np.ndarray:
    """``C[x] = Pr(insertion slot <= x)`` for x = 0..M+1, with C[0] = 0."""
    C = np.ones(M + 2)
    C[0] = 0.0
    C[1:len(q) + 1] = np.cumsum(q)
    C[len(q):] = 1.0
    return C


def _single_step(v: np.ndarray, q: np.ndarray, tracked: bool) -> np.ndarray:
    M = len(v) - 1
    if tracked:
        new = np.zeros_like(v)
        new[1:len(q) + 1] = q * v[0]
        return new
    C = _cumulative(q, M)[:M + 1]
    new = v * (1 - C)
    new[1:] += (v * C)[:-1]
    return new


@lru_cache(maxsize=4096)
def _single_dp(M: int, phi: float, rank: int) -> np.ndarray:
    # index 0 = not yet inserted, x >= 1 = position x (1-based)
    v = np.zeros(M + 1)
    v[0] = 1.0
    for m in range(1, M + 1):
        v = _single_step(v, insertion_weights(m, phi), m - 1 == rank)
    v = v[1:]
    v.setflags(write=False)
    return v


def _shift_step(P: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Insert an untracked item: every tracked position >= slot moves down one."""
    n = P.shape[0]
    M = n - 1
    C = _cumulative(q, M)
    X, Y = np.indices(P.shape)
    lo, hi = np.minimum(X, Y), np.maximum(X, Y)
    p_both = C[lo]
    p_hi = C[hi] - C[lo]
    p_none = 1.0 - C[hi]
    Xs = np.minimum(X + (X > 0), M)
    Ys = np.minimum(Y + (Y > 0), M)
    hi_x = np.where(X > Y, Xs, X)
    hi_y = np.where(X > Y, Y, Ys)
    flat = n * n
    new = np.bincount((X * n + Y).ravel(), (P * p_none).ravel(), flat)
    new += np.bincount((Xs * n + Ys).ravel(), (P * p_both).ravel(), flat)
    new += np.bincount((hi_x * n + hi_y).ravel(), (P * p_hi).ravel(), flat)
    return new.reshape(P.shape)


def _tracked_step(P: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Insert the row-tracked item; the column-tracked one shifts if at or below the slot."""
    n = P.shape[0]
    M = n - 1
    v = P[0]
    slots = np.arange(1, len(q) + 1)[:, None]
    Y = np.arange(n)[None, :]
    dest_y = np.minimum(Y + ((Y > 0) & (Y >= slots)), M)
    dest = slots * n + dest_y
    mass = q[:, None] * v[None, :]
    return np.bincount(dest.ravel(), mass.ravel(), n * n).reshape(P.shape)


@lru_cache(maxsize=8192)
def _pair_dp(M: int, phi: float, rank_i: int, rank_j: int) -> np.ndarray:
    P = np.zeros((M + 1, M + 1))
    P[0, 0] = 1.0
    for m in range(1, M + 1):
        q = insertion_weights(m, phi)
        if m - 1 == rank_i:
            P = _tracked_step(P, q)
        elif m - 1 == rank_j:
            P = _tracked_step(P.T, q).T
        else:
            P = _shift_step(P, q)
    P = np.ascontiguousarray(P[1:, 1:])
    P.setflags(write=False)
    return P


@lru_cache(maxsize=8192)
def pair_joint(model: MallowsModel, i: int, j: int) -> PairPositionDistribution:
    """Exact joint distribution of the positions of candidates ``i`` and ``j``."""
    if i == j:
        raise InvalidParameterError("pair_joint needs two distinct candidates")
    for c in (i, j):
        if not 0 <= c < model.M:
            raise InvalidParameterError(f"candidate {c} out of range")
    ref = model.reference.positions
    p = _pair_dp(model.M, model.phi, ref[i], ref[j])
    return PairPositionDistribution(model.M, i, j, p)


def position_pmf(model: MallowsModel, i: int) -> np.ndarray:
    return _single_dp(model.M, model.phi, model.reference.positions[i])


def position_cdf(model: MallowsModel, i: int) -> np.ndarray:
    """``cdf[k] = Pr(position of i <= k)``, k 0-based."""
    return np.cumsum(position_pmf(model, i))


def approval_separation(source, i: int, j: int, K: int) -> tuple[float, float]:
    """Probabilities that K-Approval approves i but not j, and j but not i."""
    if isinstance(source, EmpiricalPreferences):
        S = source.score_matrix(approval_rule(K, source.M))
        w = source.weights / source.total_weight
        return float(w @ (S[:, i] * (1 - S[:, j]))), float(w @ (S[:, j] * (1 - S[:, i])))
    if isinstance(source, MallowsModel):
        source = pair_joint(source, i, j)
    elif (source.i, source.j) == (j, i):
        ti, tj = source.separation(K)
        return tj, ti
    elif (source.i, source.j) != (i, j):
        raise InvalidParameterError(f"distribution is for pair ({source.i}, {source.j}), not ({i}, {j})")
    return source.separation(K)


def kendall_tau_distance(a: Ranking, b: Ranking) -> int:
    """Number of candidate pairs the two rankings order differently."""
    pa = np.asarray(a.positions)
    pb = np.asarray(b.positions)
    da = np.sign(pa[:, None] - pa[None, :])
    db = np.sign(pb[:, None] - pb[None, :])
    return int((da != db).sum() // 2)
