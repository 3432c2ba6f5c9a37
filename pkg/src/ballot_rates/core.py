"""Candidates, ballots, positional scoring rules, goals and tallies.

Candidate ids and positions are 0-based throughout the library (position 0
is a voter's favourite).  File formats and serialized reports use 1-based
ids; conversion happens only in :mod:`ballot_rates.io` and the CLI.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CensoredPositionError, InvalidParameterError, OutcomeMismatchError

#: Absolute tolerance under which two scores count as tied.
TIE_TOL = 1e-12


@dataclass(frozen=True)
class Ranking:
    """A strict ranking; ``positions[i]`` is the position of candidate ``i``."""

    positions: tuple[int, ...]

    def __post_init__(self):
        pos = tuple(int(p) for p in self.positions)
        if sorted(pos) != list(range(len(pos))):
            raise InvalidParameterError(f"positions {pos} are not a permutation of 0..{len(pos) - 1}")
        object.__setattr__(self, "positions", pos)

    @classmethod
    def from_order(cls, order: Sequence[int]) -> "Ranking":
        """Build from candidate ids listed best first."""
        positions = [0] * len(order)
        for k, c in enumerate(order):
            if not 0 <= c < len(order):
                raise InvalidParameterError(f"candidate {c} out of range")
            positions[c] = k
        return cls(tuple(positions))

    @classmethod
    def identity(cls, M: int) -> "Ranking":
        return cls(tuple(range(M)))

    @property
    def M(self) -> int:
        return len(self.positions)

    @property
    def order(self) -> tuple[int, ...]:
        """Candidate ids, best first."""
        order = [0] * self.M
        for c, k in enumerate(self.positions):
            order[k] = c
        return tuple(order)


@dataclass(frozen=True)
class Ballot:
    """A voter's top-``K_b`` list (best first) with an integer multiplicity."""

    ordered_prefix: tuple[int, ...]
    weight: float = 1

    def __post_init__(self):
        prefix = tuple(int(c) for c in self.ordered_prefix)
        if len(prefix) == 0:
            raise InvalidParameterError("a ballot must list at least one candidate")
        if len(set(prefix)) != len(prefix):
            raise InvalidParameterError(f"duplicate candidate in ballot {prefix}")
        if min(prefix) < 0:
            raise InvalidParameterError(f"negative candidate id in ballot {prefix}")
        if self.weight < 0:
            raise InvalidParameterError("ballot weight must be nonnegative")
        object.__setattr__(self, "ordered_prefix", prefix)

    @property
    def depth(self) -> int:
        return len(self.ordered_prefix)

    def is_complete(self, M: int) -> bool:
        # listing M-1 candidates pins down the last one
        return self.depth >= M - 1

    def completed(self, M: int) -> tuple[int, ...]:
        if not self.is_complete(M):
            raise CensoredPositionError(f"ballot {self.ordered_prefix} is not complete for M={M}")
        if self.depth == M:
            return self.ordered_prefix
        missing = set(range(M)).difference(self.ordered_prefix)
        return self.ordered_prefix + tuple(missing)

    def to_ranking(self, M: int) -> Ranking:
        return Ranking.from_order(self.completed(M))

    @classmethod
    def from_ranking(cls, ranking: Ranking, weight: float = 1) -> "Ballot":
        return cls(ranking.order, weight)


@dataclass(frozen=True)
class ScoringRule:
    """Score ``beta[k]`` for the candidate in position ``k``.

    ``kind`` is ``"approval"``, ``"borda"`` or ``"custom"``; ``K`` is the
    approval depth or the number of ranked positions for Borda.  A Borda rule
    is applied to shorter ballots with the tied-tail convention of
    :func:`borda_rule` evaluated at the ballot's own depth.
    """

    beta: tuple[float, ...]
    label: str = "custom"
    kind: str = "custom"
    K: int | None = None

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta)
        if len(beta) < 2:
            raise InvalidParameterError("a scoring rule needs at least two positions")
        if not all(np.isfinite(beta)):
            raise InvalidParameterError("scores must be finite")
        if any(beta[k] < beta[k + 1] for k in range(len(beta) - 1)):
            raise InvalidParameterError(f"scores {beta} are not non-increasing")
        if not beta[0] > beta[-1]:
            raise InvalidParameterError(f"scores {beta} are constant")
        object.__setattr__(self, "beta", beta)

    @property
    def M(self) -> int:
        return len(self.beta)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.beta)

    def approval_depth(self) -> int | None:
        """Return K if the rule is an affine image of K-Approval, else None."""
        beta = self.array
        hi, lo = beta[0], beta[-1]
        at_hi = np.abs(beta - hi) <= TIE_TOL
        at_lo = np.abs(beta - lo) <= TIE_TOL
        if not np.all(at_hi | at_lo):
            return None
        return int(at_hi.sum())

    def ballot_scores(self, ballot: Ballot) -> np.ndarray:
        """Per-candidate score contributed by one ballot."""
        M = self.M
        if ballot.is_complete(M):
            order = np.asarray(ballot.completed(M))
            scores = np.empty(M)
            scores[order] = self.beta
            return scores
        Kb = ballot.depth
        if self.kind == "borda":
            beta = borda_rule(min(self.K, Kb), M).array
        else:
            beta = self.array
            tail = beta[Kb:]
            if tail.max() - tail.min() > TIE_TOL:
                raise CensoredPositionError(
                    f"rule {self.label!r} scores unobserved positions {Kb + 1}..{M} differently; "
                    f"ballot {[c + 1 for c in ballot.ordered_prefix]} does not reveal them"
                )
        scores = np.full(M, beta[Kb])
        scores[list(ballot.ordered_prefix)] = beta[:Kb]
        return scores

    def mix(self, other: "ScoringRule", weight: float) -> "ScoringRule":
        """Convex combination ``weight * self + (1 - weight) * other``."""
        beta = weight * self.array + (1 - weight) * other.array
        return ScoringRule(tuple(beta), label=f"{weight:g}*{self.label}+{1 - weight:g}*{other.label}")


def approval_rule(K: int, M: int) -> ScoringRule:
    """K-Approval: one point for each of the voter's top K candidates."""
    if not 1 <= K <= M - 1:
        raise InvalidParameterError(f"K-Approval needs 1 <= K <= M-1, got K={K}, M={M}")
    beta = tuple(1.0 if k < K else 0.0 for k in range(M))
    return ScoringRule(beta, label=f"{K}-Approval", kind="approval", K=K)


def borda_rule(K: int, M: int) -> ScoringRule:
    """Borda count on the top K positions.

    Ranked positions score ``M - k`` (1-based k); the ``M - K`` unranked
    candidates are treated as tied at position ``K + 1`` and each receive
    ``(M - K - 1) / 2``.
    """
    if not 1 <= K <= M:
        raise InvalidParameterError(f"Borda needs 1 <= K <= M, got K={K}, M={M}")
    tail = (M - K - 1) / 2
    beta = tuple(float(M - 1 - k) if k < K else tail for k in range(M))
    return ScoringRule(beta, label=f"Borda-{K}" if K < M else "Borda", kind="borda", K=K)


@dataclass(frozen=True)
class Goal:
    """Ordered tier sizes, e.g. ``(W, M - W)`` for selecting W winners."""

    tier_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.tier_sizes)
        if len(sizes) < 2:
            raise InvalidParameterError("a goal needs at least two tiers")
        if min(sizes) < 1:
            raise InvalidParameterError(f"tier sizes must be positive, got {sizes}")
        object.__setattr__(self, "tier_sizes", sizes)

    @classmethod
    def winners(cls, W: int, M: int) -> "Goal":
        if not 1 <= W <= M - 1:
            raise InvalidParameterError(f"need 1 <= W <= M-1, got W={W}, M={M}")
        return cls((W, M - W))

    @classmethod
    def full_ranking(cls, M: int) -> "Goal":
        return cls((1,) * M)

    @property
    def M(self) -> int:
        return sum(self.tier_sizes)

    @property
    def is_full_ranking(self) -> bool:
        return all(s == 1 for s in self.tier_sizes)

    def __str__(self):
        return ",".join(map(str, self.tier_sizes))


@dataclass(frozen=True)
class Outcome:
    tiers: tuple[frozenset, ...]

    def __post_init__(self):
        tiers = tuple(frozenset(int(c) for c in t) for t in self.tiers)
        members = [c for t in tiers for c in t]
        if sorted(members) != list(range(len(members))):
            raise InvalidParameterError("outcome tiers must partition the candidates")
        object.__setattr__(self, "tiers", tiers)

    @property
    def goal(self) -> Goal:
        return Goal(tuple(len(t) for t in self.tiers))

    def tier_index(self) -> np.ndarray:
        idx = np.empty(sum(len(t) for t in self.tiers), dtype=int)
        for t, tier in enumerate(self.tiers):
            idx[list(tier)] = t
        return idx

    def cross_tier_pairs(self) -> list[tuple[int, int]]:
        """All (better-tier, worse-tier) candidate pairs, in sorted order."""
        pairs = []
        for s, upper in enumerate(self.tiers):
            for lower in self.tiers[s + 1:]:
                pairs.extend((i, j) for i in sorted(upper) for j in sorted(lower))
        return sorted(pairs)


@dataclass(frozen=True)
class EmpiricalPreferences:
    """Weighted ballots over ``M`` candidates; the empirical voter distribution.

    Use :meth:`from_ballots` to merge duplicate ballots into canonical order.
    """

    M: int
    ballots: tuple[Ballot, ...]
    names: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "ballots", tuple(self.ballots))
        if self.M < 2:
            raise InvalidParameterError("need at least two candidates")
        for b in self.ballots:
            if max(b.ordered_prefix) >= self.M:
                raise InvalidParameterError(f"ballot {b.ordered_prefix} names a candidate >= M={self.M}")
        if not self.total_weight > 0:
            raise InvalidParameterError("total ballot weight must be positive")

    @classmethod
    def from_ballots(cls, M: int, ballots: Iterable[Ballot], names=None) -> "EmpiricalPreferences":
        merged: dict[tuple[int, ...], float] = {}
        for b in ballots:
            merged[b.ordered_prefix] = merged.get(b.ordered_prefix, 0) + b.weight
        canon = tuple(Ballot(prefix, w) for prefix, w in sorted(merged.items()) if w > 0)
        return cls(M, canon, dict(names or {}))

    @classmethod
    def from_rankings(cls, rankings: Iterable[Ranking], weights=None) -> "EmpiricalPreferences":
        rankings = list(rankings)
        if weights is None:
            weights = [1] * len(rankings)
        return cls.from_ballots(rankings[0].M, (Ballot.from_ranking(r, w) for r, w in zip(rankings, weights)))

    @property
    def weights(self) -> np.ndarray:
        return np.array([b.weight for b in self.ballots], dtype=float)

    @property
    def total_weight(self) -> float:
        return float(sum(b.weight for b in self.ballots))

    @property
    def min_prefix(self) -> int:
        return min(b.depth for b in self.ballots)

    @property
    def is_complete(self) -> bool:
        return self.min_prefix >= self.M - 1

    def score_matrix(self, rule: ScoringRule) -> np.ndarray:
        """Row ``b`` holds the scores ballot ``b`` gives each candidate."""
        if rule.M != self.M:
            raise InvalidParameterError(f"rule has {rule.M} positions but there are {self.M} candidates")
        return np.array([rule.ballot_scores(b) for b in self.ballots])

    def position_matrix(self) -> np.ndarray:
        """``positions[b, i]``: position of candidate i on ballot b (complete data only)."""
        if not self.is_complete:
            raise CensoredPositionError("position matrix needs complete rankings")
        return np.array([b.to_ranking(self.M).positions for b in self.ballots])

    def position_cdfs(self) -> np.ndarray:
        """``cdf[i, k] = Pr(position of i <= k)``, from complete rankings."""
        pos = self.position_matrix()
        w = self.weights / self.total_weight
        pmf = np.zeros((self.M, self.M))
        for c in range(self.M):
            np.add.at(pmf[c], pos[:, c], w)
        return np.cumsum(pmf, axis=1)

    def complete_only(self) -> "EmpiricalPreferences":
        """Drop ballots that do not determine a full ranking."""
        kept = [b for b in self.ballots if b.is_complete(self.M)]
        if not kept:
            raise InvalidParameterError("no complete ballots")
        return EmpiricalPreferences.from_ballots(self.M, kept, self.names)


def order_with_ties(scores: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Candidate ids by descending score; each tied block is shuffled by ``rng``."""
    scores = np.asarray(scores, dtype=float)
    order = np.argsort(-scores, kind="stable")
    out = order.copy()
    start = 0
    M = len(order)
    while start < M:
        end = start + 1
        while end < M and scores[order[end - 1]] - scores[order[end]] <= TIE_TOL:
            end += 1
        if end - start > 1:
            out[start:end] = order[start:end][rng.permutation(end - start)]
        start = end
    return out


def tally(prefs: EmpiricalPreferences, rule: ScoringRule, seed: int = 0) -> tuple[np.ndarray, Ranking]:
    """Average scores and the resulting ranking, ties broken uniformly at random."""
    S = prefs.score_matrix(rule)
    scores = prefs.weights @ S / prefs.total_weight
    order = order_with_ties(scores, np.random.default_rng(seed))
    return scores, Ranking.from_order(order)


def outcome_of(ranking: Ranking, goal: Goal) -> Outcome:
    if ranking.M != goal.M:
        raise InvalidParameterError(f"ranking has {ranking.M} candidates, goal expects {goal.M}")
    order = ranking.order
    tiers, start = [], 0
    for size in goal.tier_sizes:
        tiers.append(frozenset(order[start:start + size]))
        start += size
    return Outcome(tuple(tiers))


def telescoped_scores(beta: np.ndarray, cdf: np.ndarray) -> np.ndarray:
    """``beta[M-1] + sum_m (beta[m] - beta[m+1]) Pr(pos <= m)`` per candidate."""
    beta = np.asarray(beta, dtype=float)
    steps = beta[:-1] - beta[1:]
    return beta[-1] + cdf[:, :-1] @ steps


def expected_scores(source, rule: ScoringRule) -> np.ndarray:
    """Asymptotic mean score of every candidate.

    ``source`` is an :class:`EmpiricalPreferences` or anything exposing
    ``position_cdfs()`` (e.g. a Mallows model).  Partial ballots are scored
    directly, which raises :class:`CensoredPositionError` when the rule
    needs positions the ballots do not reveal.
    """
    if isinstance(source, EmpiricalPreferences) and not source.is_complete:
        return source.weights @ source.score_matrix(rule) / source.total_weight
    cdf = source.position_cdfs()
    if cdf.shape[0] != rule.M:
        raise InvalidParameterError(f"rule has {rule.M} positions, source has {cdf.shape[0]} candidates")
    return telescoped_scores(rule.array, cdf)


def asymptotic_outcome(scores: np.ndarray, goal: Goal) -> Outcome:
    """Tiering by expected score; a tie across a tier boundary is an error."""
    scores = np.asarray(scores, dtype=float)
    order = np.argsort(-scores, kind="stable")
    start = 0
    for size in goal.tier_sizes[:-1]:
        start += size
        a, b = order[start - 1], order[start]
        if scores[a] - scores[b] <= TIE_TOL:
            raise OutcomeMismatchError(
                f"candidates {a + 1} and {b + 1} tie in expected score across a tier boundary",
                pair=(int(a), int(b)),
            )
    return outcome_of(Ranking.from_order(order), goal)


def check_outcome(scores: np.ndarray, outcome: Outcome) -> None:
    """Raise unless every cross-tier pair is strictly ordered by ``scores``."""
    for i, j in outcome.cross_tier_pairs():
        if not scores[i] - scores[j] > TIE_TOL:
            raise OutcomeMismatchError(
                f"pair ({i + 1}, {j + 1}) has expected scores {scores[i]:.6g} <= {scores[j]:.6g}",
                pair=(i, j),
            )
