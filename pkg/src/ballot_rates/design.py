"""Choosing elicitation mechanisms: invariance checks, optimal K, randomization."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import kendalltau

from .core import (
    EmpiricalPreferences,
    Goal,
    Outcome,
    ScoringRule,
    approval_rule,
    asymptotic_outcome,
    borda_rule,
    expected_scores,
    tally,
    telescoped_scores,
)
from .errors import (
    AmbiguousTiersError,
    CensoredPositionError,
    InsufficientDepthError,
    InvalidParameterError,
    OutcomeMismatchError,
)
from .rates import SeparationTable, golden_min, min_rate, outcome_rate, separation_table

DEFAULT_D_GRID = tuple(round(0.05 * k, 2) for k in range(1, 20))


def _workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    return max(1, int(os.environ.get("BALLOT_RATES_THREADS", "1")))


def _ordered_map(fn, items, workers: int | None):
    items = list(items)
    n = _workers(workers)
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class InvarianceVerdict:
    """``violation`` is ``(i, j, k)``: i sits in a better tier than j yet is
    not strictly more likely to be in the top k positions."""

    exact: bool
    witness_tiers: Outcome | None = None
    violation: tuple[int, int, int] | None = None


def check_invariance(source, goal: Goal) -> InvarianceVerdict:
    """Test whether every reasonable scoring rule has the same asymptotic outcome.

    Candidates are tiered by full-Borda expected score, then each cross-tier
    pair must show strict dominance of cumulative placement probabilities at
    every cutoff ``k = 1..M-1``.
    """
    cdf = source.position_cdfs()
    M = cdf.shape[0]
    if goal.M != M:
        raise InvalidParameterError(f"goal covers {goal.M} candidates, source has {M}")
    borda = telescoped_scores(borda_rule(M, M).array, cdf)
    try:
        witness = asymptotic_outcome(borda, goal)
    except OutcomeMismatchError as exc:
        raise AmbiguousTiersError(f"Borda scores tie across a tier boundary at pair {exc.pair}") from exc
    for i, j in witness.cross_tier_pairs():
        bad = np.flatnonzero(~(cdf[i, :-1] > cdf[j, :-1]))
        if bad.size:
            return InvarianceVerdict(False, None, (i, j, int(bad[0]) + 1))
    return InvarianceVerdict(True, witness, None)


def approx_invariance(
    prefs: EmpiricalPreferences,
    W: int | None,
    mechanisms: Sequence[ScoringRule],
    seed: int = 0,
) -> np.ndarray:
    """Agreement between mechanisms on the full data.

    Entry ``(a, b)`` is the fraction of the top ``W`` shared by mechanisms a
    and b.  With ``W=None`` the entry is Kendall's tau between their full
    rankings instead.
    """
    rankings = [tally(prefs, rule, seed)[1] for rule in mechanisms]
    n = len(mechanisms)
    out = np.ones((n, n))
    if W is not None and not 1 <= W <= prefs.M:
        raise InvalidParameterError(f"need 1 <= W <= M, got {W}")
    for a in range(n):
        for b in range(a + 1, n):
            if W is None:
                val = kendalltau(rankings[a].positions, rankings[b].positions).statistic
            else:
                top_a = set(rankings[a].order[:W])
                top_b = set(rankings[b].order[:W])
                val = len(top_a & top_b) / W
            out[a, b] = out[b, a] = val
    return out


@dataclass
class OptimalKResult:
    """Rates of K-Approval for one goal.  ``flags[K]`` explains excluded K."""

    goal: Goal
    per_K: dict[int, float]
    flags: dict[int, str] = field(default_factory=dict)
    pivotal: dict[int, tuple[int, int]] = field(default_factory=dict)

    @property
    def best_K(self) -> int | None:
        if not self.per_K:
            return None
        return max(self.per_K, key=lambda K: (self.per_K[K], -K))

    @property
    def best_rate(self) -> float | None:
        K = self.best_K
        return None if K is None else self.per_K[K]

    def rows(self) -> list[dict]:
        """One row per K: ``W, K, rate, flag``."""
        W = self.goal.tier_sizes[0]
        best = self.best_K
        out = []
        for K in sorted(set(self.per_K) | set(self.flags)):
            if K in self.per_K:
                out.append({"W": W, "K": K, "rate": self.per_K[K], "flag": "best" if K == best else ""})
            else:
                out.append({"W": W, "K": K, "rate": None, "flag": self.flags[K]})
        return out


def _admissible_depths(source, K_range) -> list[int]:
    M = source.M
    Ks = list(range(1, M)) if K_range is None else sorted(set(K_range))
    for K in Ks:
        if not 1 <= K <= M - 1:
            raise InvalidParameterError(f"K={K} outside 1..{M - 1}")
        if isinstance(source, EmpiricalPreferences) and not source.is_complete and K > source.min_prefix:
            raise InsufficientDepthError(f"K={K} exceeds the shortest ballot depth {source.min_prefix}")
    return Ks


def optimal_k(source, goal: Goal, K_range: Iterable[int] | None = None) -> OptimalKResult:
    """Evaluate every K-Approval in ``K_range`` and pick the fastest learner.

    A K whose asymptotic outcome is ambiguous is flagged and excluded rather
    than aborting the scan.
    """
    result = OptimalKResult(goal, {})
    for K in _admissible_depths(source, K_range):
        try:
            report = outcome_rate(source, approval_rule(K, source.M), goal)
        except OutcomeMismatchError:
            result.flags[K] = "mismatch"
            continue
        result.per_K[K] = report.overall_rate
        result.pivotal[K] = report.pivotal_pair
    return result


def optimal_k_scan(
    source, W_range: Iterable[int], K_range: Iterable[int] | None = None, workers: int | None = None
) -> list[OptimalKResult]:
    """:func:`optimal_k` for each winner count W, in increasing W."""
    Ws = sorted(set(W_range))
    return _ordered_map(lambda W: optimal_k(source, Goal.winners(W, source.M), K_range), Ws, workers)


def scan_rows(results: Sequence[OptimalKResult]) -> list[dict]:
    return [row for res in results for row in res.rows()]


@dataclass
class RandomizationCell:
    Ka: int
    Kb: int
    d: float
    rate_mix: float
    rate_a: float
    rate_b: float
    beats_opt: bool

    def as_row(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RandomizationFinding:
    """A mixture of Ka- and Kb-Approval that beats both pure mechanisms."""

    Ka: int
    Kb: int
    d: float
    rate_mix: float
    rate_a: float
    rate_b: float
    pivotal_a: tuple[int, int]
    pivotal_b: tuple[int, int]
    beats_opt: bool
    best_pure_K: int
    best_pure_rate: float


@dataclass
class RandomizationScan:
    cells: list[RandomizationCell]
    findings: list[RandomizationFinding]
    skipped: dict[tuple[int, int], str]


def _mixture_rate(table: SeparationTable, Ka: int, Kb: int, d: float) -> float:
    if d >= 1.0:
        components = [(Ka, 1.0)]
    elif d <= 0.0:
        components = [(Kb, 1.0)]
    else:
        components = [(Ka, d), (Kb, 1.0 - d)]
    return min_rate(table.mixture_rates(components))[0]


def randomization_scan(
    source,
    goal: Goal | None = None,
    K_pairs: Iterable[tuple[int, int]] | None = None,
    d_grid: Sequence[float] = DEFAULT_D_GRID,
    refine: bool = True,
) -> RandomizationScan:
    """Search two-component K-Approval mixtures that learn faster than either part.

    ``source`` is a preference source (with ``goal``) or a ready-made
    :class:`SeparationTable`, whose pairs are taken as the cross-tier pairs.
    ``d`` is the probability of serving ``Ka``-Approval.
    """
    if isinstance(source, SeparationTable):
        Ks = source.depths
        tables = {K: source for K in Ks}
    else:
        if goal is None:
            raise InvalidParameterError("a goal is required for a preference source")
        Ks = _admissible_depths(source, None if K_pairs is None else {K for pair in K_pairs for K in pair})
        outcomes = {}
        for K in Ks:
            try:
                outcomes[K] = asymptotic_outcome(expected_scores(source, approval_rule(K, source.M)), goal)
            except (OutcomeMismatchError, CensoredPositionError):
                outcomes[K] = None
        by_outcome = {}
        for K, out in outcomes.items():
            if out is not None:
                by_outcome.setdefault(out, []).append(K)
        tables = {}
        for out, depths in by_outcome.items():
            table = separation_table(source, out.cross_tier_pairs(), depths)
            tables.update({K: table for K in depths})
    pure = {K: min_rate(tables[K].pure_rates(K)) for K in tables}
    if K_pairs is None:
        K_pairs = list(combinations(Ks, 2))
    cells, findings, skipped = [], [], {}
    for Ka, Kb in K_pairs:
        if Ka not in tables or Kb not in tables or tables[Ka] is not tables[Kb]:
            skipped[(Ka, Kb)] = "mismatch"
            continue
        table = tables[Ka]
        peers = [K for K in tables if tables[K] is table]
        best_K = max(peers, key=lambda K: (pure[K][0], -K))
        best_pure = pure[best_K][0]
        (ra, pa), (rb, pb) = pure[Ka], pure[Kb]
        evaluated = [(d, _mixture_rate(table, Ka, Kb, d)) for d in d_grid]
        if refine and len(d_grid) > 1:
            d0, _ = max(evaluated, key=lambda x: (x[1], -abs(x[0] - 0.5)))
            step = min(np.diff(sorted(d_grid)))
            lo, hi = max(0.0, d0 - step), min(1.0, d0 + step)
            d_star, neg = golden_min(lambda d: -_mixture_rate(table, Ka, Kb, d), lo, hi, tol=1e-9)
            evaluated.append((round(d_star, 9), -neg))
        for d, r in evaluated:
            cells.append(RandomizationCell(Ka, Kb, d, r, ra, rb, bool(r > best_pure + 1e-12)))
        d_best, r_best = max(evaluated, key=lambda x: x[1])
        if r_best > max(ra, rb) + 1e-12:
            findings.append(
                RandomizationFinding(
                    Ka, Kb, d_best, r_best, ra, rb, pa, pb, bool(r_best > best_pure + 1e-12), best_K, best_pure
                )
            )
    return RandomizationScan(cells, findings, skipped)
