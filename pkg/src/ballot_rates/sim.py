"""Simulated error curves for checking rates against finite electorates.

Electorates of size N are drawn either by resampling ballots from data or
from a Mallows model, tallied with random tie-breaking, and compared with
the asymptotic outcome.  Each N uses its own random stream derived from
``(seed, N)``, so any subset of the grid reproduces the same numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

import numpy as np

from .core import EmpiricalPreferences, Goal, Outcome, ScoringRule, asymptotic_outcome, expected_scores, outcome_of
from .errors import InvalidParameterError, OutcomeMismatchError
from .mallows import MallowsModel, kendall_tau_distance, sample_positions
from .core import Ranking
from .rates import outcome_rate

METRICS = ("winner_set_miss_fraction", "exact_outcome_miss", "pairwise_error_count")
DEFAULT_N_GRID = tuple(25 * 2**k for k in range(8))
DEFAULT_TRIALS = 2000
FIT_BAND = (1e-3, 0.2)
MIN_FIT_POINTS = 4

# enumerate the Mallows support exactly up to this many candidates
_ENUMERATE_MAX_M = 8
# cap on trials x support entries held in memory at once
_BLOCK = 2_000_000


@dataclass
class ErrorCurve:
    N_grid: tuple[int, ...]
    metric: str
    values: np.ndarray
    stderr: np.ndarray
    trials: int
    seed: int
    label: str = ""
    flag: str = ""

    def to_rows(self, rate: float | None = None) -> list[dict]:
        rows = []
        for N, v in zip(self.N_grid, self.values):
            bound = "" if rate is None else (0.0 if math.isinf(rate) else math.exp(-rate * N))
            rows.append({"N": N, "value": float(v), "bound": bound})
        return rows


@dataclass
class Overlay:
    """Empirical curve beside ``exp(-rate N)`` with a log-linear slope fit."""

    rows: list[tuple[int, float, float]]
    rate: float
    slope: float | None
    ratio: float | None
    fit_N: tuple[int, ...] = ()
    note: str = ""


def _check_common(N_grid, trials, metric):
    if trials < 1:
        raise InvalidParameterError("trials must be positive")
    if metric not in METRICS:
        raise InvalidParameterError(f"metric must be one of {METRICS}")
    grid = tuple(int(N) for N in N_grid)
    if any(N < 1 for N in grid) or list(grid) != sorted(set(grid)):
        raise InvalidParameterError("N grid must be strictly increasing positive integers")
    return grid


def _stream(seed: int, N: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, N]))


def _evaluate(totals: np.ndarray, outcome: Outcome, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Per-trial error metrics from a (trials, M) array of score totals."""
    trials, M = totals.shape
    keys = rng.random((trials, M))
    order = np.lexsort((keys, -np.round(totals, 9)), axis=-1)
    pos = np.argsort(order, axis=-1)
    sizes = np.array(outcome.goal.tier_sizes)
    bounds = np.cumsum(sizes)
    chosen_tier = np.searchsorted(bounds, pos, side="right")
    true_tier = outcome.tier_index()
    winners = true_tier == 0
    miss = (winners[None, :] & (chosen_tier != 0)).sum(axis=1) / sizes[0]
    exact = np.any(chosen_tier != true_tier[None, :], axis=1).astype(float)
    pairs = np.array(outcome.cross_tier_pairs())
    flips = (pos[:, pairs[:, 0]] > pos[:, pairs[:, 1]]).sum(axis=1).astype(float)
    return {"winner_set_miss_fraction": miss, "exact_outcome_miss": exact, "pairwise_error_count": flips}


def _simulate_support(S, probs, outcome, N_grid, trials, seed) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Resample electorates from a finite support with per-voter score rows ``S``."""
    means = {m: [] for m in METRICS}
    ses = {m: [] for m in METRICS}
    block = max(1, _BLOCK // max(1, len(probs)))
    for N in N_grid:
        rng = _stream(seed, N)
        per_trial = {m: [] for m in METRICS}
        for start in range(0, trials, block):
            n = min(block, trials - start)
            counts = rng.multinomial(N, probs, size=n)
            res = _evaluate(counts @ S, outcome, rng)
            for m in METRICS:
                per_trial[m].append(res[m])
        for m in METRICS:
            x = np.concatenate(per_trial[m])
            means[m].append(x.mean())
            ses[m].append(x.std(ddof=1) / math.sqrt(len(x)) if len(x) > 1 else 0.0)
    return {m: (np.array(means[m]), np.array(ses[m])) for m in METRICS}


def _simulate_sampled(model, rule, outcome, N_grid, trials, seed):
    beta = rule.array
    means = {m: [] for m in METRICS}
    ses = {m: [] for m in METRICS}
    for N in N_grid:
        rng = _stream(seed, N)
        totals = np.empty((trials, model.M))
        for t in range(trials):
            totals[t] = beta[sample_positions(model, N, rng)].sum(axis=0)
        res = _evaluate(totals, outcome, rng)
        for m in METRICS:
            means[m].append(res[m].mean())
            ses[m].append(res[m].std(ddof=1) / math.sqrt(trials) if trials > 1 else 0.0)
    return {m: (np.array(means[m]), np.array(ses[m])) for m in METRICS}


def simulate_all(source, rule: ScoringRule, goal: Goal, N_grid=DEFAULT_N_GRID, trials=DEFAULT_TRIALS, seed=0,
                 asymptotic: Outcome | None = None) -> dict[str, ErrorCurve]:
    """All three metrics from the same simulated electorates."""
    grid = _check_common(N_grid, trials, METRICS[0])
    flag = ""
    if isinstance(source, MallowsModel):
        if asymptotic is None:
            asymptotic = outcome_of(source.reference, goal)
        try:
            outcome_rate(source, rule, goal, asymptotic)
        except OutcomeMismatchError:
            flag = "non-convergent"
        if source.M <= _ENUMERATE_MAX_M:
            support, probs = mallows_support(source)
            raw = _simulate_support(rule.array[support], probs, asymptotic, grid, trials, seed)
        else:
            raw = _simulate_sampled(source, rule, asymptotic, grid, trials, seed)
        label = f"{rule.label} on {source.label()}"
    elif isinstance(source, EmpiricalPreferences):
        if asymptotic is None:
            asymptotic = asymptotic_outcome(expected_scores(source, rule), goal)
        S = source.score_matrix(rule)
        raw = _simulate_support(S, source.weights / source.total_weight, asymptotic, grid, trials, seed)
        label = rule.label
    else:
        raise TypeError(f"unsupported preference source {type(source).__name__}")
    return {m: ErrorCurve(grid, m, v, se, trials, seed, label, flag) for m, (v, se) in raw.items()}


def bootstrap_curve(
    prefs: EmpiricalPreferences,
    rule: ScoringRule,
    goal: Goal,
    N_grid: Sequence[int] = DEFAULT_N_GRID,
    trials: int = DEFAULT_TRIALS,
    metric: str = "winner_set_miss_fraction",
    seed: int = 0,
) -> ErrorCurve:
    """Error of ``rule`` on electorates resampled with replacement from ``prefs``.

    The reference outcome is the one implied by the full data's expected
    scores; a tie across a tier boundary raises OutcomeMismatchError.
    """
    _check_common(N_grid, trials, metric)
    return simulate_all(prefs, rule, goal, N_grid, trials, seed)[metric]


def model_curve(
    model: MallowsModel,
    rule: ScoringRule,
    goal: Goal,
    N_grid: Sequence[int] = DEFAULT_N_GRID,
    trials: int = DEFAULT_TRIALS,
    metric: str = "winner_set_miss_fraction",
    seed: int = 0,
) -> ErrorCurve:
    """Error of ``rule`` on electorates drawn from a Mallows model.

    The reference outcome is the tiering of the model's reference ranking.
    When ``rule`` cannot learn that outcome the curve carries
    ``flag="non-convergent"``.
    """
    _check_common(N_grid, trials, metric)
    return simulate_all(model, rule, goal, N_grid, trials, seed)[metric]


def mallows_support(model: MallowsModel) -> tuple[np.ndarray, np.ndarray]:
    """All rankings (as position rows) with their exact Mallows probabilities."""
    M = model.M
    rows = np.array(list(permutations(range(M))))
    ref = model.reference
    dist = np.array([kendall_tau_distance(Ranking(tuple(r)), ref) for r in rows])
    if model.phi == 0.0:
        w = (dist == 0).astype(float)
    else:
        w = model.phi ** dist.astype(float)
    return rows, w / w.sum()


def overlay(curve: ErrorCurve, rate: float, band: tuple[float, float] = FIT_BAND) -> Overlay:
    """Pair the curve with ``exp(-rate N)`` and fit the slope of log error against N.

    Only points inside ``band`` enter the fit, and at least
    ``MIN_FIT_POINTS`` are required; otherwise ``slope`` is None.
    """
    N = np.asarray(curve.N_grid, dtype=float)
    v = np.asarray(curve.values, dtype=float)
    bound = np.zeros_like(N) if math.isinf(rate) else np.exp(-rate * N)
    rows = [(int(n), float(x), float(b)) for n, x, b in zip(N, v, bound)]
    notes = []
    zeros = int((v <= 0).sum())
    if zeros:
        notes.append(f"{zeros} zero entries excluded from the fit")
    use = (v > 0) & (v >= band[0]) & (v <= band[1])
    if use.sum() < MIN_FIT_POINTS:
        notes.append(f"only {int(use.sum())} points in band {band}; need {MIN_FIT_POINTS}")
        return Overlay(rows, rate, None, None, tuple(int(n) for n in N[use]), "; ".join(notes))
    slope = float(np.polyfit(N[use], np.log(v[use]), 1)[0])
    ratio = slope / -rate if rate > 0 and not math.isinf(rate) else None
    return Overlay(rows, rate, slope, ratio, tuple(int(n) for n in N[use]), "; ".join(notes))
