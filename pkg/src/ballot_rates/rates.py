"""Large-deviation learning rates of positional scoring rules.

For a pair of candidates ``i, j`` with ``E[D] > 0``, where ``D`` is the score
difference a single voter gives them, the probability that ``N`` voters rank
``j`` above ``i`` decays like ``exp(-r N)`` with::

    r = -inf_z log E[exp(z D)]

For K-Approval, ``D`` takes values in {-1, 0, 1} and the infimum has the
closed form ``-log(1 - (sqrt(t_i) - sqrt(t_j))**2)``.  The rate of a whole
outcome is the minimum over pairs that sit in different tiers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    TIE_TOL,
    EmpiricalPreferences,
    Goal,
    Outcome,
    ScoringRule,
    approval_rule,
    asymptotic_outcome,
    check_outcome,
    expected_scores,
)
from .errors import (
    InseparableError,
    InvalidParameterError,
    OrientationError,
)
from .mallows import MallowsModel, PairPositionDistribution, pair_joint

_GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class ScoreDiffDistribution:
    """Finite law of the per-voter score difference ``D``."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if values.shape != probs.shape or values.ndim != 1:
            raise InvalidParameterError("values and probs must be 1-d arrays of equal length")
        if not np.all(np.isfinite(values)):
            raise InvalidParameterError("difference values must be finite")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise InvalidParameterError(f"probabilities must be nonnegative and sum to 1 (sum={probs.sum()!r})")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_pairs(cls, support: Sequence[tuple[float, float]]) -> "ScoreDiffDistribution":
        values, probs = zip(*support)
        return cls(np.array(values), np.array(probs))

    @property
    def mean(self) -> float:
        return float(self.probs @ self.values)

    def negated(self) -> "ScoreDiffDistribution":
        return ScoreDiffDistribution(-self.values, self.probs)

    def log_mgf(self, z: float) -> float:
        # shift by the largest exponent in the support; the clamp keeps
        # zero-probability entries from overflowing to inf * 0
        a = z * self.values
        m = a[self.probs > 0].max()
        return float(m + math.log(self.probs @ np.exp(np.minimum(a - m, 0.0))))


def golden_min(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 300) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return min((fc, c), (fd, d), (f(lo), lo), (f(hi), hi))[::-1]


def rate_general(diff: ScoreDiffDistribution) -> float:
    """``-min_z log E[exp(z D)]`` for a difference with positive mean.

    Returns ``math.inf`` when ``D > 0`` almost surely.
    """
    if not diff.mean > TIE_TOL:
        raise OrientationError(f"expected score difference {diff.mean:.3g} is not positive")
    d, p = diff.values, diff.probs
    if p[d < -TIE_TOL].sum() == 0:
        zero = p[np.abs(d) <= TIE_TOL].sum()
        return -math.log(zero) if zero > 0 else math.inf

    def slope(z):
        w = p * np.exp(z * d - np.max(z * d))
        return float(w @ d / w.sum())

    hi, lo = 0.0, -1.0
    while slope(lo) >= 0:
        hi, lo = lo, 2 * lo
    _, lam = golden_min(diff.log_mgf, lo, hi)
    return max(0.0, -lam)


def rate_approval(t_i: float, t_j: float) -> float:
    """Pairwise K-Approval rate from the two one-sided approval probabilities."""
    for t in (t_i, t_j):
        if not 0.0 <= t <= 1.0:
            raise InvalidParameterError(f"separation probability {t} outside [0, 1]")
    if t_i + t_j > 1.0 + 1e-12:
        raise InvalidParameterError(f"t_i + t_j = {t_i + t_j} exceeds 1")
    if not t_i - t_j > TIE_TOL:
        raise OrientationError(f"t_i={t_i} does not exceed t_j={t_j}")
    gap = (math.sqrt(t_i) - math.sqrt(t_j)) ** 2
    if gap >= 1.0:
        return math.inf
    return -math.log1p(-gap)


def _normalized(values, weights) -> ScoreDiffDistribution:
    w = np.asarray(weights, dtype=float)
    return ScoreDiffDistribution(np.asarray(values, dtype=float), w / w.sum())


def score_difference(source, rule: ScoringRule, i: int, j: int) -> ScoreDiffDistribution:
    """Law of ``beta[pos(i)] - beta[pos(j)]`` for one voter drawn from ``source``."""
    if isinstance(source, MallowsModel):
        return _normalized(*pair_joint(source, i, j).diff_support(rule.array))
    if isinstance(source, PairPositionDistribution):
        values, probs = source.diff_support(rule.array)
        if (source.i, source.j) == (j, i):
            values = -values
        return _normalized(values, probs)
    if isinstance(source, EmpiricalPreferences):
        S = source.score_matrix(rule)
        return _normalized(S[:, i] - S[:, j], source.weights)
    raise TypeError(f"unsupported preference source {type(source).__name__}")


def separation(source, i: int, j: int, K: int) -> tuple[float, float]:
    """``(t_i, t_j)`` for K-Approval on any supported source."""
    if isinstance(source, MallowsModel):
        return pair_joint(source, i, j).separation(K)
    if isinstance(source, PairPositionDistribution):
        ti, tj = source.separation(K)
        return (tj, ti) if (source.i, source.j) == (j, i) else (ti, tj)
    if isinstance(source, EmpiricalPreferences):
        return _empirical_separations(source, K, [(i, j)])[0]
    raise TypeError(f"unsupported preference source {type(source).__name__}")


def _empirical_separations(prefs: EmpiricalPreferences, K: int, pairs) -> list[tuple[float, float]]:
    S = prefs.score_matrix(approval_rule(K, prefs.M))
    w = prefs.weights / prefs.total_weight
    return [(float(w @ (S[:, i] * (1 - S[:, j]))), float(w @ (S[:, j] * (1 - S[:, i])))) for i, j in pairs]


def _oriented_approval_rate(ti: float, tj: float) -> float:
    if abs(ti - tj) <= TIE_TOL:
        raise OrientationError(f"pair is inseparable: t_i = t_j = {ti:.6g}")
    return rate_approval(max(ti, tj), min(ti, tj))


def pair_rate(source, rule: ScoringRule, i: int, j: int, closed_form: bool = True) -> float:
    """Rate of learning the order of ``i`` and ``j``; the pair may be given in either order.

    Approval-shaped rules use the closed form unless ``closed_form`` is False.
    """
    # the rate is symmetric; a canonical order keeps it bitwise so
    i, j = min(i, j), max(i, j)
    K = rule.approval_depth()
    if closed_form and K is not None:
        return _oriented_approval_rate(*separation(source, i, j, K))
    diff = score_difference(source, rule, i, j)
    if diff.mean < 0:
        diff = diff.negated()
    return rate_general(diff)


def chernoff_error_bound(rate: float, N: int, M: int | None = None) -> float:
    """``M**2 exp(-rate N)``, or the pairwise bound ``exp(-rate N)`` when M is None."""
    if rate < 0 or N < 0:
        raise InvalidParameterError("rate and N must be nonnegative")
    tail = 0.0 if math.isinf(rate) else math.exp(-rate * N)
    return tail if M is None else M * M * tail


def voters_needed(rate: float, epsilon: float) -> int:
    """Smallest N with ``exp(-rate N) < epsilon``."""
    if not 0.0 < epsilon < 1.0:
        raise InvalidParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    if rate < 0:
        raise InvalidParameterError("rate must be nonnegative")
    if rate == 0:
        raise InseparableError("a zero rate never drives the error below epsilon")
    if math.isinf(rate):
        return 1
    return math.floor(math.log(1.0 / epsilon) / rate) + 1


def mixture_rate_scoring(source, components: Sequence[tuple[ScoringRule, float]], i: int, j: int) -> float:
    """Pairwise rate when each voter is scored by a rule drawn with the given probabilities."""
    _check_mixture([d for _, d in components])
    values, probs = [], []
    for rule, d in components:
        diff = score_difference(source, rule, i, j)
        values.append(diff.values)
        probs.append(d * diff.probs)
    mix = _normalized(np.concatenate(values), np.concatenate(probs))
    if mix.mean < 0:
        mix = mix.negated()
    return rate_general(mix)


def mixture_rate_approval(
    components: Sequence[tuple[int, float]], separations: dict[int, tuple[float, float]]
) -> float:
    """Pairwise rate of a randomized K-Approval mechanism.

    ``separations[K]`` holds ``(t_i, t_j)`` for pure K-Approval; mixing
    averages them.
    """
    _check_mixture([d for _, d in components])
    ti = sum(d * separations[K][0] for K, d in components)
    tj = sum(d * separations[K][1] for K, d in components)
    return rate_approval(ti, tj)


def _check_mixture(probs):
    if any(d <= 0 for d in probs) or abs(sum(probs) - 1.0) > 1e-9:
        raise InvalidParameterError(f"mixture probabilities {probs} must be positive and sum to 1")


@dataclass
class RateReport:
    """Per-pair rates across tiers, the pivotal pair and the overall rate."""

    mechanism_label: str
    goal: Goal
    outcome: Outcome
    pair_rates: dict[tuple[int, int], float]
    separations: dict[tuple[int, int], tuple[float, float]] = field(default_factory=dict)

    @property
    def pivotal_pair(self) -> tuple[int, int]:
        return min(self.pair_rates, key=lambda pair: (self.pair_rates[pair], pair))

    @property
    def overall_rate(self) -> float:
        return self.pair_rates[self.pivotal_pair]

    def error_bound(self, N: int) -> float:
        """Bound on the expected number of misordered cross-tier pairs after N voters."""
        return chernoff_error_bound(self.overall_rate, N, self.goal.M)

    def to_dict(self) -> dict:
        pairs = []
        for (i, j), r in sorted(self.pair_rates.items()):
            row = {"i": i + 1, "j": j + 1, "rate": serialize_rate(r)}
            if (i, j) in self.separations:
                row["t_i"], row["t_j"] = self.separations[(i, j)]
            pairs.append(row)
        return {
            "mechanism": self.mechanism_label,
            "goal": list(self.goal.tier_sizes),
            "overall_rate": serialize_rate(self.overall_rate),
            "pivotal_pair": [c + 1 for c in self.pivotal_pair],
            "pairs": pairs,
        }


def serialize_rate(rate: float):
    """Floats pass through; an infinite rate becomes the string ``"unbounded"``."""
    return "unbounded" if math.isinf(rate) else rate


def _resolve_outcome(scores: np.ndarray, goal: Goal, asymptotic: Outcome | None) -> Outcome:
    if asymptotic is None:
        return asymptotic_outcome(scores, goal)
    if asymptotic.goal != goal:
        raise InvalidParameterError(f"outcome tiers {asymptotic.goal} do not match goal {goal}")
    check_outcome(scores, asymptotic)
    return asymptotic


def outcome_rate(source, rule: ScoringRule, goal: Goal, asymptotic: Outcome | None = None) -> RateReport:
    """Rate at which ``rule`` learns the asymptotic outcome for ``goal``.

    Raises :class:`OutcomeMismatchError` if some cross-tier pair is tied or
    reversed in expected score.
    """
    scores = expected_scores(source, rule)
    outcome = _resolve_outcome(scores, goal, asymptotic)
    pairs = outcome.cross_tier_pairs()
    K = rule.approval_depth()
    rates, seps = {}, {}
    if K is not None:
        table = separation_table(source, pairs, [K])
        for pair in pairs:
            seps[pair] = table[pair][K]
            rates[pair] = rate_approval(*seps[pair])
    elif isinstance(source, EmpiricalPreferences):
        S = source.score_matrix(rule)
        w = source.weights / source.total_weight
        for i, j in pairs:
            rates[(i, j)] = rate_general(ScoreDiffDistribution(S[:, i] - S[:, j], w))
    else:
        for i, j in pairs:
            rates[(i, j)] = rate_general(score_difference(source, rule, i, j))
    return RateReport(rule.label, goal, outcome, rates, seps)


def mixture_outcome_rate(
    source, components: Sequence[tuple[ScoringRule, float]], goal: Goal, asymptotic: Outcome | None = None
) -> RateReport:
    """Outcome rate of a randomized scoring-rule mechanism."""
    _check_mixture([d for _, d in components])
    scores = sum(d * expected_scores(source, rule) for rule, d in components)
    outcome = _resolve_outcome(scores, goal, asymptotic)
    rates = {(i, j): mixture_rate_scoring(source, components, i, j) for i, j in outcome.cross_tier_pairs()}
    label = "+".join(f"{d:g}*{rule.label}" for rule, d in components)
    return RateReport(label, goal, outcome, rates)


@dataclass
class SeparationTable:
    """Approval separations ``table[(i, j)][K] = (t_i, t_j)`` for cross-tier pairs.

    Built from a preference source with :func:`separation_table`, or filled in
    by hand from published values.
    """

    table: dict[tuple[int, int], dict[int, tuple[float, float]]]

    def __getitem__(self, pair):
        return self.table[pair]

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self.table)

    @property
    def depths(self) -> list[int]:
        return sorted(set.intersection(*(set(v) for v in self.table.values())))

    def pure_rates(self, K: int) -> dict[tuple[int, int], float]:
        return {pair: rate_approval(*self.table[pair][K]) for pair in self.pairs}

    def mixture_rates(self, components: Sequence[tuple[int, float]]) -> dict[tuple[int, int], float]:
        return {pair: mixture_rate_approval(components, self.table[pair]) for pair in self.pairs}


def separation_table(source, pairs, depths) -> SeparationTable:
    """Collect ``(t_i, t_j)`` for every pair and approval depth."""
    table = {pair: {} for pair in pairs}
    for K in depths:
        if isinstance(source, EmpiricalPreferences):
            values = _empirical_separations(source, K, pairs)
        else:
            values = [separation(source, i, j, K) for i, j in pairs]
        for pair, tt in zip(pairs, values):
            table[pair][K] = tt
    return SeparationTable(table)


def min_rate(rates: dict[tuple[int, int], float]) -> tuple[float, tuple[int, int]]:
    pair = min(rates, key=lambda p: (rates[p], p))
    return rates[pair], pair
