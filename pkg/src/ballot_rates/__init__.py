"""Large-deviation learning rates for positional scoring rules.

Compute how fast an election mechanism learns its asymptotic outcome from a
Mallows model or from ranked ballots, pick rate-optimal approval depths, test
design invariance and validate rates against simulation.
"""

from .core import (
    TIE_TOL,
    Ballot,
    EmpiricalPreferences,
    Goal,
    Outcome,
    Ranking,
    ScoringRule,
    approval_rule,
    asymptotic_outcome,
    borda_rule,
    check_outcome,
    expected_scores,
    outcome_of,
    tally,
)
from .design import (
    InvarianceVerdict,
    OptimalKResult,
    RandomizationScan,
    approx_invariance,
    check_invariance,
    optimal_k,
    optimal_k_scan,
    randomization_scan,
)
from .errors import (
    AmbiguousTiersError,
    BallotParseError,
    BallotRatesError,
    CensoredPositionError,
    InseparableError,
    InsufficientDepthError,
    InvalidParameterError,
    OrientationError,
    OutcomeMismatchError,
)
from .io import load, pair_distribution, parse, parse_preflib, truncate, write
from .mallows import (
    MallowsModel,
    PairPositionDistribution,
    approval_separation,
    insertion_probability,
    kendall_tau_distance,
    pair_joint,
    sample,
)
from .rates import (
    RateReport,
    ScoreDiffDistribution,
    SeparationTable,
    chernoff_error_bound,
    mixture_outcome_rate,
    mixture_rate_approval,
    mixture_rate_scoring,
    outcome_rate,
    pair_rate,
    rate_approval,
    rate_general,
    score_difference,
    separation_table,
    voters_needed,
)
from .sim import ErrorCurve, bootstrap_curve, model_curve, overlay

__version__ = "0.1.0"

__all__ = [
    "AmbiguousTiersError",
    "approval_rule",
    "approval_separation",
    "approx_invariance",
    "asymptotic_outcome",
    "Ballot",
    "BallotParseError",
    "BallotRatesError",
    "bootstrap_curve",
    "borda_rule",
    "CensoredPositionError",
    "check_invariance",
    "check_outcome",
    "chernoff_error_bound",
    "EmpiricalPreferences",
    "ErrorCurve",
    "expected_scores",
    "Goal",
    "InseparableError",
    "insertion_probability",
    "InsufficientDepthError",
    "InvalidParameterError",
    "InvarianceVerdict",
    "kendall_tau_distance",
    "load",
    "MallowsModel",
    "mixture_outcome_rate",
    "mixture_rate_approval",
    "mixture_rate_scoring",
    "model_curve",
    "optimal_k",
    "optimal_k_scan",
    "OptimalKResult",
    "OrientationError",
    "Outcome",
    "outcome_of",
    "outcome_rate",
    "OutcomeMismatchError",
    "overlay",
    "pair_distribution",
    "pair_joint",
    "pair_rate",
    "PairPositionDistribution",
    "parse",
    "parse_preflib",
    "randomization_scan",
    "RandomizationScan",
    "Ranking",
    "rate_approval",
    "rate_general",
    "RateReport",
    "sample",
    "score_difference",
    "ScoreDiffDistribution",
    "ScoringRule",
    "separation_table",
    "SeparationTable",
    "tally",
    "TIE_TOL",
    "truncate",
    "voters_needed",
    "write",
]
