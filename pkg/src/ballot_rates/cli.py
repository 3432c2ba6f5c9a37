"""Command-line interface: ``ballot-rates <command> [flags]``.

Standard output carries only the serialized result; diagnostics go to
standard error.  Exit codes: 0 success, 1 usage or invalid parameters,
2 asymptotic-outcome mismatch or inseparable pair, 3 input/output failure.
The only environment variable consulted is ``BALLOT_RATES_THREADS``.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import json
import sys
from pathlib import Path

from . import design, io, rates, sim
from .core import Goal, Ranking, ScoringRule, approval_rule, borda_rule
from .errors import (
    AmbiguousTiersError,
    BallotParseError,
    BallotRatesError,
    InseparableError,
    OutcomeMismatchError,
)
from .mallows import MallowsModel, pair_joint

DEFAULT_SEED = 20160000

EXIT_OK, EXIT_USAGE, EXIT_MISMATCH, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class IOFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",")]


def _ints(text):
    try:
        return _int_list(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers like 1,2,5-8, got {text!r}") from None


def _floats(text):
    try:
        return _float_list(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _mallows_spec(text: str) -> MallowsModel:
    """``M=4,phi=0.1`` with an optional ``ref=2>1>3>4`` (1-based, best first)."""
    fields = {}
    for part in text.split(","):
        key, sep, value = part.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"bad Mallows field {part!r}; expected key=value")
        fields[key.strip().lower()] = value.strip()
    try:
        M = int(fields.pop("m"))
        phi = float(fields.pop("phi"))
        ref = fields.pop("ref", None)
        reference = None if ref is None else Ranking.from_order([int(c) - 1 for c in ref.split(">")])
    except (KeyError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"Mallows spec needs M=<int>,phi=<float>: {exc}") from None
    if fields:
        raise argparse.ArgumentTypeError(f"unknown Mallows fields {sorted(fields)}")
    try:
        return MallowsModel(M, phi, reference)
    except BallotRatesError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# ---------------------------------------------------------------- options


def _add_source(p):
    g = p.add_argument_group("preference source (exactly one)")
    g.add_argument("--mallows", type=_mallows_spec, metavar="M=4,phi=0.1[,ref=1>2>3>4]",
                   help="Mallows model; ref is the reference order, default 1>2>...>M")
    g.add_argument("--input", type=Path, metavar="PATH",
                   help="ballot file (native format, or PrefLib .soc/.soi)")
    g.add_argument("--complete-only", action="store_true",
                   help="drop ballots that do not determine a full ranking")


def _add_goal(p):
    g = p.add_argument_group("goal (exactly one)")
    g.add_argument("--winners", type=int, metavar="W", help="tiers (W, M-W)")
    g.add_argument("--tiers", type=_ints, metavar="a,b,...", help="explicit tier sizes, best first")
    g.add_argument("--rank-all", action="store_true", help="all-singleton tiers (full ranking)")


def _add_mechanisms(p):
    g = p.add_argument_group("mechanisms")
    g.add_argument("--approval", type=_ints, metavar="K[,K...]", help="K-Approval for each listed K")
    g.add_argument("--borda", type=_ints, metavar="K[,K...]", help="Borda on the top K positions")
    g.add_argument("--beta", type=_floats, metavar="b1,...,bM", help="custom non-increasing score vector")


def _add_output(p, csv_ok=True):
    g = p.add_argument_group("output")
    g.add_argument("--format", choices=("json", "csv") if csv_ok else ("json",), default="json")
    g.add_argument("--output", type=Path, metavar="PATH", help="write here instead of standard output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="ballot-rates",
        description="Large-deviation learning rates of positional scoring rules.",
        epilog=f"Exit codes: 0 ok, 1 usage, 2 mismatch/inseparable, 3 I/O. "
               f"BALLOT_RATES_THREADS caps worker threads. Default seed {DEFAULT_SEED}.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rates", help="outcome rate of each mechanism")
    _add_source(p), _add_goal(p), _add_mechanisms(p), _add_output(p)

    p = sub.add_parser("optimal-k", help="rate-optimal K-Approval for one goal")
    _add_source(p), _add_goal(p), _add_output(p)
    p.add_argument("--k-range", type=_ints, metavar="K,...", help="approval depths to consider (default 1..M-1)")

    p = sub.add_parser("scan", help="optimal K for every winner count W")
    _add_source(p), _add_output(p)
    p.add_argument("--w-range", type=_ints, metavar="W,...", help="winner counts (default 1..M-1)")
    p.add_argument("--k-range", type=_ints, metavar="K,...", help="approval depths (default 1..M-1)")

    p = sub.add_parser("randomize", help="two-component K-Approval mixtures")
    _add_source(p), _add_goal(p), _add_output(p)
    p.add_argument("--k-range", type=_ints, metavar="K,...", help="depths whose pairs are mixed (default 1..M-1)")
    p.add_argument("--d-grid", type=_floats, metavar="d,...", help="mixture probabilities of the first depth")
    p.add_argument("--no-refine", action="store_true", help="skip local refinement around the best grid d")

    p = sub.add_parser("invariance", help="do all scoring rules share the asymptotic outcome?")
    _add_source(p), _add_goal(p), _add_mechanisms(p), _add_output(p, csv_ok=False)
    p.add_argument("--top", type=int, metavar="W",
                   help="with ballot data and mechanisms: top-W overlap matrix (default: Kendall tau)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="tie-breaking seed")

    p = sub.add_parser("simulate", help="simulated error against N, with exp(-rN)")
    _add_source(p), _add_goal(p), _add_mechanisms(p), _add_output(p)
    p.add_argument("--n-grid", type=_ints, metavar="N,...", help="electorate sizes (default 25,50,...,3200)")
    p.add_argument("--trials", type=int, default=sim.DEFAULT_TRIALS)
    p.add_argument("--metric", choices=sim.METRICS, default="winner_set_miss_fraction")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = sub.add_parser("sample-size", help="voters needed for exp(-rN) < epsilon")
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    _add_output(p, csv_ok=False)

    p = sub.add_parser("mallows-table", help="joint positions of a candidate pair under Mallows")
    p.add_argument("--M", type=int, required=True, dest="M")
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--pair", type=_ints, required=True, metavar="i,j", help="1-based candidate ids")
    _add_output(p)
    return parser


# ---------------------------------------------------------------- config


def _source(args):
    chosen = [x for x in (args.mallows, args.input) if x is not None]
    if len(chosen) != 1:
        raise UsageError("give exactly one of --mallows and --input")
    if args.mallows is not None:
        if args.complete_only:
            raise UsageError("--complete-only applies to --input only")
        return args.mallows
    try:
        prefs = io.load(args.input)
    except OSError as exc:
        raise IOFailure(f"cannot read {args.input}: {exc.strerror or exc}") from exc
    return prefs.complete_only() if args.complete_only else prefs


def _goal(args, M):
    given = sum([args.winners is not None, args.tiers is not None, bool(args.rank_all)])
    if given != 1:
        raise UsageError("give exactly one of --winners, --tiers and --rank-all")
    if args.winners is not None:
        return Goal.winners(args.winners, M)
    if args.rank_all:
        return Goal.full_ranking(M)
    goal = Goal(tuple(args.tiers))
    if goal.M != M:
        raise UsageError(f"tier sizes {args.tiers} sum to {goal.M}, but there are {M} candidates")
    return goal


def _mechanisms(args, M) -> list[ScoringRule]:
    rules = [approval_rule(K, M) for K in args.approval or ()]
    rules += [borda_rule(K, M) for K in args.borda or ()]
    if args.beta is not None:
        if len(args.beta) != M:
            raise UsageError(f"--beta needs {M} values, got {len(args.beta)}")
        rules.append(ScoringRule(tuple(args.beta), label="beta(" + ",".join(f"{b:g}" for b in args.beta) + ")"))
    return rules


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _csv(rows: list[dict], columns: list[str]) -> str:
    buf = _stdio.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in columns})
    return buf.getvalue()


def _rate(r):
    return None if r is None else rates.serialize_rate(r)


def _pair(p):
    return None if p is None else [p[0] + 1, p[1] + 1]


# ---------------------------------------------------------------- commands


def cmd_rates(args):
    src = _source(args)
    goal = _goal(args, src.M)
    rules = _mechanisms(args, src.M)
    if not rules:
        raise UsageError("give at least one of --approval, --borda and --beta")
    reports, status = [], EXIT_OK
    for rule in rules:
        try:
            reports.append(rates.outcome_rate(src, rule, goal).to_dict())
        except OutcomeMismatchError as exc:
            status = EXIT_MISMATCH
            print(f"{rule.label}: {exc}", file=sys.stderr)
            reports.append({"mechanism": rule.label, "goal": list(goal.tier_sizes), "flag": "mismatch",
                            "tied_pair": _pair(exc.pair)})
    if args.format == "csv":
        rows = []
        for rep in reports:
            if "flag" in rep:
                rows.append({"mechanism": rep["mechanism"], "i": rep["tied_pair"][0], "j": rep["tied_pair"][1],
                             "flag": "mismatch"})
                continue
            for pr in rep["pairs"]:
                pivotal = [pr["i"], pr["j"]] == rep["pivotal_pair"]
                rows.append({"mechanism": rep["mechanism"], **pr, "flag": "pivotal" if pivotal else ""})
        return _csv(rows, ["mechanism", "i", "j", "rate", "t_i", "t_j", "flag"]), status
    return _json({"source": _source_label(src), "reports": reports}), status


def _source_label(src):
    if isinstance(src, MallowsModel):
        return {"mallows": {"M": src.M, "phi": src.phi, "reference": [c + 1 for c in src.reference.order]}}
    return {"ballots": {"M": src.M, "distinct": len(src.ballots), "total_weight": src.total_weight,
                        "min_prefix": src.min_prefix}}


def _optimal_rows(res):
    return [{**row, "rate": _rate(row["rate"])} for row in res.rows()]


def cmd_optimal_k(args):
    src = _source(args)
    goal = _goal(args, src.M)
    res = design.optimal_k(src, goal, args.k_range)
    status = EXIT_OK if res.per_K else EXIT_MISMATCH
    if args.format == "csv":
        return _csv(_optimal_rows(res), ["W", "K", "rate", "flag"]), status
    return _json({
        "goal": list(goal.tier_sizes),
        "best_K": res.best_K,
        "best_rate": _rate(res.best_rate),
        "pivotal_pair": _pair(res.pivotal.get(res.best_K)),
        "per_K": _optimal_rows(res),
    }), status


def cmd_scan(args):
    src = _source(args)
    Ws = args.w_range or range(1, src.M)
    results = design.optimal_k_scan(src, Ws, args.k_range)
    rows = [row for res in results for row in _optimal_rows(res)]
    if args.format == "csv":
        return _csv(rows, ["W", "K", "rate", "flag"]), EXIT_OK
    summary = [{"W": res.goal.tier_sizes[0], "best_K": res.best_K, "best_rate": _rate(res.best_rate)}
               for res in results]
    return _json({"rows": rows, "best": summary}), EXIT_OK


def cmd_randomize(args):
    src = _source(args)
    goal = _goal(args, src.M)
    Ks = args.k_range or list(range(1, src.M))
    pairs = [(a, b) for n, a in enumerate(Ks) for b in Ks[n + 1:]]
    scan = design.randomization_scan(src, goal, pairs, args.d_grid or design.DEFAULT_D_GRID,
                                     refine=not args.no_refine)
    cells = [{**c.as_row(), "d": float(c.d)} for c in scan.cells]
    columns = ["Ka", "Kb", "d", "rate_mix", "rate_a", "rate_b", "beats_opt"]
    if args.format == "csv":
        return _csv(cells, columns), EXIT_OK
    findings = [
        {"Ka": f.Ka, "Kb": f.Kb, "d": float(f.d), "rate_mix": f.rate_mix, "rate_a": f.rate_a, "rate_b": f.rate_b,
         "pivotal_a": _pair(f.pivotal_a), "pivotal_b": _pair(f.pivotal_b), "beats_opt": f.beats_opt,
         "best_pure_K": f.best_pure_K, "best_pure_rate": f.best_pure_rate}
        for f in scan.findings
    ]
    skipped = [{"Ka": a, "Kb": b, "reason": why} for (a, b), why in sorted(scan.skipped.items())]
    return _json({"goal": list(goal.tier_sizes), "findings": findings, "skipped": skipped, "cells": cells}), EXIT_OK


def cmd_invariance(args):
    src = _source(args)
    goal = _goal(args, src.M)
    out = {"goal": list(goal.tier_sizes)}
    status = EXIT_OK
    try:
        verdict = design.check_invariance(src, goal)
        out["exact"] = verdict.exact
        out["witness_tiers"] = (None if verdict.witness_tiers is None
                                else [sorted(c + 1 for c in t) for t in verdict.witness_tiers.tiers])
        out["violation"] = (None if verdict.violation is None
                            else dict(zip(("i", "j", "k"), (verdict.violation[0] + 1, verdict.violation[1] + 1,
                                                            verdict.violation[2]))))
    except AmbiguousTiersError as exc:
        print(str(exc), file=sys.stderr)
        out["exact"] = None
        out["flag"] = "ambiguous"
        status = EXIT_MISMATCH
    rules = _mechanisms(args, src.M)
    if rules:
        if isinstance(src, MallowsModel):
            raise UsageError("the agreement matrix needs --input ballot data")
        matrix = design.approx_invariance(src, args.top, rules, args.seed)
        out["agreement"] = {
            "measure": "kendall_tau" if args.top is None else f"top_{args.top}_overlap",
            "mechanisms": [r.label for r in rules],
            "matrix": matrix.tolist(),
        }
    return _json(out), status


def cmd_simulate(args):
    src = _source(args)
    goal = _goal(args, src.M)
    rules = _mechanisms(args, src.M)
    if len(rules) != 1:
        raise UsageError("simulate takes exactly one mechanism")
    rule = rules[0]
    grid = args.n_grid or sim.DEFAULT_N_GRID
    status = EXIT_OK
    if isinstance(src, MallowsModel):
        curve = sim.model_curve(src, rule, goal, grid, args.trials, args.metric, args.seed)
    else:
        curve = sim.bootstrap_curve(src, rule, goal, grid, args.trials, args.metric, args.seed)
    try:
        rate = rates.outcome_rate(src, rule, goal).overall_rate
    except OutcomeMismatchError as exc:
        print(f"no rate for the reference outcome: {exc}", file=sys.stderr)
        rate = 0.0
    if curve.flag:
        status = EXIT_MISMATCH
    rows = [{**row, "stderr": float(se)} for row, se in zip(curve.to_rows(rate), curve.stderr)]
    if args.format == "csv":
        return _csv(rows, ["N", "value", "bound", "stderr"]), status
    fit = sim.overlay(curve, rate) if rate > 0 else None
    return _json({
        "mechanism": rule.label,
        "goal": list(goal.tier_sizes),
        "metric": curve.metric,
        "trials": curve.trials,
        "seed": curve.seed,
        "rate": rates.serialize_rate(rate),
        "flag": curve.flag or None,
        "slope": None if fit is None else fit.slope,
        "slope_ratio": None if fit is None else fit.ratio,
        "fit_note": None if fit is None else fit.note,
        "rows": rows,
    }), status


def cmd_sample_size(args):
    n = rates.voters_needed(args.rate, args.epsilon)
    return _json({"rate": args.rate, "epsilon": args.epsilon, "voters_needed": n}), EXIT_OK


def cmd_mallows_table(args):
    if len(args.pair) != 2:
        raise UsageError("--pair takes two candidate ids")
    i, j = (c - 1 for c in args.pair)
    model = MallowsModel(args.M, args.phi)
    for c in (i, j):
        if not 0 <= c < args.M:
            raise UsageError(f"candidate {c + 1} outside 1..{args.M}")
    p = pair_joint(model, i, j).p
    if args.format == "csv":
        rows = [{"position_i": a + 1, **{f"position_j={b + 1}": p[a, b] for b in range(args.M)}}
                for a in range(args.M)]
        return _csv(rows, ["position_i"] + [f"position_j={b + 1}" for b in range(args.M)]), EXIT_OK
    return _json({"M": args.M, "phi": args.phi, "pair": list(args.pair), "matrix": p.tolist()}), EXIT_OK


COMMANDS = {
    "rates": cmd_rates,
    "optimal-k": cmd_optimal_k,
    "scan": cmd_scan,
    "randomize": cmd_randomize,
    "invariance": cmd_invariance,
    "simulate": cmd_simulate,
    "sample-size": cmd_sample_size,
    "mallows-table": cmd_mallows_table,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text, status = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ballot-rates {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IOFailure, BallotParseError) as exc:
        print(f"ballot-rates {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (OutcomeMismatchError, InseparableError, AmbiguousTiersError) as exc:
        print(f"ballot-rates {args.command}: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except BallotRatesError as exc:
        print(f"ballot-rates {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.output is None:
            sys.stdout.write(text)
        else:
            args.output.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        print(f"ballot-rates: cannot write {args.output or 'stdout'}: {exc}", file=sys.stderr)
        return EXIT_IO
    return status


if __name__ == "__main__":
    sys.exit(main())
