"""Ballot files, truncation to shallower elicitation, and empirical pair distributions.

Native format (UTF-8, LF or CRLF)::

    # comment
    M=4
    name 1: Library renovation
    5: 2 > 4 > 1
    3: 1 > 3

``M=<int>`` must precede the ballots.  Body lines are ``<count>: <id> (> <id>)*``
with 1-based candidate ids, best first; ``#`` starts a comment anywhere on a
line.  Repeated ballots are merged by summing counts.

PrefLib strict-order files (``.soc`` / ``.soi``) are read by
:func:`parse_preflib`: the modern layout with ``# NUMBER ALTERNATIVES: n``
and ``# ALTERNATIVE NAME k: text`` headers and ``count: a,b,c`` bodies, and
the legacy layout (candidate count, ``k,name`` lines, a totals line, then
``count,a,b,c`` rows).
"""

from __future__ import annotations

import os
import re
from pathlib import Path

import numpy as np

from .core import Ballot, EmpiricalPreferences
from .errors import BallotParseError, InsufficientDepthError, InvalidParameterError
from .mallows import PairPositionDistribution

MAX_COUNT = 2**53

_HEADER = re.compile(r"^M\s*=\s*(\d+)$")
_NAME = re.compile(r"^name\s+(\d+)\s*:\s*(.*)$")
_BODY = re.compile(r"^(\S+)\s*:\s*(.+)$")


def _read(source) -> str:
    if isinstance(source, (os.PathLike, Path)):
        return Path(source).read_text(encoding="utf-8")
    return source


def _count(token: str, lineno: int) -> int:
    try:
        count = int(token)
    except ValueError:
        raise BallotParseError(f"count {token!r} is not an integer", lineno) from None
    if count <= 0:
        raise BallotParseError(f"count must be positive, got {count}", lineno)
    if count > MAX_COUNT:
        raise BallotParseError(f"count {count} overflows", lineno)
    return count


def _ids(tokens, M: int, lineno: int) -> tuple[int, ...]:
    ids = []
    for tok in tokens:
        tok = tok.strip()
        if not tok.isdigit():
            raise BallotParseError(f"candidate id {tok!r} is not a positive integer", lineno)
        c = int(tok)
        if not 1 <= c <= M:
            raise BallotParseError(f"unknown candidate {c} (M={M})", lineno)
        if c - 1 in ids:
            raise BallotParseError(f"candidate {c} listed twice", lineno)
        ids.append(c - 1)
    return tuple(ids)


def parse(source) -> EmpiricalPreferences:
    """Read native ballot text, or a file when given a path object."""
    text = _read(source)
    M = None
    names = {}
    ballots = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if (m := _HEADER.match(line)) is not None:
            if M is not None:
                raise BallotParseError("duplicate M= header", lineno)
            M = int(m.group(1))
            if M < 2:
                raise BallotParseError("need at least two candidates", lineno)
            continue
        if M is None:
            raise BallotParseError("expected M=<int> header before any other line", lineno)
        if (m := _NAME.match(line)) is not None:
            k = int(m.group(1))
            if not 1 <= k <= M:
                raise BallotParseError(f"name for unknown candidate {k}", lineno)
            names[k - 1] = m.group(2).strip()
            continue
        if (m := _BODY.match(line)) is None:
            raise BallotParseError(f"cannot parse {line!r}", lineno)
        count = _count(m.group(1), lineno)
        ballots.append(Ballot(_ids(m.group(2).split(">"), M, lineno), count))
    if M is None:
        raise BallotParseError("missing M=<int> header")
    if not ballots:
        raise BallotParseError("no ballots")
    return EmpiricalPreferences.from_ballots(M, ballots, names)


def parse_preflib(source) -> EmpiricalPreferences:
    """Read a PrefLib strict (possibly incomplete) order file."""
    text = _read(source)
    lines = [(n, raw.strip()) for n, raw in enumerate(text.splitlines(), start=1) if raw.strip()]
    if not lines:
        raise BallotParseError("empty file")
    M = None
    names = {}
    ballots = []
    if lines[0][1].isdigit():
        # legacy layout
        M = int(lines[0][1])
        body = lines[1:]
        for n, line in body[:M]:
            k, _, name = line.partition(",")
            names[int(k) - 1] = name.strip()
        body = body[M + 1:]
        for n, line in body:
            count, _, rest = line.partition(",")
            ballots.append(Ballot(_ids(rest.split(","), M, n), _count(count.strip(), n)))
    else:
        for n, line in lines:
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                key = key.strip().upper()
                if key == "NUMBER ALTERNATIVES":
                    M = int(value)
                elif key.startswith("ALTERNATIVE NAME"):
                    names[int(key.split()[-1]) - 1] = value.strip()
                continue
            if M is None:
                raise BallotParseError("missing '# NUMBER ALTERNATIVES' header", n)
            count, sep, rest = line.partition(":")
            if not sep:
                raise BallotParseError(f"cannot parse {line!r}", n)
            if "{" in rest:
                raise BallotParseError("ties are not supported", n)
            ballots.append(Ballot(_ids(rest.split(","), M, n), _count(count.strip(), n)))
    if M is None or not ballots:
        raise BallotParseError("no ballots")
    return EmpiricalPreferences.from_ballots(M, ballots, names)


def load(path) -> EmpiricalPreferences:
    """Read a ballot file, choosing the PrefLib reader for ``.soc``/``.soi``."""
    path = Path(path)
    if path.suffix.lower() in (".soc", ".soi"):
        return parse_preflib(path)
    return parse(path)


def dumps(prefs: EmpiricalPreferences) -> str:
    """Native ballot text in canonical order."""
    canon = EmpiricalPreferences.from_ballots(prefs.M, prefs.ballots, prefs.names)
    lines = [f"M={canon.M}"]
    lines += [f"name {k + 1}: {name}" for k, name in sorted(canon.names.items())]
    for b in canon.ballots:
        w = int(b.weight) if float(b.weight).is_integer() else b.weight
        lines.append(f"{w}: " + " > ".join(str(c + 1) for c in b.ordered_prefix))
    return "\n".join(lines) + "\n"


def write(prefs: EmpiricalPreferences, path) -> None:
    Path(path).write_text(dumps(prefs), encoding="utf-8", newline="\n")


def truncate(prefs: EmpiricalPreferences, K: int) -> EmpiricalPreferences:
    """Keep only each ballot's top K, as if K-Ranking had been elicited."""
    if K < 1:
        raise InvalidParameterError("K must be positive")
    if K > prefs.min_prefix:
        raise InsufficientDepthError(f"some ballots list only {prefs.min_prefix} candidates; cannot keep {K}")
    return EmpiricalPreferences.from_ballots(
        prefs.M, (Ballot(b.ordered_prefix[:K], b.weight) for b in prefs.ballots), prefs.names
    )


def pair_distribution(prefs: EmpiricalPreferences, i: int, j: int) -> PairPositionDistribution:
    """Weighted joint positions of ``i`` and ``j`` over the ballots.

    On a partial ballot an unlisted candidate goes to the censored tail;
    ``horizon`` is the shortest depth among ballots that censor either one.
    """
    M = prefs.M
    p = np.zeros((M, M))
    tail_i = np.zeros(M)
    tail_j = np.zeros(M)
    censored = 0.0
    horizon = M
    total = prefs.total_weight
    for b in prefs.ballots:
        w = b.weight / total
        order = b.completed(M) if b.is_complete(M) else b.ordered_prefix
        pos = {c: k for k, c in enumerate(order)}
        li, lj = pos.get(i), pos.get(j)
        if li is not None and lj is not None:
            p[li, lj] += w
            continue
        horizon = min(horizon, b.depth)
        if li is not None:
            tail_i[li] += w
        elif lj is not None:
            tail_j[lj] += w
        else:
            censored += w
    return PairPositionDistribution(M, i, j, p, tail_i, tail_j, censored, horizon)
