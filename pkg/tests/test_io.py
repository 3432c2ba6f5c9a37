import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ballot_rates import Ballot, EmpiricalPreferences, approval_rule, approval_separation
from ballot_rates.core import tally
from ballot_rates.errors import BallotParseError, CensoredPositionError, InsufficientDepthError
from ballot_rates.io import dumps, load, pair_distribution, parse, parse_preflib, truncate, write
from ballot_rates.rates import pair_rate
from ballot_rates import ScoringRule
from oracles import disjoint_rankings

DISJOINT = "M=4\nname 1: A\nname 2: B\nname 3: C\nname 4: D\n" + "".join(
    f"1: {' > '.join(str(c + 1) for c in order)}\n" for order in disjoint_rankings()
)


class TestParse:
    def test_basic(self):
        prefs = parse("M=3\n2: 1 > 2 > 3\n1: 3 > 1 > 2\n")
        assert len(prefs.ballots) == 2
        assert prefs.total_weight == 3
        assert prefs.min_prefix == 3

    def test_partial(self):
        prefs = parse("M=4\n5: 2 > 4\n")
        assert prefs.min_prefix == 2
        assert prefs.ballots[0].ordered_prefix == (1, 3)

    def test_comments_crlf_and_names(self):
        prefs = parse("# header\r\nM=3  # three\r\nname 2: Park bench\r\n1: 2 > 1  # note\r\n")
        assert prefs.names == {1: "Park bench"}
        assert prefs.total_weight == 1

    def test_duplicates_merged(self):
        prefs = parse("M=3\n2: 1 > 2\n3: 1 > 2\n")
        assert len(prefs.ballots) == 1 and prefs.ballots[0].weight == 5

    @pytest.mark.parametrize(
        "text,line",
        [
            ("M=3\n1: 1 > 1 > 2\n", 2),
            ("M=3\n1: 1 > 4\n", 2),
            ("M=3\n0: 1 > 2\n", 2),
            ("M=3\n-2: 1 > 2\n", 2),
            ("M=3\n# ok\n99999999999999999999: 1\n", 3),
            ("1: 1 > 2\n", 1),
            ("M=3\nM=3\n", 2),
            ("M=3\n1: a > b\n", 2),
            ("M=3\nnonsense\n", 2),
        ],
    )
    def test_errors_carry_line(self, text, line):
        with pytest.raises(BallotParseError) as info:
            parse(text)
        assert info.value.lineno == line
        assert str(info.value).startswith(f"line {line}: ")

    def test_empty(self):
        with pytest.raises(BallotParseError):
            parse("M=3\n")

    def test_path_object(self, tmp_path):
        path = tmp_path / "x.ballots"
        path.write_text(DISJOINT)
        assert load(path).total_weight == 5


class TestPreflib:
    MODERN = (
        "# FILE NAME: x.soi\n# NUMBER ALTERNATIVES: 3\n# ALTERNATIVE NAME 1: Red\n"
        "# ALTERNATIVE NAME 2: Blue\n# ALTERNATIVE NAME 3: Green\n4: 1,2,3\n2: 3,1\n"
    )
    LEGACY = "3\n1,Red\n2,Blue\n3,Green\n6,6,2\n4,1,2,3\n2,3,1\n"

    @pytest.mark.parametrize("text", [MODERN, LEGACY])
    def test_layouts(self, text):
        prefs = parse_preflib(text)
        assert prefs.M == 3
        assert prefs.names[0] == "Red"
        assert prefs.total_weight == 6
        assert prefs.min_prefix == 2

    def test_suffix_dispatch(self, tmp_path):
        path = tmp_path / "e.soi"
        path.write_text(self.MODERN)
        assert load(path).total_weight == 6

    def test_ties_rejected(self):
        with pytest.raises(BallotParseError):
            parse_preflib("# NUMBER ALTERNATIVES: 3\n1: 1,{2,3}\n")


prefix_lists = st.lists(
    st.tuples(st.permutations(range(5)).flatmap(lambda p: st.integers(1, 5).map(lambda k: tuple(p[:k]))),
              st.integers(1, 9)),
    min_size=1,
    max_size=10,
)


class TestRoundTrip:
    @settings(max_examples=60)
    @given(prefix_lists)
    def test_parse_dumps(self, items):
        prefs = EmpiricalPreferences.from_ballots(5, [Ballot(p, w) for p, w in items], {0: "first"})
        again = parse(dumps(prefs))
        assert again == prefs
        assert again.names == prefs.names

    def test_write_lf(self, tmp_path):
        path = tmp_path / "out.ballots"
        write(parse(DISJOINT.replace("\n", "\r\n")), path)
        raw = path.read_bytes()
        assert b"\r" not in raw
        assert parse(path) == parse(DISJOINT)


class TestTruncate:
    def test_depth(self):
        prefs = truncate(parse(DISJOINT), 2)
        assert all(b.depth == 2 for b in prefs.ballots)
        assert prefs.total_weight == 5

    def test_too_deep(self):
        with pytest.raises(InsufficientDepthError):
            truncate(parse("M=6\n1: 1 > 2 > 3 > 4\n"), 5)

    @settings(max_examples=40, deadline=None)
    @given(prefix_lists.filter(lambda xs: min(len(p) for p, _ in xs) >= 2))
    def test_approval_reads_only_top_k(self, items):
        prefs = EmpiricalPreferences.from_ballots(5, [Ballot(p, w) for p, w in items])
        K = 2
        cut = truncate(prefs, K)
        for k in (1, K):
            a, _ = tally(prefs, approval_rule(k, 5))
            b, _ = tally(cut, approval_rule(k, 5))
            np.testing.assert_allclose(a, b, atol=1e-12)
            for i, j in [(0, 1), (2, 4)]:
                assert approval_separation(prefs, i, j, k) == pytest.approx(approval_separation(cut, i, j, k))


class TestPairDistribution:
    def test_disjoint_pair(self):
        pd = pair_distribution(parse(DISJOINT), 0, 1)
        assert pd.p[0, 1] == pytest.approx(2 / 5)
        assert pd.censored_mass == 0
        assert pd.total_mass() == pytest.approx(1.0)

    def test_marginals_match_direct_scan(self):
        rng = np.random.default_rng(9)
        ballots = [Ballot(tuple(rng.permutation(6)), int(rng.integers(1, 5))) for _ in range(25)]
        prefs = EmpiricalPreferences.from_ballots(6, ballots)
        cdf = prefs.position_cdfs()
        for i, j in [(0, 3), (5, 2)]:
            pd = pair_distribution(prefs, i, j)
            np.testing.assert_allclose(np.cumsum(pd.p.sum(axis=1)), cdf[i], atol=1e-12)
            np.testing.assert_allclose(np.cumsum(pd.p.sum(axis=0)), cdf[j], atol=1e-12)

    def test_censoring(self):
        prefs = parse("M=5\n3: 1 > 2\n2: 3 > 1\n1: 4 > 5\n")
        pd = pair_distribution(prefs, 0, 1)
        assert pd.censored_mass == pytest.approx(1 / 6)
        assert pd.horizon == 2
        assert pd.total_mass() + pd.censored_mass == pytest.approx(1.0)
        for K in (1, 2):
            assert approval_separation(pd, 0, 1, K) == pytest.approx(approval_separation(prefs, 0, 1, K))
        with pytest.raises(CensoredPositionError):
            approval_separation(pd, 0, 1, 3)
        with pytest.raises(CensoredPositionError):
            pair_rate(pd, ScoringRule((4, 3, 2, 1, 0)), 0, 1)
        assert pair_rate(pd, approval_rule(2, 5), 0, 1) > 0
