import numpy as np
import pytest

from ballot_rates import (
    EmpiricalPreferences,
    Goal,
    MallowsModel,
    Ranking,
    approval_rule,
    borda_rule,
    check_invariance,
    optimal_k,
    optimal_k_scan,
    outcome_rate,
    randomization_scan,
)
from ballot_rates.design import approx_invariance, scan_rows
from ballot_rates.errors import AmbiguousTiersError, InsufficientDepthError, InvalidParameterError
from ballot_rates.io import parse
from ballot_rates.rates import SeparationTable
from oracles import disjoint_rankings

# candidates h, i, j = 0, 1, 2; pairs (h, j) and (i, j) at depths 3 and 4
WARD_TABLE = SeparationTable(
    {(0, 2): {3: (0.277, 0.200), 4: (0.266, 0.188)}, (1, 2): {3: (0.255, 0.160), 4: (0.295, 0.217)}}
)


def disjoint():
    return EmpiricalPreferences.from_rankings([Ranking.from_order(o) for o in disjoint_rankings()])


class TestCheckInvariance:
    @pytest.mark.parametrize("M", [3, 5, 7, 10])
    @pytest.mark.parametrize("phi", [0.1, 0.5, 0.9])
    def test_mallows_exact_for_every_goal(self, M, phi):
        ref = Ranking.from_order(tuple(reversed(range(M))))
        model = MallowsModel(M, phi, ref)
        goals = [Goal.winners(W, M) for W in range(1, M)] + [Goal.full_ranking(M)]
        for goal in goals:
            verdict = check_invariance(model, goal)
            assert verdict.exact and verdict.violation is None
            assert verdict.witness_tiers.tiers[0] == frozenset(ref.order[: goal.tier_sizes[0]])

    def test_disjoint_profile(self):
        verdict = check_invariance(disjoint(), Goal((2, 2)))
        assert not verdict.exact
        assert verdict.witness_tiers is None
        i, j, k = verdict.violation
        assert 1 <= k <= 3

    def test_deterministic_rankings_fail_strictness(self):
        verdict = check_invariance(MallowsModel(4, 0.0), Goal((1, 3)))
        assert not verdict.exact

    def test_ambiguous_borda_tie(self):
        prefs = parse("M=3\n1: 1 > 2 > 3\n1: 2 > 1 > 3\n")
        with pytest.raises(AmbiguousTiersError):
            check_invariance(prefs, Goal((1, 2)))


class TestApproxInvariance:
    def test_disjoint_disjoint(self):
        m = approx_invariance(disjoint(), 2, [approval_rule(1, 4), approval_rule(2, 4)])
        np.testing.assert_array_equal(m, [[1.0, 0.0], [0.0, 1.0]])

    def test_full_overlap_at_w_equals_m(self):
        m = approx_invariance(disjoint(), 4, [approval_rule(1, 4), borda_rule(4, 4), approval_rule(3, 4)])
        np.testing.assert_array_equal(m, np.ones((3, 3)))

    def test_kendall_for_full_ranking(self):
        rules = [borda_rule(4, 4), borda_rule(4, 4)]
        m = approx_invariance(disjoint(), None, rules)
        np.testing.assert_allclose(m, 1.0)

    def test_bad_w(self):
        with pytest.raises(InvalidParameterError):
            approx_invariance(disjoint(), 5, [approval_rule(1, 4)])


class TestOptimalK:
    @pytest.mark.parametrize("phi,best", [(0.1, 3), (0.8, 2)])
    def test_three_winners_of_four(self, phi, best):
        res = optimal_k(MallowsModel(4, phi), Goal((3, 1)), [2, 3])
        assert res.best_K == best
        assert res.best_rate == max(res.per_K.values())

    def test_matches_outcome_rate_table(self):
        model = MallowsModel(6, 0.7)
        goal = Goal((2, 4))
        res = optimal_k(model, goal)
        for K, r in res.per_K.items():
            assert r == outcome_rate(model, approval_rule(K, 6), goal).overall_rate

    def test_ties_go_to_smaller_k(self):
        res = optimal_k(MallowsModel(6, 0.5), Goal((3, 3)))
        # 2- and 4-Approval are mirror images for the middle goal
        res.per_K = {2: 0.1, 4: 0.1}
        assert res.best_K == 2

    def test_mismatch_flagged_not_fatal(self):
        res = optimal_k(disjoint(), Goal((1, 3)))
        assert res.flags.get(1) == "mismatch"
        assert 1 not in res.per_K
        assert any(row["flag"] == "mismatch" for row in res.rows())

    def test_partial_data_depth(self):
        prefs = parse("M=5\n3: 1 > 2\n2: 2 > 3 > 1\n")
        with pytest.raises(InsufficientDepthError):
            optimal_k(prefs, Goal((1, 4)), [1, 2, 3])
        assert optimal_k(prefs, Goal((1, 4)), [1, 2]).best_K in (1, 2)

    @pytest.mark.parametrize("M", [5, 20, 50])
    @pytest.mark.parametrize("phi", [0.1, 0.3])
    def test_low_noise_single_winner(self, M, phi):
        assert optimal_k(MallowsModel(M, phi), Goal.winners(1, M)).best_K == 1


class TestOptimalKScan:
    def test_near_zero_noise_picks_k_equal_w(self):
        results = optimal_k_scan(MallowsModel(7, 0.01), range(1, 7))
        assert [r.best_K for r in results] == list(range(1, 7))

    def test_empty(self):
        assert optimal_k_scan(MallowsModel(4, 0.5), []) == []

    def test_thread_count_does_not_change_rows(self, monkeypatch):
        model = MallowsModel(8, 0.8)
        one = scan_rows(optimal_k_scan(model, range(1, 8), workers=1))
        monkeypatch.setenv("BALLOT_RATES_THREADS", "4")
        many = scan_rows(optimal_k_scan(model, range(1, 8)))
        assert one == many

    def test_high_noise_half(self):
        results = optimal_k_scan(MallowsModel(30, 0.999), [1, 10, 20])
        assert all(abs(r.best_K - 15) <= 1 for r in results)


class TestRandomizationScan:
    def test_ward_equal_mix_beats_both(self):
        scan = randomization_scan(WARD_TABLE, K_pairs=[(3, 4)], d_grid=[0.5], refine=False)
        (cell,) = scan.cells
        assert cell.rate_mix > max(cell.rate_a, cell.rate_b)
        (finding,) = scan.findings
        assert finding.pivotal_a != finding.pivotal_b

    def test_refinement_does_not_lose_ground(self):
        coarse = randomization_scan(WARD_TABLE, K_pairs=[(3, 4)], refine=False)
        fine = randomization_scan(WARD_TABLE, K_pairs=[(3, 4)])
        assert fine.findings[0].rate_mix >= coarse.findings[0].rate_mix

    def test_pure_endpoint_never_a_finding(self):
        scan = randomization_scan(WARD_TABLE, K_pairs=[(3, 4)], d_grid=[1.0])
        assert scan.findings == []
        assert scan.cells[0].rate_mix == scan.cells[0].rate_a

    @pytest.mark.parametrize("M,W,phi", [(4, 1, 0.5), (5, 2, 0.7), (6, 3, 0.9), (6, 1, 0.3)])
    def test_mallows_never_improves(self, M, W, phi):
        scan = randomization_scan(MallowsModel(M, phi), Goal.winners(W, M))
        assert scan.findings == []
        assert scan.skipped == {}

    def test_findings_switch_pivotal_pair(self):
        rng = np.random.default_rng(5)
        found = 0
        for _ in range(40):
            orders = [tuple(rng.permutation(6)) for _ in range(12)]
            prefs = EmpiricalPreferences.from_rankings(
                [Ranking.from_order(o) for o in orders], rng.integers(1, 6, size=12)
            )
            scan = randomization_scan(prefs, Goal((2, 4)))
            for f in scan.findings:
                found += 1
                assert f.pivotal_a != f.pivotal_b
                assert f.rate_mix > max(f.rate_a, f.rate_b)
        assert found > 0

    def test_disagreeing_depths_skipped(self):
        scan = randomization_scan(disjoint(), Goal((2, 2)), K_pairs=[(1, 2)])
        assert scan.skipped == {(1, 2): "mismatch"}

    def test_goal_required(self):
        with pytest.raises(InvalidParameterError):
            randomization_scan(MallowsModel(4, 0.5))
