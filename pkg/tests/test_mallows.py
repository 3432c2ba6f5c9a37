import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ballot_rates import MallowsModel, Ranking, approval_separation, insertion_probability, pair_joint, sample
from ballot_rates.errors import InvalidParameterError
from ballot_rates.mallows import kendall_tau_distance, position_cdf, sample_positions
from oracles import inversions, joint_positions, position_cdfs

PHIS = [0.1, 0.5, 0.9]


def norm(m, phi):
    return sum(phi**u for u in range(m))


class TestInsertionProbability:
    @pytest.mark.parametrize(
        "m,j,phi,expected",
        [(4, 4, 0.5, 1 / 1.875), (4, 1, 0.5, 0.125 / 1.875), (3, 3, 0.0, 1.0), (3, 1, 0.0, 0.0), (5, 2, 1.0, 0.2)],
    )
    def test_values(self, m, j, phi, expected):
        assert insertion_probability(m, j, phi) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("m,j", [(3, 4), (3, 0)])
    def test_position_out_of_range(self, m, j):
        with pytest.raises(InvalidParameterError):
            insertion_probability(m, j, 0.5)

    @pytest.mark.filterwarnings("ignore:phi\\*\\*:RuntimeWarning")
    @given(st.integers(1, 40), st.floats(0, 1))
    def test_normalized(self, m, phi):
        assert sum(insertion_probability(m, j, phi) for j in range(1, m + 1)) == pytest.approx(1.0, abs=1e-12)


class TestPairJoint:
    def test_matrix_entries(self):
        p = pair_joint(MallowsModel(4, 0.5), 2, 3).p
        assert p[2, 3] == pytest.approx(1 / (1.75 * 1.875), abs=1e-12)
        assert p[2, 3] == pytest.approx(0.3047619, abs=1e-7)
        assert p[0, 1] == pytest.approx(0.0625 / 3.28125, abs=1e-12)

    @pytest.mark.parametrize("M", [2, 3, 4, 5])
    @pytest.mark.parametrize("phi", PHIS + [0.0, 1.0])
    def test_matches_enumeration(self, M, phi):
        for i in range(M):
            for j in range(M):
                if i != j:
                    np.testing.assert_allclose(
                        pair_joint(MallowsModel(M, phi), i, j).p, joint_positions(M, phi, i, j), atol=1e-12
                    )

    def test_non_identity_reference(self):
        ref = Ranking.from_order((2, 0, 4, 1, 3))
        model = MallowsModel(5, 0.6, ref)
        for i, j in [(0, 1), (4, 2), (3, 0)]:
            np.testing.assert_allclose(
                pair_joint(model, i, j).p, joint_positions(5, 0.6, i, j, ref.positions), atol=1e-12
            )

    def test_relabeling(self):
        ref = Ranking.from_order((3, 1, 0, 2))
        relabeled = pair_joint(MallowsModel(4, 0.3, ref), 1, 2).p
        plain = pair_joint(MallowsModel(4, 0.3), ref.positions[1], ref.positions[2]).p
        np.testing.assert_allclose(relabeled, plain, atol=1e-14)

    def test_same_candidate_rejected(self):
        with pytest.raises(InvalidParameterError):
            pair_joint(MallowsModel(4, 0.5), 1, 1)

    @pytest.mark.parametrize("phi", PHIS)
    def test_marginals_match_cdf(self, phi):
        model = MallowsModel(6, phi)
        for i, j in [(0, 5), (2, 3), (4, 1)]:
            pj = pair_joint(model, i, j)
            assert pj.total_mass() + pj.censored_mass == pytest.approx(1.0, abs=1e-12)
            assert np.all(np.diag(pj.p) == 0)
            np.testing.assert_allclose(np.cumsum(pj.p.sum(axis=1)), position_cdf(model, i), atol=1e-12)
            np.testing.assert_allclose(np.cumsum(pj.p.sum(axis=0)), position_cdf(model, j), atol=1e-12)

    def test_large_m_is_fast_and_normalized(self):
        pj = pair_joint(MallowsModel(60, 0.97), 10, 40)
        assert pj.total_mass() == pytest.approx(1.0, abs=1e-10)


class TestSeparation:
    @pytest.mark.parametrize("phi", [0.1, 0.5, 0.8])
    def test_closed_forms(self, phi):
        model = MallowsModel(4, phi)
        n3, n4 = norm(3, phi), norm(4, phi)
        t = approval_separation(model, 2, 3, 3)
        assert t == pytest.approx((1 / n4, phi / n4), abs=1e-14)
        t = approval_separation(model, 2, 3, 2)
        expected = ((phi + 2 * phi**2 + phi**3) / (n3 * n4), (phi**2 + 2 * phi**3 + phi**4) / (n3 * n4))
        assert t == pytest.approx(expected, abs=1e-14)

    @pytest.mark.parametrize("i,j,K,expected", [(0, 1, 2, (0, 0)), (2, 3, 1, (0, 0)), (1, 3, 2, (1, 0))])
    def test_deterministic(self, i, j, K, expected):
        assert approval_separation(MallowsModel(4, 0.0), i, j, K) == expected

    @pytest.mark.parametrize("M", [3, 6, 9])
    @pytest.mark.parametrize("phi", [0.1, 0.5, 0.9])
    def test_better_candidate_separates_more(self, M, phi):
        model = MallowsModel(M, phi)
        for K in range(1, M):
            for i in range(M):
                for j in range(i + 1, M):
                    ti, tj = approval_separation(model, i, j, K)
                    assert 0 <= tj < ti <= 1


class TestPositionCdf:
    def test_deterministic(self):
        cdf = position_cdf(MallowsModel(5, 0.0), 2)
        np.testing.assert_array_equal(cdf, [0, 0, 1, 1, 1])

    def test_uniform(self):
        np.testing.assert_allclose(position_cdf(MallowsModel(5, 1.0), 3), np.arange(1, 6) / 5, atol=1e-14)

    @pytest.mark.parametrize("phi", PHIS)
    def test_enumeration(self, phi):
        np.testing.assert_allclose(MallowsModel(5, phi).position_cdfs(), position_cdfs(5, phi), atol=1e-12)

    @pytest.mark.parametrize("M", range(2, 11))
    @pytest.mark.parametrize("phi", [0.1, 0.3, 0.5, 0.7, 0.9])
    def test_strict_dominance(self, M, phi):
        cdf = MallowsModel(M, phi).position_cdfs()
        assert np.all(np.diff(cdf[:, :-1], axis=0) < 0)


class TestSampling:
    def test_phi_zero_returns_reference(self):
        ref = Ranking.from_order((1, 3, 0, 2))
        assert all(sample(MallowsModel(4, 0.0, ref), s) == ref for s in range(20))

    def test_seeded(self):
        model = MallowsModel(7, 0.6)
        assert sample(model, 11) == sample(model, 11)

    def test_uniform_frequencies(self):
        rng = np.random.default_rng(1)
        pos = sample_positions(MallowsModel(3, 1.0), 60_000, rng)
        _, counts = np.unique(pos, axis=0, return_counts=True)
        assert len(counts) == 6
        np.testing.assert_allclose(counts / 60_000, 1 / 6, atol=0.01)

    def test_marginal_matches_dp(self):
        model = MallowsModel(4, 0.5)
        n = 40_000
        pos = sample_positions(model, n, np.random.default_rng(2))
        freq = np.mean(pos[:, 3] == 3)
        exact = pair_joint(model, 2, 3).p[:, 3].sum()
        assert abs(freq - exact) <= 3 * math.sqrt(exact * (1 - exact) / n)

    def test_distance_distribution(self):
        # Pr(d = k) follows the Mahonian weights times phi^k
        model = MallowsModel(4, 0.4)
        pos = sample_positions(model, 30_000, np.random.default_rng(3))
        ident = tuple(range(4))
        d = np.array([inversions(p, ident) for p in pos])
        mahonian = [1, 3, 5, 6, 5, 3, 1]
        w = np.array([c * 0.4**k for k, c in enumerate(mahonian)])
        w /= w.sum()
        freq = np.bincount(d, minlength=7) / len(d)
        assert np.all(np.abs(freq - w) <= 4 * np.sqrt(w * (1 - w) / len(d)))


class TestKendall:
    @settings(max_examples=50)
    @given(st.permutations(range(6)), st.permutations(range(6)))
    def test_against_pair_count(self, a, b):
        ra, rb = Ranking(tuple(a)), Ranking(tuple(b))
        assert kendall_tau_distance(ra, rb) == inversions(a, b)
