import math

import numpy as np
import pytest

from heatlab.errors import BadConstants, SetsIntersect
from heatlab.estimates import (
    check_DG,
    check_DUE,
    check_MV,
    check_PMV,
    check_TC,
    check_UE,
    check_exit_tail,
    check_lvv,
    check_two_step,
)
from heatlab.generators import lattice_box, stretched_vicsek
from heatlab.graph import VertexSet, ball
from heatlab.kernel import killed_kernel
from heatlab.potential import exit_profile, mean_exit_time


class TestDUE:
    def test_1d_statistic_band(self, path2001):
        g = path2001
        rep = check_DUE(g, [g.root], 1000, n_band_min=4)
        lo, hi = rep.extras["band"]
        assert 0.5 <= lo <= hi <= 3.0
        assert rep.passed

    def test_binomial_oracle_agrees(self, path2001):
        # recompute the witness statistic from the exact binomial kernel
        g = path2001
        rep = check_DUE(g, [g.root], 200, n_band_min=4)
        w = rep.witnesses
        n = w["n"]
        p_exact = math.comb(n, n // 2) / 2 ** n / 2
        V = g.volume(g.root, w["e"])
        assert rep.sup_statistic == pytest.approx(p_exact * V, rel=1e-12)

    def test_bipartite_odd_diagonal_vanishes(self, path2001):
        rep = check_DUE(path2001, [path2001.root], 100)
        assert rep.extras["sup_odd"] == 0.0


class TestUE:
    def test_diagonal_pair_reduces_to_due(self, path2001):
        g = path2001
        rep = check_UE(g, [(g.root, g.root)], [4, 16, 64], c=0.7)
        repD = check_DUE(g, [g.root], 64)
        # with x = y the exponent argument vanishes: E(x,0) = 0
        assert rep.sup_statistic <= repD.fitted["C"] * (1 + 1e-9)

    def test_speed_bound_zero(self, path2001):
        g = path2001
        c = g.root
        rep = check_UE(g, [(c, c + 20)], [10], c=0.4)
        assert rep.sup_statistic == 0.0  # n < d: kernel vanishes

    def test_1d_gaussian_regime(self, path2001):
        g = path2001
        c = g.root
        rep = check_UE(g, [(c, c + 20)], [50, 100, 400], c=0.4)
        assert np.isfinite(rep.sup_statistic)
        assert rep.fitted["c_max_at_cap"] > 0


class TestDG:
    def test_vacuous_when_unreachable(self, path2001):
        g = path2001
        c = g.root
        A, B = ball(g, c - 30, 3), ball(g, c + 30, 3)
        rep = check_DG(g, [(A, B)], [10])
        assert rep.extras["vacuous_points"] == 1
        assert rep.passed

    def test_c0_bound_exact(self, path2001):
        g = path2001
        c = g.root
        A, B = ball(g, c - 10, 4), ball(g, c + 10, 4)
        rep = check_DG(g, [(A, B)], [20, 50, 200, 800])
        assert rep.extras["exact_c0_bound"]

    def test_gaussian_calibration(self, path2001):
        # at n = d the only contribution is ballistic: c-hat near log 2
        g = path2001
        c = g.root
        A, B = ball(g, c - 14, 5), ball(g, c + 14, 5)
        rep = check_DG(g, [(A, B)], [20], q=1.0)
        assert rep.fitted["c_hat"] >= 0.05

    def test_intersecting_rejected(self, path2001):
        g = path2001
        c = g.root
        with pytest.raises(SetsIntersect):
            check_DG(g, [(ball(g, c, 4), ball(g, c + 2, 4))], [10])


class TestExitTail:
    def test_speed_bound_and_degenerate_ball(self, path2001):
        g = path2001
        rep = check_exit_tail(g, [g.root], [8],
                              lambda R: [R // 2, R, R + 1], q=1.0)
        rows = {r["n"]: r for r in rep.grid}
        assert rows[4]["tail"] == 0.0 and rows[8]["tail"] == 0.0
        assert rows[9]["tail"] > 0.0

    def test_1d_fit(self, path2001):
        g = path2001
        rep = check_exit_tail(g, [g.root], [16],
                              lambda R: range(R, R * R + 1, 8), q=1.0)
        assert rep.fitted["c"] > 0
        assert rep.extras["tail_nondecreasing_in_n"]

    def test_R1_always_exits(self, path2001):
        g = path2001
        rep = check_exit_tail(g, [g.root], [1], lambda R: [2, 3, 4], q=1.0)
        assert all(r["tail"] == 1.0 for r in rep.grid)
        assert all(r["k"] == 0 for r in rep.grid)


class TestPMV:
    def test_bad_constants(self, path2001):
        with pytest.raises(BadConstants):
            check_PMV(path2001, path2001.root, 4, c1=1.0, c2=0.5)

    def test_delta_at_center_finite(self, path2001):
        rep = check_PMV(path2001, path2001.root, 8, c1=0.5, c2=1.0)
        assert np.isfinite(rep.sup_statistic) and rep.sup_statistic > 0

    def test_scaling_invariance(self, path2001):
        # doubling the initial data leaves the admissible constant unchanged
        g = path2001
        c = g.root
        B = ball(g, c, 6)
        members = B.members
        E = mean_exit_time(g, B, c)
        n = int(E)
        i_lo = int(np.ceil(0.5 * E))
        mu_loc = g.mu[members]

        def min_C(scale):
            u = np.zeros(g.vertex_count)
            u[c] = scale
            window = 0.0
            for i in range(n + 1):
                if i_lo <= i <= n:
                    window += float(u[members] @ mu_loc)
                if i < n:
                    u = scale_free_step(g, B, u)
            return u[c] * E * B.measure() / window

        def scale_free_step(g, B, u):
            out = np.zeros_like(u)
            sub = g.P[B.members, :][:, B.members] @ u[B.members]
            out[B.members] = sub
            return out

        assert abs(min_C(1.0) - min_C(2.0)) <= 1e-12 * min_C(1.0)


class TestMV:
    def test_constant_data_ratio_one(self, path2001):
        # harmonic extension of constant boundary data is constant
        rep = check_MV(path2001, path2001.root, 8)
        assert rep.sup_statistic >= 1.0 - 1e-12

    def test_1d_linear_profile(self, path2001):
        # delta at the right boundary of an interval gives a linear profile;
        # compare the reported constant against the closed form
        g = path2001
        c = g.root
        R = 8
        rep = check_MV(g, c, R)
        m = 2 * R - 1                      # interval has vertices -7..7
        u = np.arange(1, m + 1) / (m + 1)  # linear, 0 and 1 held outside
        ux = u[R - 1]
        avg = float((u * 2.0).sum())
        expected = ux * g.volume(c, R) / avg
        assert rep.sup_statistic == pytest.approx(expected, rel=1e-9)

    def test_random_below_delta_family(self, box41):
        rep = check_MV(box41, box41.root, 5, random_trials=40)
        assert rep.extras["C_random"] <= rep.sup_statistic * (1 + 1e-9)
        assert rep.passed


class TestTC:
    def test_1d_closed_form(self, path2001):
        g = path2001
        rep = check_TC(g, [g.root], [4, 8, 16], samples_per=3, seed=1)
        # on the line E(x,2R)/E(x,R) = 4 exactly at the center
        assert rep.fitted["C"] >= 4.0 - 1e-9
        assert rep.fitted["C"] <= 9.5  # off-center starts stay below (3R)^2/R^2

    def test_R1_trivial(self, path2001):
        g = path2001
        rep = check_TC(g, [g.root], [1], samples_per=1, seed=1)
        assert np.isfinite(rep.fitted["C"])


class TestLvv:
    def test_identity_pair(self, path2001):
        g = path2001
        rep = check_lvv(g, [(g.root, g.root)], [16, 64], [0.1, 1.0])
        assert rep.sup_statistic == pytest.approx(1.0)

    def test_translation_invariance_1d(self, path2001):
        g = path2001
        c = g.root
        rep = check_lvv(g, [(c, c + 10)], [50, 100, 400], [0.25, 1.0])
        assert rep.fitted["C_eps"][0.25] <= 1.1

    def test_stretched_curve_decreasing(self, stretched4):
        g = stretched4
        cuts = g.meta["cut_vertices"]
        rep = check_lvv(g, [(g.root, cuts[1])], [40, 160], [0.1, 0.5, 1.0])
        curve = rep.fitted["C_eps"]
        assert curve[0.1] >= curve[0.5] >= curve[1.0]


class TestTwoStep:
    def test_fixture_on_catalog(self, path201, vicsek2):
        for g in (path201, vicsek2):
            rep = check_two_step(g, [2, 3, 5], subset_samples=60, seed=4)
            assert rep.extras["mu_preserved"]
            assert rep.extras["inclusions_exact"]
            assert rep.extras["lambda_comparison_ok"]
            assert rep.fitted["q_min"] > 0

    def test_exit_ratio_band_1d(self, path201):
        rep = check_two_step(path201, [2, 4, 8], subset_samples=10, seed=4)
        assert 0.4 <= rep.fitted["E_over_Estar_min"]
        assert rep.fitted["E_over_Estar_max"] <= 0.6
