import math

import numpy as np
import pytest

from heatlab.errors import (
    AbsorbingSet,
    HorizonExceeded,
    SourceOutsideSet,
)
from heatlab.graph import VertexSet, ball, build_graph
from heatlab.kernel import (
    exact_horizon,
    green_function,
    green_kernel,
    heat_kernel,
    killed_diagonal_sequence,
    killed_kernel,
    survival_probability,
    survival_series,
    transition_step,
    two_step_graph,
)


class TestTransitionStep:
    def test_stochasticity(self, path201):
        f = np.ones(path201.vertex_count)
        assert np.allclose(transition_step(path201, f), 1.0, atol=1e-15)

    def test_indicator_splits(self, path201):
        c = path201.root
        f = np.zeros(path201.vertex_count)
        f[c] = 1.0
        Pf = transition_step(path201, f)
        assert Pf[c - 1] == 0.5 and Pf[c + 1] == 0.5
        assert Pf.sum() == 1.0

    def test_single_edge_swap(self):
        g = build_graph([(0, 1, 1)])
        assert transition_step(g, np.array([1.0, 0.0])).tolist() == [0.0, 1.0]


class TestHeatKernel:
    def test_hand_values_1d(self, path201):
        c = path201.root
        assert heat_kernel(path201, c, 1).value(c + 1) == 0.25
        assert heat_kernel(path201, c, 2).value(c) == 0.25

    def test_time_zero(self, path201):
        c = path201.root
        ks = heat_kernel(path201, c, 0)
        assert ks.value(c) == 1.0 / path201.mu[c]
        assert np.count_nonzero(ks.values) == 1

    def test_binomial_diagonal(self, path2001):
        # p_2n(0,0) = binom(2n, n) 2^{-2n} / mu(0) on the line
        c = path2001.root
        for n in (1, 2, 5, 10):
            exact = math.comb(2 * n, n) / 4 ** n / 2
            got = heat_kernel(path2001, c, 2 * n).value(c)
            assert abs(got - exact) <= 1e-14

    def test_exactness_guard(self, path201):
        c = path201.root
        horizon = exact_horizon(path201, c)
        assert horizon == 100
        heat_kernel(path201, c, int(horizon), require_exact=True)
        with pytest.raises(HorizonExceeded):
            heat_kernel(path201, c, int(horizon) + 1, require_exact=True)

    def test_mass_conservation_and_symmetry(self, vicsek3):
        rng = np.random.default_rng(0)
        xs = rng.choice(vicsek3.vertex_count, 4, replace=False)
        for x in xs:
            ks = heat_kernel(vicsek3, int(x), 7)
            assert abs(ks.mass() - 1.0) <= 1e-12
        x, y = int(xs[0]), int(xs[1])
        for n in (3, 6):
            pxy = heat_kernel(vicsek3, x, n).value(y)
            pyx = heat_kernel(vicsek3, y, n).value(x)
            assert abs(pxy - pyx) <= 1e-12

    def test_chapman_kolmogorov_small_graph(self):
        g = build_graph([(i, i + 1, 1 + (i % 3)) for i in range(60)]
                        + [(0, 60, 1)])
        P = g.P.toarray()
        mu = g.mu
        for n, m in ((2, 3), (4, 1)):
            Pn = np.linalg.matrix_power(P, n)
            Pm = np.linalg.matrix_power(P, m)
            assert np.max(np.abs(Pn @ Pm - np.linalg.matrix_power(P, n + m))) <= 1e-10


class TestKilledKernel:
    def test_singleton_dies(self, path201):
        c = path201.root
        A = VertexSet(path201, [c])
        assert killed_kernel(path201, A, c, 1).values.sum() == 0.0

    def test_whole_graph_equals_unkilled(self, path201):
        c = path201.root
        A = VertexSet(path201, np.arange(path201.vertex_count))
        k = killed_kernel(path201, A, c, 5)
        h = heat_kernel(path201, c, 5)
        assert np.allclose(k.values, h.values, atol=1e-15)

    def test_hand_value(self, path201):
        c = path201.root
        A = ball(path201, c, 2)
        assert killed_kernel(path201, A, c, 2).value(c) == 0.25

    def test_source_outside(self, path201):
        c = path201.root
        with pytest.raises(SourceOutsideSet):
            killed_kernel(path201, ball(path201, c, 2), c + 10, 1)

    def test_monotone_in_set(self, path201):
        c = path201.root
        small = killed_kernel(path201, ball(path201, c, 3), c, 6).values
        large = killed_kernel(path201, ball(path201, c, 6), c, 6).values
        assert np.all(large >= small - 1e-15)

    def test_mass_strictly_below_one(self, path201):
        c = path201.root
        k = killed_kernel(path201, ball(path201, c, 3), c, 8)
        assert k.mass() < 1.0


class TestDirichletMonotonicity:
    def test_even_time_decay(self, path201, vicsek2):
        for g in (path201, vicsek2):
            B = ball(g, g.root, 5)
            seq = killed_diagonal_sequence(g, B, g.root, 60)
            even = seq[0::2]
            assert np.all(np.diff(even) <= 0)
            assert np.all(even[:-1] >= seq[1::2])  # P_2n >= P_2n+1


class TestCauchySchwarzKernel:
    def test_lp_pp_inequality(self, box41):
        g = box41
        B = ball(g, g.root, 4)
        members = B.members
        PA = g.P[members, :][:, members].toarray()
        mu = g.mu[members]
        # dense killed kernels p^A_k = P_A^k / mu(col)
        K = 8
        powers = [np.eye(len(members))]
        for _ in range(2 * K):
            powers.append(powers[-1] @ PA)
        p = [Pk / mu[None, :] for Pk in powers]
        rng = np.random.default_rng(3)
        bad = 0
        for _ in range(2000):
            i, j = rng.integers(len(members), size=2)
            n, m = rng.integers(K, size=2)
            lhs = p[n + m][i, j]
            rhs = np.sqrt(p[2 * n][i, i] * p[2 * m][j, j])
            bad += lhs > rhs + 1e-12
        assert bad == 0


class TestFirstExitDecomposition:
    def test_cut1(self, path201):
        g = path201
        c = g.root
        A = ball(g, c, 5)
        bd = A.boundary().members
        for y in (c + 3, c - 2):
            for n in (4, 7, 11):
                pn = heat_kernel(g, c, n).value(y)
                pnA = killed_kernel(g, A, c, n).value(y)
                tail = survival_probability(g, c, 5, n)
                peak = max(heat_kernel(g, int(z), k).value(y)
                           for z in bd for k in range(n))
                assert pn <= pnA + tail * peak + 1e-12


class TestGreenFunction:
    def test_singleton(self, path201):
        c = path201.root
        G = green_function(path201, VertexSet(path201, [c]), c)
        assert G[c] == 1.0

    def test_center_visits(self, path201):
        c = path201.root
        A = ball(path201, c, 2)
        assert green_function(path201, A, c)[c] == pytest.approx(2.0, abs=1e-12)

    def test_total_equals_exit_time(self, path201):
        from heatlab.potential import mean_exit_time

        c = path201.root
        A = ball(path201, c, 7)
        G = green_function(path201, A, c)
        assert G.sum() == pytest.approx(mean_exit_time(path201, A, c), abs=1e-10)

    def test_kernel_symmetry(self, vicsek2):
        g = vicsek2
        A = ball(g, g.root, 6)
        ys = A.members[:: 4]
        rows = {int(y): green_kernel(g, A, int(y)) for y in ys}
        for y in ys:
            for z in ys:
                assert abs(rows[int(y)][int(z)] - rows[int(z)][int(y)]) <= 1e-10

    def test_whole_graph_rejected(self, path201):
        with pytest.raises(AbsorbingSet):
            green_function(path201, VertexSet(path201,
                                              np.arange(path201.vertex_count)), 0)


class TestSurvival:
    def test_trivial_cases(self, path201):
        c = path201.root
        assert survival_probability(path201, c, 1, 1) == 0.0
        assert survival_probability(path201, c, 1, 2) == 1.0

    def test_hand_value(self, path201):
        assert survival_probability(path201, path201.root, 2, 3) == 0.5

    def test_series_consistent(self, path201):
        c = path201.root
        series = survival_series(path201, c, 4, 30)
        for n in (1, 7, 30):
            assert series[n] == survival_probability(path201, c, 4, n)
        assert np.all(np.diff(series) >= 0)


class TestTwoStepGraph:
    def test_1d_weights(self, path201):
        g = path201
        star = two_step_graph(g)
        M = star.meta["measure_scale"]
        parent = np.array(star.meta["parent_ids"])
        c_star = star.root
        c = parent[c_star]
        # mu*_{0,0} = mu(0) P2(0,0) = 1, mu*_{0,2} = 1/2 (times the scale)
        assert star.W[c_star, c_star] == M * 1.0
        nb = [i for i in star.neighbors(c_star) if i != c_star]
        for i in nb:
            assert star.W[c_star, i] == M * 0.5

    def test_measure_preserved_exactly(self, vicsek2):
        star = two_step_graph(vicsek2)
        M = star.meta["measure_scale"]
        parent = np.array(star.meta["parent_ids"])
        assert np.all(star.mu == M * vicsek2.mu[parent])

    def test_single_edge_collapses(self):
        g = build_graph([(0, 1, 1)], root=0)
        star = two_step_graph(g)
        assert star.vertex_count == 1
        assert star.W[0, 0] == star.meta["measure_scale"] * 1.0

    def test_bipartite_component_only_one_parity(self, path201):
        star = two_step_graph(path201)
        parent = np.array(star.meta["parent_ids"])
        d = path201.distances(path201.root)
        assert np.all(d[parent].astype(int) % 2 == 0)
