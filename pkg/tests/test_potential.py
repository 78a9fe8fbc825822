import numpy as np
import pytest

from heatlab.errors import (
    BeyondProfile,
    HorizonExceeded,
    RadiusOrder,
    SetsIntersect,
    SourceOutsideSet,
)
from heatlab.graph import VertexSet, annulus_volume, ball, build_graph
from heatlab.generators import lattice_box, vicsek_tree
from heatlab.kernel import green_function
from heatlab.potential import (
    LocalResistance,
    ProfileCache,
    annulus_resistance,
    ball_k,
    effective_resistance,
    exit_profile,
    exit_times_at,
    extreme_exit_time,
    inverse_exit,
    kappa,
    mean_exit_time,
    subgaussian_k,
    subgaussian_k_batch,
)
from heatlab.spectral import lambda_min


class TestEffectiveResistance:
    def test_series_path(self):
        g = build_graph([(0, 1, 1), (1, 2, 1)])
        assert effective_resistance(g, VertexSet(g, [0]),
                                    VertexSet(g, [2])) == pytest.approx(2.0)

    def test_four_cycle_opposite(self):
        g = build_graph([(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)])
        assert effective_resistance(g, VertexSet(g, [0]),
                                    VertexSet(g, [2])) == pytest.approx(1.0)

    def test_tree_edge(self, vicsek2):
        g = vicsek2
        u = g.root
        v = int(g.neighbors(u)[0])
        assert effective_resistance(g, VertexSet(g, [u]),
                                    VertexSet(g, [v])) == pytest.approx(1.0)

    def test_intersecting_sets_rejected(self, path201):
        c = path201.root
        with pytest.raises(SetsIntersect):
            effective_resistance(path201, ball(path201, c, 2),
                                 ball(path201, c, 3))

    def test_rayleigh_monotonicity_under_edge_removal(self):
        rng = np.random.default_rng(4)
        g = lattice_box(2, 7)
        A, B = VertexSet(g, [g.root]), VertexSet(g, [0])
        base = effective_resistance(g, A, B)
        edges = list(zip(g.edge_u.tolist(), g.edge_v.tolist(),
                         g.edge_w.tolist()))
        for k in rng.choice(len(edges), 6, replace=False):
            trimmed = [e for i, e in enumerate(edges) if i != k]
            try:
                h = build_graph(trimmed)
            except Exception:
                continue
            assert effective_resistance(h, VertexSet(h, [g.root]),
                                        VertexSet(h, [0])) >= base - 1e-10

    def test_local_matches_global(self, path201):
        g = path201
        c = g.root
        B = ball(g, c, 6)
        ctx = LocalResistance(g, B.members)
        for D in ([c], [c - 2, c], ball(g, c, 2).members):
            assert ctx.rho(np.atleast_1d(D)) == pytest.approx(
                effective_resistance(g, VertexSet(g, D), B.complement()),
                rel=1e-12)


class TestAnnulusResistance:
    def test_1d_parallel_sides(self, path2001):
        assert annulus_resistance(path2001, path2001.root, 1, 2) == \
            pytest.approx(1.0)

    def test_guard_fires_when_ball_covers_graph(self):
        g = build_graph([(0, 1, 1), (1, 2, 1)], root=1)
        with pytest.raises(HorizonExceeded):
            annulus_resistance(g, 1, 1, 5)

    def test_radius_order(self, path201):
        with pytest.raises(RadiusOrder):
            annulus_resistance(path201, path201.root, 3, 3)

    def test_vicsek_series_reduction(self, vicsek2):
        # from the corner root, current leaves B(root,3) through the single
        # diagonal path of 3 edges; side corners are dead ends
        assert annulus_resistance(vicsek2, vicsek2.root, 1, 3) == \
            pytest.approx(3.0)


class TestExitTimes:
    def test_singleton(self, path201):
        c = path201.root
        assert mean_exit_time(path201, VertexSet(path201, [c]), c) == 1.0

    def test_gamblers_ruin_square(self, path2001):
        c = path2001.root
        for R in (1, 5, 20):
            E = mean_exit_time(path2001, ball(path2001, c, R), c)
            assert E == pytest.approx(R * R, abs=1e-9)

    def test_green_identity(self, vicsek3):
        g = vicsek3
        A = ball(g, g.root, 7)
        total = green_function(g, A, g.root).sum()
        assert total == pytest.approx(mean_exit_time(g, A, g.root), abs=1e-10)

    def test_source_outside(self, path201):
        with pytest.raises(SourceOutsideSet):
            mean_exit_time(path201, ball(path201, path201.root, 2), 0)

    def test_extreme_at_center(self, path2001):
        c = path2001.root
        val, arg = extreme_exit_time(path2001, ball(path2001, c, 3))
        assert val == pytest.approx(9.0, abs=1e-10)
        assert arg == c

    def test_extreme_tie_breaks_to_smallest_id(self):
        g = build_graph([(0, 1, 1), (1, 2, 1), (2, 3, 1)])
        val, arg = extreme_exit_time(g, VertexSet(g, [1, 2]))
        assert arg == 1  # symmetric pair, smallest id wins

    def test_montecarlo_cross_check_2d(self, box41):
        from heatlab.montecarlo import simulate_exit

        g = box41
        A = ball(g, g.root, 2)
        exact = mean_exit_time(g, A, g.root)
        sim = simulate_exit(g, A, g.root, 10000, 17)
        assert abs(sim.estimate - exact) <= 3 * sim.std_error


class TestExitProfile:
    def test_1d_beta_two(self, path2001):
        p = exit_profile(path2001, path2001.root, 64)
        assert abs(p.beta - 2.0) <= 0.1  # within 5%
        assert p.table[0] == 0.0
        assert np.all(np.diff(p.table) > 0)
        assert np.all(p.table[1:] >= np.arange(1, 65))  # E(x,R) >= R

    def test_vicsek_walk_dimension(self):
        g = vicsek_tree(5)
        p = exit_profile(g, g.root, 128)
        expected = np.log(15) / np.log(3)
        assert abs(p.beta - expected) / expected <= 0.10

    def test_stretched_slope_drift(self, stretched4):
        g = stretched4
        radii = [8, 16, 32, 64, 128]
        table = exit_times_at(g, g.root, radii + [256])
        slopes = [np.log2(table[2 * R] / table[R]) for R in radii]
        assert max(slopes) - min(slopes) >= 0.1

    def test_horizon_guard(self, path201):
        with pytest.raises(HorizonExceeded):
            exit_profile(path201, path201.root, 150)

    def test_offcenter_guard_uses_true_distance(self, path201):
        # x off the root: guard depends on d(x, rim), not on the root
        x = path201.root + 80
        with pytest.raises(HorizonExceeded):
            exit_profile(path201, x, 30)
        exit_profile(path201, x, 15)


class TestInverseExit:
    def test_square_profile(self, path2001):
        p = exit_profile(path2001, path2001.root, 20)
        assert inverse_exit(p, 10) == 4  # min r with r^2 >= 10
        assert inverse_exit(p, 16) == 4  # exact hit returns r
        assert inverse_exit(p, 0) == 0

    def test_beyond_profile(self, path2001):
        p = exit_profile(path2001, path2001.root, 5)
        with pytest.raises(BeyondProfile):
            inverse_exit(p, 1e9)

    def test_roundtrip_identity(self, path2001):
        p = exit_profile(path2001, path2001.root, 12)
        for r in (1, 3, 7, 12):
            assert inverse_exit(p, p.E(r)) == r


class TestSubgaussianK:
    def test_square_profile_example(self, path2001):
        p = exit_profile(path2001, path2001.root, 8)
        assert subgaussian_k(p, 4, 8) == 8

    def test_no_valid_k(self, path2001):
        p = exit_profile(path2001, path2001.root, 4)
        assert subgaussian_k(p, 1000, 4) == 0

    def test_terminates_at_R(self, path2001):
        p = exit_profile(path2001, path2001.root, 30)
        k = subgaussian_k(p, 1, 30)
        assert 1 <= k <= 30

    def test_batch_matches_scalar(self, path2001):
        p = exit_profile(path2001, path2001.root, 16)
        ns = np.arange(1, 200, 7)
        batch = subgaussian_k_batch(p, ns, 16)
        for n, kb in zip(ns, batch):
            assert kb == subgaussian_k(p, int(n), 16)


class TestKappa:
    def test_symmetric_pair(self, path2001):
        g = path2001
        c = g.root
        A, B = ball(g, c - 15, 3), ball(g, c + 15, 3)
        cache = ProfileCache(g)
        d = int(g.distance_to_set(A.members, B.members))
        k_ab = min(ball_k(g, int(z), 50, d, cache=cache) for z in A.members)
        k_ba = min(ball_k(g, int(z), 50, d, cache=cache) for z in B.members)
        assert k_ab == k_ba
        assert kappa(g, 50, A, B, cache=cache) == max(k_ab, k_ba)

    def test_intersecting_rejected(self, path2001):
        g = path2001
        c = g.root
        with pytest.raises(SetsIntersect):
            kappa(g, 10, ball(g, c, 4), ball(g, c + 2, 4))

    def test_huge_time_collapses(self, path2001):
        g = path2001
        c = g.root
        A, B = ball(g, c - 4, 2), ball(g, c + 4, 2)
        assert kappa(g, 10 ** 6, A, B) in (0, 1)

    def test_adjacent_sets_floor_collapse(self, path2001):
        g = path2001
        c = g.root
        A = VertexSet(g, [c - 1, c])
        B = VertexSet(g, [c + 1, c + 2])
        assert kappa(g, 500, A, B) in (0, 1)


class TestPotentialInequalities:
    def test_lebar_sampled(self, vicsek3):
        g = vicsek3
        rng = np.random.default_rng(21)
        for _ in range(40):
            size = int(rng.integers(1, 14))
            start = int(rng.integers(g.vertex_count))
            grown = {start}
            frontier = list(g.neighbors(start))
            while frontier and len(grown) < size:
                v = int(frontier.pop(int(rng.integers(len(frontier)))))
                grown.add(v)
                frontier.extend(g.neighbors(v))
            A = VertexSet(g, sorted(grown))
            if A.is_whole_graph():
                continue
            lam_inv = 1.0 / lambda_min(g, A).value
            ebar = extreme_exit_time(g, A)[0]
            assert lam_inv <= ebar * (1 + 1e-9)

    def test_llrv_sampled(self, box41):
        g = box41
        rng = np.random.default_rng(23)
        for _ in range(30):
            R = int(rng.integers(2, 6))
            x = g.root
            B = ball(g, x, R)
            ctx = LocalResistance(g, B.members)
            lam = lambda_min(g, B).value
            for _ in range(5):
                r = int(rng.integers(1, R))
                A = ball(g, x, r)
                rho = ctx.rho(A.members)
                assert lam * rho * A.measure() <= 1 + 1e-9

    def test_ser_ratio_pack_on_lattice(self, path2001):
        # the four scale functions agree within a bounded factor on Z
        g = path2001
        x = g.root
        worst = 0.0
        for R in (4, 8, 16):
            lam_inv = 1.0 / lambda_min(g, ball(g, x, 2 * R)).value
            E2R = mean_exit_time(g, ball(g, x, 2 * R), x)
            ebar = extreme_exit_time(g, ball(g, x, 2 * R))[0]
            rho_v = annulus_resistance(g, x, R, 2 * R) * \
                annulus_volume(g, x, R, 2 * R)
            vals = [lam_inv, E2R, ebar, rho_v]
            for a in vals:
                for b in vals:
                    worst = max(worst, a / b)
        assert worst <= 4.0

    def test_anti_doubling_exit_time(self, path2001):
        g = path2001
        x = g.root
        table = exit_times_at(g, x, [4, 8, 16, 32])
        # smallest integer factor with E(x, a R) >= 2 E(x, R)
        for R in (4, 8, 16):
            assert table[2 * R] >= 2 * table[R]

    def test_k_lower_bound_fit(self, path2001):
        # k(x,n,R)+1 >= c (E(x,R)/n)^{1/(beta-1)} with a positive fitted c
        g = path2001
        x = g.root
        prof = exit_profile(g, x, 32)
        beta = prof.beta
        cache = ProfileCache(g)
        cs = []
        for R in (8, 16, 32):
            for n in (R, R * R // 4, R * R):
                k = ball_k(g, x, n, R, cache=cache)
                bound = (prof.E(R) / n) ** (1.0 / (beta - 1.0))
                cs.append((k + 1) / bound)
        assert min(cs) >= 0.2
