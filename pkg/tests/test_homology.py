import numpy as np
import pytest

from bettiforge.exactrank import integer_rank
from bettiforge.graphs import (
    Graph,
    build_clique_complex,
    gen_erdos_renyi,
    gen_kpartite,
    gen_rips_points,
    rips_graph,
)
from bettiforge.homology import (
    betti_delta_approx,
    betti_exact,
    boundary_matrix,
    dirac,
    kunneth_convolve,
    laplacian,
    reduced_from_regular,
    spectrum,
)


class TestExactRank:
    def test_matches_float_rank_on_random_ints(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            a = rng.integers(-3, 4, size=rng.integers(1, 9, size=2))
            assert integer_rank(a) == np.linalg.matrix_rank(a.astype(float))

    def test_rank_deficient(self):
        a = np.array([[1, 2, 3], [2, 4, 6], [1, 0, 1]])
        assert integer_rank(a) == 2

    def test_empty(self):
        assert integer_rank(np.zeros((0, 5), dtype=int)) == 0

    def test_big_integer_fallback(self):
        big = 2**40
        a = [[big, 1], [1, big]]
        assert integer_rank(a) == 2


class TestBoundary:
    def test_triangle_two_simplex_column(self):
        g = gen_kpartite(1, 3)
        cx = build_clique_complex(g, 2)
        bm = boundary_matrix(cx, 2)
        # rows are the edges sorted by mask: {0,1}, {0,2}, {1,2}
        assert bm.row_basis == (0b011, 0b101, 0b110)
        assert bm.col_basis == (0b111,)
        # boundary of [v0 v1 v2] = [v1 v2] - [v0 v2] + [v0 v1]
        assert bm.matrix[:, 0].tolist() == [1, -1, 1]

    def test_single_edge_column(self):
        g = Graph.from_edges(2, [(0, 1)])
        cx = build_clique_complex(g, 1)
        bm = boundary_matrix(cx, 1)
        assert bm.matrix[:, 0].tolist() == [-1, 1]

    def test_column_weight_and_signs(self):
        g = gen_erdos_renyi(7, 0.7, 3)
        cx = build_clique_complex(g, 3)
        for k in (1, 2, 3):
            bm = boundary_matrix(cx, k)
            if bm.matrix.size == 0:
                continue
            nonzero = np.abs(bm.matrix).sum(axis=0)
            assert np.all(nonzero == k + 1)

    @pytest.mark.parametrize("seed", range(5))
    def test_boundary_squares_to_zero(self, seed):
        g = gen_erdos_renyi(8, 0.6, seed)
        cx = build_clique_complex(g, 4)
        for k in (2, 3, 4):
            lo = boundary_matrix(cx, k - 1).matrix
            hi = boundary_matrix(cx, k).matrix
            if lo.size and hi.size:
                assert np.all(lo @ hi == 0)

    def test_missing_level_rejected(self):
        cx = build_clique_complex(gen_kpartite(2, 2), 1)
        with pytest.raises(ValueError):
            boundary_matrix(cx, 2)


class TestLaplacianDirac:
    def test_k32_nullity(self):
        g = gen_kpartite(3, 2)
        cx = build_clique_complex(g, 2)
        lap = laplacian(cx, 2)
        assert lap.shape == (9, 9)
        evals = np.linalg.eigvalsh(lap.astype(float))
        assert int((np.abs(evals) < 1e-8).sum()) == 4

    def test_empty_graph_dimension_one(self):
        g = Graph(5, ())
        cx = build_clique_complex(g, 1)
        lap = laplacian(cx, 1)
        assert lap.shape == (5, 5)
        assert np.all(lap == 0)

    @pytest.mark.parametrize("seed", range(4))
    def test_laplacian_equals_dirac_square_middle(self, seed):
        g = gen_erdos_renyi(6, 0.6, seed)
        cx = build_clique_complex(g, 2)
        if cx.count(2) == 0:
            pytest.skip("no edges drawn")
        dop = dirac(cx, 2)
        square = dop.matrix @ dop.matrix
        mid = dop.middle_slice()
        assert np.array_equal(square[mid, mid], laplacian(cx, 2))

    def test_dirac_square_block_diagonal(self):
        g = gen_kpartite(2, 3)
        dop = dirac(build_clique_complex(g, 2), 2)
        square = dop.matrix @ dop.matrix
        a, b, c = dop.block_sizes
        assert np.all(square[:a, a:] == 0)
        assert np.all(square[a : a + b, :a] == 0)
        assert np.all(square[a : a + b, a + b :] == 0)

    def test_dirac_without_top_level(self):
        g = gen_kpartite(2, 2)  # no triangles
        dop = dirac(build_clique_complex(g, 2), 2)
        assert dop.block_sizes[2] == 0
        assert dop.matrix.shape[0] == 4 + 4

    def test_dirac_spectrum_symmetric(self):
        g = gen_erdos_renyi(6, 0.7, 11)
        dop = dirac(build_clique_complex(g, 2), 2)
        evals = np.sort(np.linalg.eigvalsh(dop.matrix.astype(float)))
        assert np.allclose(evals, -evals[::-1], atol=1e-9)

    def test_dirac_eigenvalue_squares(self):
        g = gen_erdos_renyi(6, 0.7, 11)
        dop = dirac(build_clique_complex(g, 2), 2)
        mat = dop.matrix.astype(float)
        sq = np.sort(np.linalg.eigvalsh(mat @ mat))
        from_b = np.sort(np.linalg.eigvalsh(mat) ** 2)
        assert np.allclose(sq, from_b, atol=1e-8)

    def test_dirac_kernel_matches_betti(self):
        g = gen_kpartite(2, 2)
        dop = dirac(build_clique_complex(g, 2), 2)
        square = dop.matrix @ dop.matrix
        mid = dop.middle_slice()
        evals = np.linalg.eigvalsh(square[mid, mid].astype(float))
        assert int((np.abs(evals) < 1e-8).sum()) == betti_exact(g, 2)


class TestBettiExact:
    @pytest.mark.parametrize("m", [2, 3, 4])
    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_kpartite_proposition(self, m, k):
        assert betti_exact(gen_kpartite(m, k), k) == (m - 1) ** k

    def test_forest_has_no_cycles(self):
        g = Graph.from_edges(7, [(0, 1), (1, 2), (1, 3), (4, 5)])
        assert betti_exact(g, 2) == 0

    def test_rips_single_sector(self):
        g = rips_graph(gen_rips_points(6, 1), 1.0)
        assert betti_exact(g, 2) == 2

    def test_beta0_counts_components(self):
        for seed in range(20):
            g = gen_erdos_renyi(9, 0.25, seed)
            adj = {i: set() for i in range(g.n)}
            for i, j in g.edges:
                adj[i].add(j)
                adj[j].add(i)
            seen, comps = set(), 0
            for v in range(g.n):
                if v in seen:
                    continue
                comps += 1
                stack = [v]
                while stack:
                    x = stack.pop()
                    if x in seen:
                        continue
                    seen.add(x)
                    stack.extend(adj[x])
            assert betti_exact(g, 1) == comps

    def test_nullity_equals_rank_path(self):
        # two independent computation paths: exact ranks vs spectral nullity
        for seed in range(6):
            g = gen_erdos_renyi(7, 0.55, seed)
            cx = build_clique_complex(g, 2)
            if cx.count(2) == 0:
                continue
            lap = laplacian(cx, 2)
            evals = np.linalg.eigvalsh(lap.astype(float))
            tol = 1e-8 * max(1.0, evals.max())
            assert int((evals < tol).sum()) == betti_exact(g, 2)


class TestSpectrum:
    @pytest.mark.parametrize("m,k", [(2, 2), (3, 2), (3, 3), (4, 2), (2, 4)])
    def test_kpartite_gap_and_lattice(self, m, k):
        s = spectrum(gen_kpartite(m, k), k)
        assert abs(s.gap - m) < 1e-8
        scaled = s.eigenvalues / m
        assert np.all(np.abs(scaled - np.round(scaled)) < 1e-8)
        assert np.all((np.round(scaled) >= 0) & (np.round(scaled) <= k))

    def test_two_triangles_components(self):
        g = Graph.from_edges(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)])
        assert spectrum(g, 1).nullity == 2

    def test_sorted_and_counts(self):
        s = spectrum(gen_kpartite(3, 2), 2)
        assert np.all(np.diff(s.eigenvalues) >= 0)
        assert s.nullity == 4
        assert s.kappa == pytest.approx(s.top / s.gap)


class TestBettiDelta:
    def test_delta_zero_matches_exact(self):
        g = gen_kpartite(3, 2)
        assert betti_delta_approx(g, 2, 0.0) == betti_exact(g, 2)

    def test_full_dimension_at_top(self):
        g = gen_kpartite(3, 2)
        s = spectrum(g, 2)
        assert betti_delta_approx(g, 2, s.top) == 9

    def test_k32_at_three(self):
        g = gen_kpartite(3, 2)
        evals = spectrum(g, 2).eigenvalues
        mult3 = int(np.sum(np.abs(evals - 3.0) < 1e-8))
        assert betti_delta_approx(g, 2, 3.0) == 4 + mult3

    def test_monotone(self):
        g = gen_kpartite(3, 2)
        values = [betti_delta_approx(g, 2, d) for d in (0.0, 1.0, 3.0, 5.0, 6.0)]
        assert values == sorted(values)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            betti_delta_approx(gen_kpartite(2, 2), 2, -0.1)


class TestKunneth:
    def test_power_of_single_cluster(self):
        m = 3
        seq = [m - 1]
        for _ in range(3):
            seq = kunneth_convolve(seq, [m - 1])
        # after convolving k factors the mass sits at degree k-1
        assert seq[3] == (m - 1) ** 4

    def test_zero_input(self):
        assert kunneth_convolve([0, 0], [1, 2]) == [0] * 4

    def test_matches_join_of_clusters(self):
        # K(2,2) is the join of two edgeless pairs
        g1 = Graph(2, ())
        reduced = reduced_from_regular([betti_exact(g1, 1)])
        joined = kunneth_convolve(reduced, reduced)
        g = gen_kpartite(2, 2)
        got = reduced_from_regular([betti_exact(g, 1), betti_exact(g, 2)])
        assert got == joined[: len(got)]


class TestDeskScale:
    def test_size_report(self):
        from bettiforge.errors import DeskScaleError

        g = gen_kpartite(1, 16)  # complete graph: C(16,8) = 12870 middle cliques
        with pytest.raises(DeskScaleError, match="dimension"):
            betti_exact(g, 8)
