import numpy as np
import pytest

from specmap.fmap import PointMap
from specmap.mesh import EdgeSet, TriangleMesh, edge_set, total_area
from specmap.metrics import (
    accuracy,
    bijectivity,
    dijkstra_geodesics,
    dirichlet_energy,
    edge_distortion,
    map_report,
    uncoverage,
)
from specmap.spectral import cotan_laplacian
from specmap.testbed import make_permutation_pair

from oracles import (
    accuracy_loop,
    bijectivity_loop,
    dirichlet_dense,
    edge_distortion_loop,
    floyd_warshall,
    uncoverage_set,
)


def _grid_strip(cols):
    """Two rows of vertices triangulated into a strip."""
    verts = []
    for r in range(2):
        for c in range(cols):
            verts.append([c, r, 0.0])
    tris = []
    for c in range(cols - 1):
        a, b = c, c + 1
        d, e = cols + c, cols + c + 1
        tris += [(a, b, d), (b, e, d)]
    return TriangleMesh(np.array(verts, dtype=float), np.array(tris))


@pytest.fixture(scope="module")
def random_setup():
    """Small permutation pair plus all-pairs geodesics for oracle checks."""
    mesh = _grid_strip(8)
    pair = make_permutation_pair(mesh, seed=3)
    es_M = edge_set(pair.mesh_M)
    es_N = edge_set(pair.mesh_N)
    geo_N = dijkstra_geodesics(pair.mesh_N, es_N, np.arange(pair.mesh_N.n))
    geo_M = dijkstra_geodesics(pair.mesh_M, es_M, np.arange(pair.mesh_M.n))
    D_N = floyd_warshall(pair.mesh_N.n, es_N.edges, es_N.lengths)
    D_M = floyd_warshall(pair.mesh_M.n, es_M.edges, es_M.lengths)
    return pair, es_M, geo_M, geo_N, D_M, D_N


class TestDijkstra:
    def test_single_edge(self, tri_mesh):
        es = EdgeSet(np.array([[0, 1]]), np.array([1.0]))
        with pytest.warns(UserWarning, match="disconnected"):
            table = dijkstra_geodesics(tri_mesh, es, [0])
        assert table.row(0)[1] == pytest.approx(1.0)
        assert np.isinf(table.row(0)[2])

    def test_equilateral_all_pairs(self, tri_mesh):
        table = dijkstra_geodesics(tri_mesh, edge_set(tri_mesh), [0, 1, 2])
        D = table.dist
        assert np.allclose(D + np.eye(3), np.ones((3, 3)), atol=1e-12)

    def test_matches_floyd_warshall(self, random_setup):
        pair, _, geo_M, _, D_M, _ = random_setup
        assert np.abs(geo_M.dist - D_M).max() < 1e-12

    def test_missing_source_raises(self, tri_mesh):
        table = dijkstra_geodesics(tri_mesh, edge_set(tri_mesh), [0])
        with pytest.raises(KeyError):
            table.row(2)


class TestAccuracy:
    def test_gt_vs_gt_is_zero(self, random_setup):
        pair, _, _, geo_N, _, _ = random_setup
        assert accuracy(pair.gt_map, pair.gt_map, geo_N, 1.0) == 0.0

    def test_single_wrong_vertex(self, random_setup):
        pair, _, _, geo_N, _, D_N = random_setup
        t = pair.gt_map.targets.copy()
        old = t[4]
        t[4] = pair.gt_map.targets[5]
        wrong = PointMap(t, n_target=pair.mesh_N.n)
        d = D_N[old, t[4]]
        assert accuracy(wrong, pair.gt_map, geo_N, 2.0) == pytest.approx(
            d / (len(t) * 2.0)
        )

    def test_random_matches_loop_oracle(self, random_setup):
        pair, _, _, geo_N, _, D_N = random_setup
        rng = np.random.default_rng(0)
        n = pair.mesh_M.n
        for _ in range(10):
            t = rng.integers(0, pair.mesh_N.n, n)
            pm = PointMap(t, n_target=pair.mesh_N.n)
            got = accuracy(pm, pair.gt_map, geo_N, 1.7)
            want = accuracy_loop(t, pair.gt_map.targets, D_N, 1.7)
            assert got == pytest.approx(want, rel=1e-12)

    def test_length_mismatch(self, random_setup):
        pair, _, _, geo_N, _, _ = random_setup
        with pytest.raises(ValueError):
            accuracy(PointMap(np.zeros(3, np.int64)), pair.gt_map, geo_N, 1.0)


class TestUncoverage:
    def test_bijection_zero(self, random_setup):
        pair = random_setup[0]
        assert uncoverage(pair.gt_map, pair.mesh_N) == 0.0

    def test_constant_map(self, random_setup):
        pair = random_setup[0]
        n = pair.mesh_N.n
        pm = PointMap(np.zeros(pair.mesh_M.n, np.int64), n_target=n)
        assert uncoverage(pm, pair.mesh_N) == pytest.approx(100.0 * (n - 1) / n)

    def test_random_matches_set_oracle(self, random_setup):
        pair = random_setup[0]
        rng = np.random.default_rng(1)
        for _ in range(10):
            t = rng.integers(0, pair.mesh_N.n, pair.mesh_M.n)
            pm = PointMap(t, n_target=pair.mesh_N.n)
            assert uncoverage(pm, pair.mesh_N) == pytest.approx(
                uncoverage_set(t, pair.mesh_N.n)
            )

    def test_area_variant(self, random_setup):
        pair = random_setup[0]
        pm = PointMap(np.zeros(pair.mesh_M.n, np.int64), n_target=pair.mesh_N.n)
        val = uncoverage(pm, pair.mesh_N, variant="area")
        assert 0.0 < val < 100.0


class TestBijectivity:
    def test_inverse_pair_zero(self, random_setup):
        pair, _, geo_M, _, _, _ = random_setup
        assert bijectivity(pair.gt_map, pair.gt_map_rev, geo_M, 1.0) == 0.0

    def test_identity_zero(self, random_setup):
        pair, _, geo_M, _, _, _ = random_setup
        n = pair.mesh_M.n
        ident = PointMap(np.arange(n), n_target=n)
        assert bijectivity(ident, ident, geo_M, 1.0) == 0.0

    def test_random_matches_loop_oracle(self, random_setup):
        pair, _, geo_M, _, D_M, _ = random_setup
        rng = np.random.default_rng(2)
        n_M, n_N = pair.mesh_M.n, pair.mesh_N.n
        for _ in range(10):
            fwd = rng.integers(0, n_N, n_M)
            rev = rng.integers(0, n_M, n_N)
            got = bijectivity(
                PointMap(fwd, n_target=n_N), PointMap(rev, n_target=n_M),
                geo_M, 0.9,
            )
            assert got == pytest.approx(
                bijectivity_loop(fwd, rev, D_M, 0.9), rel=1e-12
            )


class TestEdgeDistortion:
    def test_identity_zero(self, random_setup):
        pair, es_M, _, _, _, _ = random_setup
        ident_pair = make_permutation_pair(pair.mesh_M, seed=99)
        # identity map on the same mesh: use mesh_M on both sides
        geo = dijkstra_geodesics(pair.mesh_M, es_M, np.arange(pair.mesh_M.n))
        n = pair.mesh_M.n
        ident = PointMap(np.arange(n), n_target=n)
        assert edge_distortion(ident, es_M, geo) == pytest.approx(0.0, abs=1e-12)

    def test_collapsed_edge_contributes_one(self, random_setup):
        pair, es_M, _, _, _, _ = random_setup
        geo = dijkstra_geodesics(
            pair.mesh_N, edge_set(pair.mesh_N), np.arange(pair.mesh_N.n)
        )
        pm = PointMap(np.zeros(pair.mesh_M.n, np.int64), n_target=pair.mesh_N.n)
        assert edge_distortion(pm, es_M, geo) == pytest.approx(1.0)

    def test_random_matches_loop_oracle(self, random_setup):
        pair, es_M, _, geo_N, _, D_N = random_setup
        rng = np.random.default_rng(3)
        for _ in range(10):
            t = rng.integers(0, pair.mesh_N.n, pair.mesh_M.n)
            pm = PointMap(t, n_target=pair.mesh_N.n)
            got = edge_distortion(pm, es_M, geo_N)
            want = edge_distortion_loop(t, es_M.edges, es_M.lengths, D_N)
            assert got == pytest.approx(want, rel=1e-12)


class TestDirichlet:
    def test_constant_map_zero(self, random_setup):
        pair = random_setup[0]
        lap = cotan_laplacian(pair.mesh_M)
        pm = PointMap(np.zeros(pair.mesh_M.n, np.int64), n_target=pair.mesh_N.n)
        scale = np.abs(lap.W.data).max()
        assert abs(dirichlet_energy(pm, lap, pair.mesh_N)) < 1e-12 * scale

    def test_identity_matches_dense_oracle(self, ico_mesh):
        lap = cotan_laplacian(ico_mesh)
        n = ico_mesh.n
        ident = PointMap(np.arange(n), n_target=n)
        got = dirichlet_energy(ident, lap, ico_mesh)
        want = dirichlet_dense(
            np.arange(n), lap.W.toarray(), ico_mesh.vertices, total_area(ico_mesh)
        )
        assert got == pytest.approx(want, rel=1e-12)

    def test_shuffled_rougher_than_identity(self, ico_mesh):
        lap = cotan_laplacian(ico_mesh)
        n = ico_mesh.n
        ident = PointMap(np.arange(n), n_target=n)
        rng = np.random.default_rng(4)
        shuffled = np.arange(n)
        idx = rng.choice(n, 30, replace=False)
        shuffled[idx] = rng.permutation(idx)
        rough = PointMap(shuffled, n_target=n)
        assert dirichlet_energy(rough, lap, ico_mesh) > dirichlet_energy(
            ident, lap, ico_mesh
        )


class TestRelabelingInvariance:
    def test_metrics_invariant_under_consistent_relabeling(self, random_setup):
        pair, es_M, geo_M, geo_N, D_M, D_N = random_setup
        rng = np.random.default_rng(5)
        n_M, n_N = pair.mesh_M.n, pair.mesh_N.n
        t = rng.integers(0, n_N, n_M)

        base_acc = accuracy(
            PointMap(t, n_target=n_N), pair.gt_map, geo_N, 1.0
        )
        base_unc = uncoverage(PointMap(t, n_target=n_N), pair.mesh_N)
        base_dist = edge_distortion(PointMap(t, n_target=n_N), es_M, geo_N)

        # relabel both shapes and push the maps through the relabelings
        rp_M = make_permutation_pair(pair.mesh_M, seed=31)
        rp_N = make_permutation_pair(pair.mesh_N, seed=32)
        sig_M = rp_M.gt_map.targets
        sig_N = rp_N.gt_map.targets
        mesh_M2, mesh_N2 = rp_M.mesh_N, rp_N.mesh_N
        t2 = np.empty(n_M, np.int64)
        t2[sig_M] = sig_N[t]
        gt2 = np.empty(n_M, np.int64)
        gt2[sig_M] = sig_N[pair.gt_map.targets]

        es_M2 = edge_set(mesh_M2)
        geo_N2 = dijkstra_geodesics(mesh_N2, edge_set(mesh_N2), np.arange(n_N))
        pm2 = PointMap(t2, n_target=n_N)
        assert accuracy(
            pm2, PointMap(gt2, n_target=n_N), geo_N2, 1.0
        ) == pytest.approx(base_acc, rel=1e-12)
        assert uncoverage(pm2, mesh_N2) == pytest.approx(base_unc, rel=1e-12)
        assert edge_distortion(pm2, es_M2, geo_N2) == pytest.approx(
            base_dist, rel=1e-12
        )


class TestMapReport:
    def test_full_report(self, random_setup):
        pair = random_setup[0]
        report = map_report(
            pair.mesh_M, pair.mesh_N, pair.gt_map,
            map_NM=pair.gt_map_rev, gt=pair.gt_map,
        )
        assert report.accuracy_mean == 0.0
        assert report.uncoverage_percent == 0.0
        assert report.bijectivity_mean == 0.0
        assert report.edge_distortion_mean == pytest.approx(0.0, abs=1e-12)
        assert report.dirichlet > 0.0

    def test_partial_report(self, random_setup):
        pair = random_setup[0]
        report = map_report(pair.mesh_M, pair.mesh_N, pair.gt_map)
        assert report.accuracy_mean is None
        assert report.bijectivity_mean is None
        assert report.uncoverage_percent == 0.0
