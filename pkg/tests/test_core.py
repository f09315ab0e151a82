import math

import numpy as np
import pytest

from ccdcluster.core import (
    NOISE_LABEL,
    ClusteringModel,
    Partition,
    assign_points,
    cluster_ks,
    cluster_rk,
    components_model,
    convex_distance,
    ks_radii,
    pairwise_distances,
    rk_radii,
    select_centers_silhouette,
)
from ccdcluster.digraph import build_ccd, greedy_mds_scored, intersection_graph
from ccdcluster.spatial import BallWindow, EnvelopeTable, csr_test
from conftest import two_blob_fixture


def oracle_ks_radii(points, delta):
    X = np.asarray(points, float)
    n, d = X.shape
    radii = np.empty(n)
    for i in range(n):
        cand = sorted(
            float(np.linalg.norm(X[i] - X[j])) for j in range(n) if j != i
        )
        best_r, best_obj = None, -np.inf
        for r in cand:
            caught = sum(1 for j in range(n) if np.linalg.norm(X[i] - X[j]) <= r) / n
            obj = caught - delta * r**d
            if obj > best_obj:
                best_obj, best_r = obj, r
        radii[i] = best_r
    return radii


class TestKsRadii:
    def test_line_example(self):
        X = np.array([[0.0], [0.1], [0.2], [5.0]])
        ra = ks_radii(X, 0.2)
        assert ra.radii[0] == pytest.approx(0.2)
        assert ra.method == "ks"
        assert ra.candidates_examined.tolist() == [3, 3, 3, 3]

    def test_huge_delta_gives_nearest_neighbor(self):
        rng = np.random.default_rng(0)
        X = rng.random((20, 2))
        ra = ks_radii(X, 1e6)
        D = pairwise_distances(X)
        nn = np.sort(D, axis=1)[:, 1]
        np.testing.assert_allclose(ra.radii, nn)

    def test_delta_validation(self):
        with pytest.raises(ValueError):
            ks_radii(np.zeros((3, 1)), 0.0)

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            n = int(rng.integers(5, 40))
            X = rng.random((n, 2)) * 3
            delta = float(rng.random() * 0.5 + 0.01)
            np.testing.assert_array_equal(ks_radii(X, delta).radii, oracle_ks_radii(X, delta))


class TestRkRadii:
    def test_single_blob_spans_all_candidates(self, table2):
        rng = np.random.default_rng(2)
        X = rng.normal(0.0, 0.05, (30, 2))
        ra = rk_radii(X, table2)
        D = pairwise_distances(X)
        i = int(np.argmin(np.linalg.norm(X - X.mean(axis=0), axis=1)))
        assert ra.radii[i] == pytest.approx(np.max(D[i]))

    def test_dimension_mismatch(self, table2):
        with pytest.raises(ValueError):
            rk_radii(np.zeros((5, 3)), table2)

    def test_search_mode_validation(self, table2):
        with pytest.raises(ValueError):
            rk_radii(np.zeros((5, 2)), table2, search="mystery")

    def test_linear_scan_matches_public_test_scan(self, table2):
        rng = np.random.default_rng(3)
        X = np.vstack([rng.normal(0, 0.3, (12, 2)), rng.normal([3, 0], 0.3, (12, 2))])
        D = pairwise_distances(X)
        ra = rk_radii(X, table2, search="linear", dists=D)
        for i in range(len(X)):
            cand = np.sort(np.delete(D[i], i))
            expected = cand[-1]
            for k, r in enumerate(cand):
                if r == 0.0:
                    continue
                members = np.flatnonzero(D[i] <= r)
                if members.size < table2.min_points:
                    continue
                if csr_test(X[members], BallWindow(X[i], r), table2).rejected:
                    expected = cand[k - 1] if k > 0 else 0.0
                    break
            assert ra.radii[i] == expected

    def test_binary_matches_linear_when_monotone(self, table2):
        rng = np.random.default_rng(4)
        checked = 0
        for case in range(20):
            n = int(rng.integers(8, 22))
            X = np.vstack(
                [rng.normal(0, 0.4, (n, 2)), rng.normal([4, 0], 0.4, (n, 2))]
            )
            D = pairwise_distances(X)
            lin = rk_radii(X, table2, search="linear", dists=D)
            bi = rk_radii(X, table2, search="binary", dists=D)
            for i in range(len(X)):
                cand = np.sort(np.delete(D[i], i))
                seq = []
                for r in cand:
                    members = np.flatnonzero(D[i] <= r)
                    seq.append(
                        r > 0
                        and members.size >= table2.min_points
                        and csr_test(X[members], BallWindow(X[i], r), table2).rejected
                    )
                monotone = all(a <= b for a, b in zip(seq, seq[1:]))
                if monotone:
                    checked += 1
                    assert lin.radii[i] == bi.radii[i]
        assert checked > 100

    def test_radius_is_zero_or_an_interpoint_distance(self, table2):
        rng = np.random.default_rng(5)
        X = rng.random((25, 2))
        D = pairwise_distances(X)
        ra = rk_radii(X, table2, dists=D)
        for i, r in enumerate(ra.radii):
            row = np.delete(D[i], i)
            assert r == 0.0 or np.any(row == r)


class TestConvexDistance:
    def test_examples(self):
        assert convex_distance([0.0, 0.0], [0.0, 0.0], 2.0) == 0.0
        assert convex_distance([1.0, 0.0], [0.0, 0.0], 2.0) == 0.5
        assert convex_distance([3.0, 0.0], [0.0, 0.0], 2.0) == 1.5

    def test_zero_radius(self):
        assert convex_distance([0.0], [0.0], 0.0) == 0.0
        assert convex_distance([1.0], [0.0], 0.0) == math.inf


class TestSelectCenters:
    def test_single_prototype_single_cluster(self, table2):
        rng = np.random.default_rng(6)
        X = rng.normal(0, 0.1, (25, 2))
        model, partition = cluster_rk(X, envelope=table2)
        assert model.k_hat_clusters == 1
        assert np.all(partition.labels == 0)

    def test_three_gaussians(self, table2):
        rng = np.random.default_rng(7)
        X = np.vstack(
            [
                rng.normal([0, 0], 1.0, (50, 2)),
                rng.normal([5, 0], 1.0, (50, 2)),
                rng.normal([2, 4], 1.0, (50, 2)),
            ]
        )
        model, _ = cluster_rk(X, envelope=table2)
        assert model.k_hat_clusters == 3

    def test_spurious_ball_relegated_to_noise(self):
        rng = np.random.default_rng(8)
        X = np.vstack(
            [
                rng.random((40, 2)),
                rng.random((40, 2)) + [4, 0],
                rng.random((3, 2)) * 0.2 + [2, 3],
            ]
        )
        model, partition = cluster_ks(X, 0.2)
        assert model.k_hat_clusters == 2
        assert set(partition.labels[:80]) == {0, 1}

    def test_prefix_rule_validation(self):
        X = np.random.default_rng(9).random((10, 2))
        with pytest.raises(ValueError):
            cluster_ks(X, 0.2, prefix_rule="best")


class TestComponentsModel:
    def test_fully_intersecting_single_cluster(self):
        rng = np.random.default_rng(10)
        X = rng.random((20, 2))
        model, partition = cluster_ks(X, 0.05, shape="arbitrary")
        assert model.k_hat_clusters == 1
        assert model.mode == "arbitrary"
        assert len(model.components) == 1

    def test_two_blobs_two_components(self):
        X = two_blob_fixture(seed=21)
        model, partition = cluster_ks(X, 0.2, shape="arbitrary")
        assert model.k_hat_clusters == 2
        from ccdcluster.metrics import rand_index

        assert rand_index(np.repeat([0, 1], 50), partition.labels) == 1.0

    def test_components_partition_centers(self):
        X = two_blob_fixture(seed=22)
        model, _ = cluster_ks(X, 0.2, shape="arbitrary")
        flat = [pos for group in model.components for pos in group]
        assert sorted(flat) == list(range(len(model.centers)))


class TestAssignPoints:
    def test_point_in_single_ball(self):
        X = np.array([[0.0, 0.0], [0.2, 0.0], [5.0, 0.0], [5.2, 0.0]])
        model = ClusteringModel(
            centers=np.array([0, 2]),
            center_radii=np.array([0.5, 0.5]),
            mode="convex",
            components=None,
            k_hat_clusters=2,
        )
        partition = assign_points(X, model)
        assert partition.labels.tolist() == [0, 0, 1, 1]
        assert partition.covered.all()

    def test_ratio_comparison_example(self):
        X = np.array([[0.0, 0.0], [10.0, 0.0], [3.0, 0.0]])
        model = ClusteringModel(
            centers=np.array([0, 1]),
            center_radii=np.array([2.0, 5.0]),
            mode="convex",
            components=None,
            k_hat_clusters=2,
        )
        partition = assign_points(X, model)
        # distances 3 and 7 -> ratios 1.5 vs 1.4: second ball wins
        assert partition.labels[2] == 1

    def test_mark_noise(self):
        X = np.array([[0.0, 0.0], [0.1, 0.0], [9.0, 9.0]])
        model = ClusteringModel(
            centers=np.array([0]),
            center_radii=np.array([0.5]),
            mode="convex",
            components=None,
            k_hat_clusters=1,
        )
        partition = assign_points(X, model, mark_noise=True)
        assert partition.labels.tolist() == [0, 0, NOISE_LABEL]
        assert partition.covered.tolist() == [True, True, False]

    def test_scale_free_labels(self):
        rng = np.random.default_rng(11)
        X = rng.random((30, 2))
        model = ClusteringModel(
            centers=np.array([0, 7, 13]),
            center_radii=np.array([0.4, 0.3, 0.6]),
            mode="convex",
            components=None,
            k_hat_clusters=3,
        )
        base = assign_points(X, model)
        scaled = ClusteringModel(
            centers=model.centers,
            center_radii=model.center_radii * 3.0,
            mode="convex",
            components=None,
            k_hat_clusters=3,
        )
        np.testing.assert_array_equal(assign_points(X, scaled).labels, base.labels)


class TestPipelines:
    def test_ks_two_blob_delta_sensitivity(self):
        X = two_blob_fixture(seed=42)
        assert cluster_ks(X, 0.2)[0].k_hat_clusters == 2
        assert cluster_ks(X, 0.05)[0].k_hat_clusters == 1

    def test_ks_two_blob_intersection_graph_splits(self):
        X = two_blob_fixture(seed=42)
        D = pairwise_distances(X)
        ra = ks_radii(X, 0.2, dists=D)
        dg = build_ccd(X, ra.radii, dists=D)
        mds = greedy_mds_scored(dg, scores=dg.out_degrees.astype(float))
        g = intersection_graph(dg, mds)
        from ccdcluster.digraph import connected_components

        comps = connected_components(g)
        assert len(comps) == 2
        side = [int(np.all(np.asarray(c) < 50)) for c in comps]
        assert sorted(side) == [0, 1]

    def test_rk_two_gaussians(self, table2):
        rng = np.random.default_rng(12)
        X = np.vstack([rng.normal([0, 0], 1, (100, 2)), rng.normal([5, 0], 1, (100, 2))])
        model, partition = cluster_rk(X, envelope=table2)
        assert model.k_hat_clusters == 2
        from ccdcluster.metrics import rand_index

        assert rand_index(np.repeat([0, 1], 100), partition.labels) > 0.95

    def test_rigid_motion_invariance_ks(self):
        X = two_blob_fixture(seed=13)
        base_model, base_partition = cluster_ks(X, 0.2)
        theta = 1.1
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        moved = X @ rot.T + np.array([-7.0, 2.5])
        model, partition = cluster_ks(moved, 0.2)
        assert model.k_hat_clusters == base_model.k_hat_clusters
        np.testing.assert_array_equal(partition.labels, base_partition.labels)
        np.testing.assert_allclose(
            model.center_radii, base_model.center_radii, rtol=1e-9
        )

    def test_rk_scale_equivariance(self, table2):
        rng = np.random.default_rng(14)
        X = np.vstack([rng.normal([0, 0], 0.5, (30, 2)), rng.normal([4, 0], 0.5, (30, 2))])
        base_model, base_partition = cluster_rk(X, envelope=table2)
        factor = 3.7
        model, partition = cluster_rk(X * factor, envelope=table2)
        assert model.k_hat_clusters == base_model.k_hat_clusters
        np.testing.assert_array_equal(partition.labels, base_partition.labels)
        np.testing.assert_allclose(
            model.center_radii, base_model.center_radii * factor, rtol=1e-9
        )

    def test_every_center_covers_itself(self, table2):
        X = two_blob_fixture(seed=15)
        model, partition = cluster_rk(X, envelope=table2)
        ratios = [
            convex_distance(X[c], X[c], r)
            for c, r in zip(model.centers, model.center_radii)
        ]
        assert all(r <= 1 for r in ratios)
        assert partition.covered[model.centers].all()

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            cluster_ks(np.zeros((5, 2)), 0.1, shape="weird")

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            cluster_ks(np.zeros((1, 2)), 0.1)
