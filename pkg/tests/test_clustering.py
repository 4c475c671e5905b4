import numpy as np
import pytest

from boxlift import (
    AllNoiseError, ClusterLabeling, DbscanParams, PointCloud, dbscan,
    densest_cluster, medoid,
)

from oracles import brute_force_medoid, naive_dbscan, partition_of


def two_blobs_with_outliers(rng, n_blob=50, n_out=5):
    a = rng.normal(size=(n_blob, 3)) * 0.1
    b = rng.normal(size=(n_blob, 3)) * 0.1 + np.array([10.0, 0.0, 0.0])
    out = rng.uniform(-30, 30, size=(n_out, 3))
    return np.vstack([a, b, out])


class TestDbscan:
    def test_empty_cloud(self):
        lab = dbscan(PointCloud(np.zeros((0, 3))), DbscanParams(eps=0.5, min_pts=5))
        assert lab.labels.shape == (0,)
        assert lab.num_clusters == 0

    def test_single_point_min_pts_one(self):
        lab = dbscan(PointCloud([[1.0, 2.0, 3.0]]), DbscanParams(eps=0.5, min_pts=1))
        assert lab.labels.tolist() == [0]
        assert lab.cluster_sizes.tolist() == [1]

    def test_two_blobs_match_naive_reference(self):
        rng = np.random.default_rng(43)
        pts = two_blobs_with_outliers(rng)
        lab = dbscan(PointCloud(pts), DbscanParams(eps=0.5, min_pts=5))
        ref = naive_dbscan(pts, 0.5, 5)
        assert lab.labels.tolist() == ref.tolist()
        assert lab.num_clusters == 2
        assert np.all(lab.labels[-5:] == -1)  # planted outliers are noise

    @pytest.mark.parametrize("n,eps,min_pts,seed", [
        (40, 0.4, 3, 0), (63, 0.8, 5, 1), (64, 0.8, 5, 2), (200, 0.6, 4, 3),
        (350, 1.2, 8, 4), (500, 0.3, 2, 5), (120, 2.5, 10, 6),
    ])
    def test_matches_naive_reference_on_random_instances(self, n, eps, min_pts, seed):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-5, 5, size=(n, 3))
        lab = dbscan(PointCloud(pts), DbscanParams(eps=eps, min_pts=min_pts))
        ref = naive_dbscan(pts, eps, min_pts)
        assert lab.labels.tolist() == ref.tolist()

    def test_partition_independent_of_input_order(self):
        rng = np.random.default_rng(47)
        pts = two_blobs_with_outliers(rng, n_blob=40, n_out=8)
        params = DbscanParams(eps=0.5, min_pts=5)
        base = partition_of(dbscan(PointCloud(pts), params).labels)
        for seed in range(5):
            perm = np.random.default_rng(seed).permutation(len(pts))
            permuted = dbscan(PointCloud(pts[perm]), params).labels
            unshuffled = np.empty_like(permuted)
            unshuffled[perm] = permuted
            assert partition_of(unshuffled) == base

    def test_labeling_validates_sizes(self):
        with pytest.raises(ValueError):
            ClusterLabeling(np.array([0, 0, 1]), np.array([2, 2]))

    def test_params_validated(self):
        with pytest.raises(ValueError):
            DbscanParams(eps=0.0)
        with pytest.raises(ValueError):
            DbscanParams(min_pts=0)


class TestDensestCluster:
    def test_single_cluster_returned_verbatim(self):
        rng = np.random.default_rng(53)
        pts = rng.normal(size=(30, 3)) * 0.1
        cloud = PointCloud(pts)
        lab = dbscan(cloud, DbscanParams(eps=1.0, min_pts=3))
        assert lab.num_clusters == 1
        out = densest_cluster(cloud, lab)
        assert np.array_equal(out.positions, pts)

    def test_largest_cluster_wins(self):
        rng = np.random.default_rng(59)
        big = rng.normal(size=(60, 3)) * 0.1
        small = rng.normal(size=(40, 3)) * 0.1 + np.array([20.0, 0, 0])
        cloud = PointCloud(np.vstack([small, big]))  # smaller cluster listed first
        lab = dbscan(cloud, DbscanParams(eps=1.0, min_pts=3))
        out = densest_cluster(cloud, lab)
        assert len(out) == 60
        assert np.allclose(sorted(out.positions[:, 0]), sorted(big[:, 0]))
        assert len(out) == lab.cluster_sizes.max()

    def test_all_noise_raises(self):
        cloud = PointCloud([[0.0, 0, 0], [10.0, 0, 0], [20.0, 0, 0]])
        lab = dbscan(cloud, DbscanParams(eps=0.5, min_pts=2))
        with pytest.raises(AllNoiseError):
            densest_cluster(cloud, lab)

    def test_tie_goes_to_lowest_cluster_id(self):
        # Two clusters of 4 each, far apart; ids keyed by lowest member index.
        a = np.array([[0.0, 0, 0], [0.1, 0, 0], [0.2, 0, 0], [0.3, 0, 0]])
        b = a + np.array([50.0, 0, 0])
        cloud = PointCloud(np.vstack([a, b]))
        lab = dbscan(cloud, DbscanParams(eps=0.5, min_pts=2))
        assert lab.cluster_sizes.tolist() == [4, 4]
        out = densest_cluster(cloud, lab)
        assert np.array_equal(out.positions, a)


class TestMedoid:
    def test_single_point(self):
        assert np.array_equal(medoid(PointCloud([[3.0, 4.0, 5.0]])), [3.0, 4.0, 5.0])

    def test_collinear_points(self):
        # Sums of distances: 0 -> 11, 1 -> 10, 10 -> 19; the middle point wins.
        cloud = PointCloud([[0.0, 0, 0], [1.0, 0, 0], [10.0, 0, 0]])
        assert np.array_equal(medoid(cloud), [1.0, 0.0, 0.0])

    def test_matches_brute_force(self):
        rng = np.random.default_rng(61)
        pts = rng.normal(size=(100, 3)) * 5
        assert np.array_equal(medoid(PointCloud(pts)), brute_force_medoid(pts))

    def test_is_always_a_member(self):
        rng = np.random.default_rng(67)
        for _ in range(20):
            pts = rng.normal(size=(rng.integers(1, 40), 3))
            m = medoid(PointCloud(pts))
            assert any(np.array_equal(m, p) for p in pts)

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            medoid(PointCloud(np.zeros((0, 3))))
