import numpy as np
import pytest

from boxlift import (
    CameraModel, DepthMap, EmptySegmentError, InstanceMask, PointCloud,
    backproject_pixel, depth_to_pseudocloud, lift_mask_depth, lift_mask_lidar,
    project_cloud,
)

CAM = CameraModel(fx=100.0, fy=100.0, cx=8.0, cy=6.0, width=16, height=12)


def small_cloud():
    # Projects to pixels (8,6), (10,6), (8,8) at depths 5, 5, 5.
    return PointCloud([[0.0, 0.0, 5.0], [0.1, 0.0, 5.0], [0.0, 0.1, 5.0]], frame="camera")


class TestLiftLidar:
    def test_full_mask_captures_everything(self):
        cloud = small_cloud()
        pm = project_cloud(CAM, cloud)
        seg = lift_mask_lidar(InstanceMask(np.ones((12, 16), dtype=bool)), pm, cloud)
        assert seg.hit_count == len(pm) == 3
        assert np.array_equal(seg.points.positions, cloud.positions)

    def test_selects_exactly_masked_points(self):
        cloud = small_cloud()
        pm = project_cloud(CAM, cloud)
        bitmap = np.zeros((12, 16), dtype=bool)
        bitmap[6, 8] = True   # first point
        bitmap[8, 8] = True   # third point
        seg = lift_mask_lidar(InstanceMask(bitmap), pm, cloud, detection_ref="d0")
        assert seg.hit_count == 2
        assert np.array_equal(seg.points.positions, cloud.positions[[0, 2]])
        assert seg.detection_ref == "d0"
        assert seg.pixel_count == 2

    def test_empty_intersection_raises(self):
        cloud = small_cloud()
        pm = project_cloud(CAM, cloud)
        bitmap = np.zeros((12, 16), dtype=bool)
        bitmap[0, 0] = True
        with pytest.raises(EmptySegmentError):
            lift_mask_lidar(InstanceMask(bitmap), pm, cloud)

    def test_mask_consistency_invariant(self):
        rng = np.random.default_rng(31)
        pts = np.column_stack([rng.uniform(-0.5, 0.5, 400), rng.uniform(-0.4, 0.4, 400),
                               rng.uniform(1.0, 9.0, 400)])
        cloud = PointCloud(pts, frame="camera")
        pm = project_cloud(CAM, cloud)
        bitmap = rng.random((12, 16)) < 0.4
        bitmap[5, 5] = True  # keep the mask non-empty
        mask = InstanceMask(bitmap)
        try:
            seg = lift_mask_lidar(mask, pm, cloud)
        except EmptySegmentError:
            pytest.skip("mask captured nothing for this seed")
        back = project_cloud(CAM, seg.points)
        assert len(back) == seg.hit_count
        cols = np.floor(back.pixel_uv[:, 0]).astype(int)
        rows = np.floor(back.pixel_uv[:, 1]).astype(int)
        assert bitmap[rows, cols].all()

    def test_superset_mask_never_loses_points(self):
        rng = np.random.default_rng(37)
        pts = np.column_stack([rng.uniform(-0.5, 0.5, 300), rng.uniform(-0.4, 0.4, 300),
                               rng.uniform(1.0, 9.0, 300)])
        cloud = PointCloud(pts, frame="camera")
        pm = project_cloud(CAM, cloud)
        small = rng.random((12, 16)) < 0.3
        small[6, 8] = True
        big = small | (rng.random((12, 16)) < 0.3)
        hits_small = lift_mask_lidar(InstanceMask(small), pm, cloud).hit_count
        hits_big = lift_mask_lidar(InstanceMask(big), pm, cloud).hit_count
        assert hits_big >= hits_small


class TestLiftDepth:
    def test_single_pixel_at_principal_point(self):
        bitmap = np.zeros((12, 16), dtype=bool)
        bitmap[6, 8] = True
        depth = np.zeros((12, 16))
        depth[6, 8] = 4.0
        seg = lift_mask_depth(InstanceMask(bitmap), DepthMap(depth), CAM)
        assert seg.hit_count == 1
        assert np.allclose(seg.points.positions, [[0.0, 0.0, 4.0]])

    def test_constant_plane_full_mask(self):
        depth = np.full((12, 16), 7.5)
        seg = lift_mask_depth(InstanceMask(np.ones((12, 16), dtype=bool)), DepthMap(depth), CAM)
        assert seg.hit_count == 12 * 16
        assert np.allclose(seg.points.positions[:, 2], 7.5)

    def test_invalid_depth_pixels_skipped(self):
        bitmap = np.zeros((12, 16), dtype=bool)
        bitmap[0:2, 0:2] = True
        depth = np.zeros((12, 16))
        depth[0, 0], depth[0, 1], depth[1, 0], depth[1, 1] = 1.0, 2.0, 0.0, 4.0
        seg = lift_mask_depth(InstanceMask(bitmap), DepthMap(depth), CAM)
        assert seg.hit_count == 3
        expected = np.array([backproject_pixel(CAM, c, r, d)
                             for r, c, d in [(0, 0, 1.0), (0, 1, 2.0), (1, 1, 4.0)]])
        assert np.allclose(seg.points.positions, expected)

    def test_all_invalid_raises(self):
        bitmap = np.zeros((12, 16), dtype=bool)
        bitmap[3, 3] = True
        with pytest.raises(EmptySegmentError):
            lift_mask_depth(InstanceMask(bitmap), DepthMap(np.zeros((12, 16))), CAM)

    def test_stride_walks_member_pixels_row_major(self):
        bitmap = np.zeros((12, 16), dtype=bool)
        bitmap[2, [1, 5, 9]] = True
        bitmap[7, [0, 4]] = True
        depth = np.full((12, 16), 3.0)
        seg = lift_mask_depth(InstanceMask(bitmap), DepthMap(depth), CAM, stride=2)
        # Member pixels row-major: (2,1) (2,5) (2,9) (7,0) (7,4); stride 2 keeps 1st, 3rd, 5th.
        expected = np.array([backproject_pixel(CAM, c, r, 3.0)
                             for r, c in [(2, 1), (2, 9), (7, 4)]])
        assert np.allclose(seg.points.positions, expected)

    def test_dimension_mismatch(self):
        bitmap = np.ones((10, 16), dtype=bool)
        with pytest.raises(ValueError):
            lift_mask_depth(InstanceMask(bitmap), DepthMap(np.ones((12, 16))), CAM)


class TestPseudoCloud:
    def test_all_invalid_gives_empty_cloud(self):
        cloud = depth_to_pseudocloud(DepthMap(np.zeros((12, 16))), CAM)
        assert len(cloud) == 0

    def test_stride_equal_to_width_keeps_one_per_row(self):
        cloud = depth_to_pseudocloud(DepthMap(np.full((12, 16), 2.0)), CAM, stride=16)
        # Counting oracle: flattened indices 0, 16, 32, ... are column 0 of each row.
        assert len(cloud) == 12
        expected = np.array([backproject_pixel(CAM, 0, r, 2.0) for r in range(12)])
        assert np.allclose(cloud.positions, expected)

    def test_single_valid_pixel(self):
        depth = np.zeros((12, 16))
        depth[9, 13] = 6.0
        cloud = depth_to_pseudocloud(DepthMap(depth), CAM)
        assert np.allclose(cloud.positions, [backproject_pixel(CAM, 13, 9, 6.0)])

    def test_strided_cloud_is_subset_of_dense(self):
        rng = np.random.default_rng(41)
        depth = rng.uniform(0.5, 20.0, size=(12, 16))
        depth[rng.random((12, 16)) < 0.3] = 0.0
        dense = depth_to_pseudocloud(DepthMap(depth), CAM, stride=1)
        dense_rows = {tuple(p) for p in dense.positions}
        for stride in (2, 3, 5, 7):
            sub = depth_to_pseudocloud(DepthMap(depth), CAM, stride=stride)
            assert {tuple(p) for p in sub.positions} <= dense_rows

    def test_mask_requires_member_pixels(self):
        with pytest.raises(ValueError):
            InstanceMask(np.zeros((4, 4), dtype=bool))
