"""Lift 2D instance masks to per-instance 3D point segments.

Two sources: real LiDAR, selected through a pixel/point map, or a dense
depth map back-projected pixel by pixel (pseudo-LiDAR). Sub-pixel
projections are rasterized with floor(u), floor(v), the half-open
pixel-area convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySegmentError
from .geometry import CameraModel, PixelPointMap, PointCloud, backproject_pixel

DEFAULT_PSEUDO_STRIDE = 4


@dataclass
class InstanceMask:
    """Boolean membership bitmap for one detected instance."""

    bitmap: np.ndarray
    instance_id: int = 1

    def __post_init__(self):
        bm = np.asarray(self.bitmap, dtype=bool)
        if bm.ndim != 2:
            raise ValueError("mask bitmap must be 2D (height, width)")
        if not bm.any():
            raise ValueError("mask has no member pixels")
        if self.instance_id <= 0:
            raise ValueError("instance id must be positive")
        self.bitmap = bm

    @property
    def height(self) -> int:
        return self.bitmap.shape[0]

    @property
    def width(self) -> int:
        return self.bitmap.shape[1]

    @property
    def pixel_count(self) -> int:
        return int(self.bitmap.sum())


@dataclass
class DepthMap:
    """Per-pixel metric depth; 0 marks an invalid sample."""

    depth: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.depth, dtype=float)
        if d.ndim != 2:
            raise ValueError("depth map must be 2D (height, width)")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("depth values must be finite and >= 0")
        self.depth = d

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]


@dataclass
class LiftedSegment:
    """3D points captured by one instance mask, in the camera frame."""

    detection_ref: str
    points: PointCloud
    pixel_count: int

    @property
    def hit_count(self) -> int:
        return len(self.points)


def lift_mask_lidar(mask: InstanceMask, pixel_map: PixelPointMap, cloud: PointCloud,
                    detection_ref: str = "") -> LiftedSegment:
    """Select the cloud points whose floored pixels land on mask members.

    ``pixel_map`` must have been produced from ``cloud`` with a camera whose
    image dimensions match the mask. Output order is stable by source index.
    Raises EmptySegmentError when nothing is captured.
    """
    if len(pixel_map) == 0:
        raise EmptySegmentError(f"no projected points to lift for {detection_ref!r}")
    cols = np.floor(pixel_map.pixel_uv[:, 0]).astype(int)
    rows = np.floor(pixel_map.pixel_uv[:, 1]).astype(int)
    if rows.max() >= mask.height or cols.max() >= mask.width:
        raise ValueError("pixel map exceeds mask dimensions; mask does not annotate this camera")
    member = mask.bitmap[rows, cols]
    if not member.any():
        raise EmptySegmentError(f"mask captured no 3D points for {detection_ref!r}")
    return LiftedSegment(
        detection_ref=detection_ref,
        points=cloud.take(pixel_map.source_index[member], frame="camera"),
        pixel_count=mask.pixel_count,
    )


def lift_mask_depth(mask: InstanceMask, depth: DepthMap, cam: CameraModel,
                    stride: int = 1, detection_ref: str = "") -> LiftedSegment:
    """Back-project every k-th member pixel with a valid depth sample.

    The stride walks member pixels in row-major order before the validity
    filter, so subsampling is deterministic. Raises EmptySegmentError when
    every selected pixel has invalid depth.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if (mask.height, mask.width) != (depth.height, depth.width):
        raise ValueError("mask and depth dimensions differ")
    rows, cols = np.nonzero(mask.bitmap)  # row-major order
    rows = rows[::stride]
    cols = cols[::stride]
    d = depth.depth[rows, cols]
    valid = d > 0
    if not valid.any():
        raise EmptySegmentError(f"all member pixels have invalid depth for {detection_ref!r}")
    pts = backproject_pixel(cam, cols[valid], rows[valid], d[valid])
    return LiftedSegment(
        detection_ref=detection_ref,
        points=PointCloud(pts, frame="camera"),
        pixel_count=mask.pixel_count,
    )


def depth_to_pseudocloud(depth: DepthMap, cam: CameraModel, stride: int = 1) -> PointCloud:
    """Dense camera-frame cloud of every k-th valid pixel, row-major.

    The stride indexes the flattened row-major pixel sequence; a stride-k
    cloud is therefore a subset of the stride-1 cloud. May be empty.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if (depth.height, depth.width) != (cam.height, cam.width):
        raise ValueError("depth map and camera dimensions differ")
    flat = np.arange(0, depth.height * depth.width, stride)
    rows, cols = np.divmod(flat, depth.width)
    d = depth.depth[rows, cols]
    valid = d > 0
    if not valid.any():
        return PointCloud(np.zeros((0, 3)), frame="camera")
    pts = backproject_pixel(cam, cols[valid], rows[valid], d[valid])
    return PointCloud(pts, frame="camera")
