"""Rigid-body poses, pinhole cameras, and pixel/point mappings.

Coordinate conventions:
    Camera frame: x right, y down, z forward (optical axis).
    Ego frame: x forward, y left, z up.
    Image frame: u right, v down, origin at the top-left pixel corner.
    Quaternions are scalar-first (w, x, y, z), matching nuScenes calibration.

A pose named ``a_from_b`` maps points expressed in frame b into frame a:
``p_a = R @ p_b + t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDepthError

# Points closer than this to the camera plane are rejected when projecting;
# divisions by near-zero depth are numerically explosive and usually self-returns.
MIN_CAMERA_DEPTH = 0.1


def quat_multiply(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Hamilton product of two (w, x, y, z) quaternions."""
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of a unit (w, x, y, z) quaternion."""
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_matrix(m: np.ndarray) -> np.ndarray:
    """(w, x, y, z) quaternion of a rotation matrix (Shepperd's method)."""
    m = np.asarray(m, dtype=float)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2
        q = np.array([0.25 * s,
                      (m[2, 1] - m[1, 2]) / s,
                      (m[0, 2] - m[2, 0]) / s,
                      (m[1, 0] - m[0, 1]) / s])
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        q = np.array([(m[2, 1] - m[1, 2]) / s,
                      0.25 * s,
                      (m[0, 1] + m[1, 0]) / s,
                      (m[0, 2] + m[2, 0]) / s])
    elif m[1, 1] >= m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        q = np.array([(m[0, 2] - m[2, 0]) / s,
                      (m[0, 1] + m[1, 0]) / s,
                      0.25 * s,
                      (m[1, 2] + m[2, 1]) / s])
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        q = np.array([(m[1, 0] - m[0, 1]) / s,
                      (m[0, 2] + m[2, 0]) / s,
                      (m[1, 2] + m[2, 1]) / s,
                      0.25 * s])
    return q / np.linalg.norm(q)


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], np.sin(half) * axis))


@dataclass(frozen=True)
class Se3Pose:
    """Rigid transform: unit quaternion (w, x, y, z) plus translation in meters.

    The quaternion is renormalized on construction; a zero or non-finite
    quaternion is rejected.
    """

    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        q = np.asarray(self.rotation, dtype=float).reshape(4)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(t))):
            raise ValueError("pose components must be finite")
        norm = np.linalg.norm(q)
        if norm < 1e-12:
            raise ValueError("zero quaternion is not a rotation")
        object.__setattr__(self, "rotation", q / norm)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Se3Pose":
        return cls()

    @classmethod
    def from_rotation_z(cls, yaw: float, translation=(0.0, 0.0, 0.0)) -> "Se3Pose":
        return cls(quat_from_axis_angle(np.array([0.0, 0.0, 1.0]), yaw),
                   np.asarray(translation, dtype=float))

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map one point (3,) or a stack (N, 3) through this transform."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation_matrix().T + self.translation

    def heading(self) -> float:
        """Rotation angle about +z of the x axis image, for ground-plane work."""
        r = self.rotation_matrix()
        return float(np.arctan2(r[1, 0], r[0, 0]))


def compose(a: Se3Pose, b: Se3Pose) -> Se3Pose:
    """Transform applying b first, then a."""
    rot = quat_multiply(a.rotation, b.rotation)
    trans = a.apply(b.translation)
    return Se3Pose(rot, trans)


def inverse(p: Se3Pose) -> Se3Pose:
    conj = p.rotation * np.array([1.0, -1.0, -1.0, -1.0])
    return Se3Pose(conj, -(quat_to_matrix(conj) @ p.translation))


@dataclass
class PointCloud:
    """Columnar 3D points with optional per-point attributes.

    ``frame`` tags the coordinate frame the positions live in
    ("sensor", "ego", "global", "camera", ...).
    """

    positions: np.ndarray
    frame: str = "sensor"
    intensity: np.ndarray | None = None
    ring: np.ndarray | None = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(pos)):
            raise ValueError("point coordinates must be finite")
        self.positions = pos
        for name in ("intensity", "ring"):
            attr = getattr(self, name)
            if attr is not None:
                attr = np.asarray(attr, dtype=float).reshape(-1)
                if attr.shape[0] != pos.shape[0]:
                    raise ValueError(f"{name} length {attr.shape[0]} != point count {pos.shape[0]}")
                setattr(self, name, attr)

    def __len__(self) -> int:
        return self.positions.shape[0]

    def take(self, indices: np.ndarray, frame: str | None = None) -> "PointCloud":
        """Sub-cloud at the given indices; attributes follow, order preserved."""
        idx = np.asarray(indices, dtype=int)
        return PointCloud(
            self.positions[idx],
            frame=frame if frame is not None else self.frame,
            intensity=None if self.intensity is None else self.intensity[idx],
            ring=None if self.ring is None else self.ring[idx],
        )


def transform_cloud(pose: Se3Pose, cloud: PointCloud, frame: str = "unknown") -> PointCloud:
    """Map every point through ``pose``; attributes and ordering are preserved."""
    return PointCloud(
        pose.apply(cloud.positions) if len(cloud) else cloud.positions.copy(),
        frame=frame,
        intensity=None if cloud.intensity is None else cloud.intensity.copy(),
        ring=None if cloud.ring is None else cloud.ring.copy(),
    )


@dataclass(frozen=True)
class CameraModel:
    """Distortion-free pinhole camera.

    ``sensor_from_reference`` maps reference-frame (ego) points into the
    camera frame. Focal lengths and principal point are in pixels.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    sensor_from_reference: Se3Pose = field(default_factory=Se3Pose)

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")


@dataclass
class PixelPointMap:
    """Sub-pixel image locations of projected cloud points.

    Only points in front of the camera (z > MIN_CAMERA_DEPTH) and inside the
    image bounds are stored; ``source_index`` points back into the cloud the
    map was built from.
    """

    pixel_uv: np.ndarray
    depth: np.ndarray
    source_index: np.ndarray

    def __len__(self) -> int:
        return self.depth.shape[0]


def project_cloud(cam: CameraModel, cloud: PointCloud) -> PixelPointMap:
    """Project a camera-frame cloud through the pinhole model.

    Points behind the camera, closer than MIN_CAMERA_DEPTH, or projecting
    outside the image are omitted (filtering, not failure). Output order
    follows input order, so source_index is ascending.
    """
    pos = cloud.positions
    if pos.shape[0] == 0:
        return PixelPointMap(np.zeros((0, 2)), np.zeros(0), np.zeros(0, dtype=int))
    z = pos[:, 2]
    valid = z > MIN_CAMERA_DEPTH
    u = np.full(pos.shape[0], -1.0)
    v = np.full(pos.shape[0], -1.0)
    np.divide(pos[:, 0], z, out=u, where=valid)
    np.divide(pos[:, 1], z, out=v, where=valid)
    u = cam.fx * u + cam.cx
    v = cam.fy * v + cam.cy
    keep = valid & (u >= 0) & (u < cam.width) & (v >= 0) & (v < cam.height)
    idx = np.nonzero(keep)[0]
    return PixelPointMap(np.stack([u[idx], v[idx]], axis=1), z[idx], idx)


def backproject_pixel(cam: CameraModel, u, v, depth):
    """Camera-frame point(s) of pixel location(s) at the given depth(s).

    Accepts scalars or broadcastable arrays; returns shape (..., 3).
    Raises InvalidDepthError for any non-positive depth.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    d = np.asarray(depth, dtype=float)
    if np.any(d <= 0):
        raise InvalidDepthError("depth must be positive")
    x = (u - cam.cx) * d / cam.fx
    y = (v - cam.cy) * d / cam.fy
    return np.stack(np.broadcast_arrays(x, y, d), axis=-1)
