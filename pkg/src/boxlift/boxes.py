"""Oriented 3D boxes from cleaned point segments.

The ground plane is the evaluation frame's z = 0 plane (z up); segments
must be transformed out of the camera frame before inflation. Length is
always >= width and yaw points along the length, normalized to (-pi, pi].
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .clustering import medoid
from .errors import ConfigError, EmptySegmentError
from .geometry import PointCloud

# Collinear and single-point segments would otherwise produce zero-size boxes.
DEGENERATE_EXTENT_FLOOR = 0.2
_DEGENERATE_EPS = 1e-9


def normalize_yaw(yaw: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = (yaw + math.pi) % (2.0 * math.pi) - math.pi
    return math.pi if wrapped == -math.pi else wrapped


@dataclass
class Box3D:
    """Oriented box: ground-plane center, (length, width, height), yaw about +z."""

    center: np.ndarray
    size: np.ndarray
    yaw: float
    label: str
    score: float = 1.0
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))
    frame: str = "global"

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(3)
        self.size = np.asarray(self.size, dtype=float).reshape(3)
        self.velocity = np.asarray(self.velocity, dtype=float).reshape(2)
        if np.any(self.size <= 0):
            raise ValueError(f"box size must be positive, got {self.size}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")
        self.yaw = normalize_yaw(float(self.yaw))

    def ground_center(self) -> np.ndarray:
        return self.center[:2]

    def corners_2d(self) -> np.ndarray:
        """Ground-plane corners, counter-clockwise, shape (4, 2)."""
        half_l, half_w = self.size[0] / 2.0, self.size[1] / 2.0
        local = np.array([[half_l, half_w], [-half_l, half_w],
                          [-half_l, -half_w], [half_l, -half_w]])
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + self.center[:2]


@dataclass(frozen=True)
class ShapePrior:
    """Fixed per-class (length, width, height) used when point evidence is sparse."""

    label: str
    size: tuple[float, float, float]

    def __post_init__(self):
        if any(s <= 0 for s in self.size):
            raise ValueError("prior size components must be positive")


class InflationVariant(enum.Enum):
    MEDOID_PRIOR = "medoid_prior"
    CALIPERS_FULL = "calipers_full"
    MEDOID_CALIPERS = "medoid_calipers"


@dataclass(frozen=True)
class InflationStrategy:
    variant: InflationVariant
    shape_priors: dict[str, ShapePrior] | None = None


@dataclass
class Hull2D:
    """Convex polygon, counter-clockwise; 1- or 2-vertex hulls are degenerate."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        if v.shape[0] == 0:
            raise ValueError("hull needs at least one vertex")
        self.vertices = v


def convex_hull_2d(points: np.ndarray) -> Hull2D:
    """Monotone-chain convex hull, counter-clockwise, collinear points removed.

    Degenerate inputs collapse to a single vertex (all identical) or the two
    extreme points (all collinear). The chain itself runs on native floats;
    per-element numpy scalar arithmetic is several times slower.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] == 0:
        raise ValueError("convex hull of empty point set")
    uniq = np.unique(pts, axis=0)  # lexicographic sort by (x, y)
    if uniq.shape[0] == 1:
        return Hull2D(uniq)
    seq: list[tuple[float, float]] = [tuple(p) for p in uniq.tolist()]

    def half_chain(ordered):
        chain: list[tuple[float, float]] = []
        for px, py in ordered:
            while len(chain) >= 2:
                ox, oy = chain[-2]
                ax, ay = chain[-1]
                if (ax - ox) * (py - oy) - (ay - oy) * (px - ox) <= 0:
                    chain.pop()
                else:
                    break
            chain.append((px, py))
        return chain

    lower = half_chain(seq)
    upper = half_chain(reversed(seq))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 2:  # all points collinear: keep the two extremes
        hull = [seq[0], seq[-1]]
    return Hull2D(np.array(hull))


def min_area_rect(hull: Hull2D) -> tuple[np.ndarray, np.ndarray, float]:
    """Minimum-area enclosing rectangle via rotating calipers.

    Sweeps every hull-edge orientation (the optimum is edge-aligned for any
    convex polygon) and returns (center, (length, width), yaw) with
    length >= width; ties go to the lowest edge index. Zero extents of
    degenerate hulls are floored at DEGENERATE_EXTENT_FLOOR.
    """
    verts = hull.vertices
    if verts.shape[0] == 1:
        extent = np.array([DEGENERATE_EXTENT_FLOOR, DEGENERATE_EXTENT_FLOOR])
        return verts[0].copy(), extent, 0.0

    edges = np.roll(verts, -1, axis=0) - verts
    if verts.shape[0] == 2:
        edges = edges[:1]
    angles = np.arctan2(edges[:, 1], edges[:, 0])
    cos, sin = np.cos(angles), np.sin(angles)
    # Rotate all vertices into each edge-aligned frame at once: (n_edges, n_verts)
    u = np.outer(cos, verts[:, 0]) + np.outer(sin, verts[:, 1])
    v = -np.outer(sin, verts[:, 0]) + np.outer(cos, verts[:, 1])
    umin, umax = u.min(axis=1), u.max(axis=1)
    vmin, vmax = v.min(axis=1), v.max(axis=1)
    areas = (umax - umin) * (vmax - vmin)
    # The minimum can be attained by several orientations (e.g. two edges whose
    # rectangles both collapse onto the same triangle). Index order is not
    # stable under rotation of the input, so break ties by the longest side,
    # which is a property of the rectangle itself; only then by edge index.
    candidates = np.nonzero(areas <= areas.min() * (1.0 + 1e-9))[0]
    long_sides = np.maximum(umax - umin, vmax - vmin)[candidates]
    best = int(candidates[np.argmax(long_sides)])

    du, dv = umax[best] - umin[best], vmax[best] - vmin[best]
    cu, cv = (umax[best] + umin[best]) / 2.0, (vmax[best] + vmin[best]) / 2.0
    c, s = cos[best], sin[best]
    center = np.array([cu * c - cv * s, cu * s + cv * c])
    yaw = float(angles[best])
    if du < dv:
        du, dv = dv, du
        yaw += math.pi / 2.0
    if du < _DEGENERATE_EPS:
        du = DEGENERATE_EXTENT_FLOOR
    if dv < _DEGENERATE_EPS:
        dv = DEGENERATE_EXTENT_FLOOR
    # A rectangle is invariant under a half turn, so its yaw is only defined
    # modulo pi; canonicalize to (-pi/2, pi/2] so parallel edges of the hull
    # yield one representation.
    yaw = normalize_yaw(yaw)
    if yaw <= -math.pi / 2.0:
        yaw += math.pi
    elif yaw > math.pi / 2.0:
        yaw -= math.pi
    return center, np.array([du, dv]), yaw


def inflate(segment: PointCloud, strategy: InflationStrategy, label: str, score: float,
            heading_hint: float | None = None) -> Box3D:
    """Fit an oriented box to a segment under the chosen strategy.

    Height always comes from the segment's vertical extent except under the
    pure shape-prior strategy, which takes all three dimensions from the
    class prior. Velocity is zero: this is a single-frame pipeline.
    """
    if len(segment) == 0:
        raise EmptySegmentError("cannot inflate an empty segment")
    pos = segment.positions
    z_min, z_max = pos[:, 2].min(), pos[:, 2].max()
    z_mid = (z_min + z_max) / 2.0
    height = z_max - z_min
    if height < _DEGENERATE_EPS:
        height = DEGENERATE_EXTENT_FLOOR

    variant = strategy.variant
    if variant is InflationVariant.MEDOID_PRIOR:
        priors = strategy.shape_priors or {}
        if label not in priors:
            raise ConfigError(f"no shape prior for class {label!r}")
        m = medoid(segment)
        center = np.array([m[0], m[1], z_mid])
        size = np.asarray(priors[label].size, dtype=float)
        yaw = heading_hint if heading_hint is not None else 0.0
    else:
        hull = convex_hull_2d(pos[:, :2])
        rect_center, extent, yaw = min_area_rect(hull)
        size = np.array([extent[0], extent[1], height])
        if variant is InflationVariant.MEDOID_CALIPERS:
            m = medoid(segment)
            center = np.array([m[0], m[1], z_mid])
        else:
            center = np.array([rect_center[0], rect_center[1], z_mid])

    return Box3D(center=center, size=size, yaw=yaw, label=label, score=score,
                 velocity=np.zeros(2), frame=segment.frame)


def assign_label(det, box: Box3D) -> Box3D:
    """Carry a 2D detection's class label and confidence onto a box, geometry untouched."""
    return replace(box, label=det.label, score=det.score)
