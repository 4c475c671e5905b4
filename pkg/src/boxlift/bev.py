"""Bird's-eye-view SVG rendering of predicted and ground-truth boxes.

Predictions draw blue, ground truth green, the ego vehicle sits at the
origin with forward (+x) pointing up. Output bytes are deterministic for a
fixed input: coordinates are formatted to fixed precision and elements are
emitted in input order.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .boxes import Box3D
from .geometry import Se3Pose

PRED_COLOR = "#1f77b4"
GT_COLOR = "#2ca02c"


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _box_outline(box: Box3D, pose: Se3Pose | None) -> tuple[np.ndarray, np.ndarray]:
    """Ground-plane corners and the front-edge midpoint, in the plot frame."""
    corners2 = box.corners_2d()
    if pose is not None:
        pts = np.column_stack([corners2, np.full(4, box.center[2])])
        corners2 = pose.apply(pts)[:, :2]
    front_mid = (corners2[0] + corners2[3]) / 2.0
    return corners2, front_mid


def emit_bev(predictions: list, gts: list, out_path,
             ego_from_global: Se3Pose | None = None,
             meters_range: float = 60.0, px_per_meter: float = 4.0) -> None:
    """Write a top-down SVG of boxes within +-meters_range of the origin.

    ``ego_from_global`` re-centers global-frame boxes on the ego vehicle;
    omit it when boxes are already expressed about the origin.
    """
    size = 2.0 * meters_range * px_per_meter
    half = size / 2.0

    def to_svg(pt) -> tuple[float, float]:
        return half - pt[1] * px_per_meter, half - pt[0] * px_per_meter

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:g}" height="{size:g}" '
        f'viewBox="0 0 {size:g} {size:g}">',
        f'<rect width="{size:g}" height="{size:g}" fill="white"/>',
        f'<line x1="0" y1="{_fmt(half)}" x2="{size:g}" y2="{_fmt(half)}" '
        'stroke="#dddddd" stroke-width="1"/>',
        f'<line x1="{_fmt(half)}" y1="0" x2="{_fmt(half)}" y2="{size:g}" '
        'stroke="#dddddd" stroke-width="1"/>',
        f'<circle cx="{_fmt(half)}" cy="{_fmt(half)}" r="3" fill="#444444"/>',
    ]

    def add_boxes(boxes, color):
        for box in boxes:
            corners, front_mid = _box_outline(box, ego_from_global)
            svg_pts = [to_svg(c) for c in corners]
            points = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in svg_pts)
            lines.append(f'<polygon points="{points}" fill="none" stroke="{color}" '
                         'stroke-width="1.5"/>')
            center = corners.mean(axis=0)
            cx, cy = to_svg(center)
            fx, fy = to_svg(front_mid)
            lines.append(f'<line x1="{_fmt(cx)}" y1="{_fmt(cy)}" x2="{_fmt(fx)}" y2="{_fmt(fy)}" '
                         f'stroke="{color}" stroke-width="1.5"/>')

    add_boxes(gts, GT_COLOR)
    add_boxes(predictions, PRED_COLOR)
    lines.append("</svg>")
    Path(out_path).write_text("\n".join(lines) + "\n")
