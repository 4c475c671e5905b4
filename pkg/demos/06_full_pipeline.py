"""The whole pipeline on a synthetic dataset written to disk.

Builds a one-frame dataset (LiDAR sweep, instance mask, calibration,
ground truth), lifts its detections into 3D boxes with and without noise
filtering, scores both against the ground truth, and renders a BEV plot.

Everything lands under demos/output/pipeline/.
"""

import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from boxlift import CameraModel, PointCloud, Se3Pose, inverse, project_cloud, transform_cloud
from boxlift.bev import emit_bev
from boxlift.formats import (PipelineConfig, canonical_json, read_gt, write_boxes,
                             write_instance_map, write_lidar_bin)
from boxlift.geometry import quat_from_matrix
from boxlift.pipeline import run_eval, run_inflate

OUT = Path(__file__).parent / "output" / "pipeline"
for sub in ("frames", "lidar", "masks"):
    (OUT / sub).mkdir(parents=True, exist_ok=True)

rng = np.random.default_rng(123)

# --- plant two boxes in the ego frame, plus uniform street clutter ----------
BOXES = [
    {"center": (13.0, -2.5, 0.8), "size": (4.5, 2.0, 1.6), "yaw": 0.25},
    {"center": (21.0, 3.0, 0.9), "size": (4.1, 1.8, 1.5), "yaw": -0.5},
]


def sample_box(spec, n=350):
    length, width, height = spec["size"]
    pts = rng.uniform(-0.5, 0.5, size=(n, 3)) * [length, width, height]
    corners = np.array([[sx * length / 2, sy * width / 2, sz * height / 2]
                        for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
    c, s = math.cos(spec["yaw"]), math.sin(spec["yaw"])
    rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    return np.vstack([pts, corners]) @ rot.T + spec["center"]


clusters = [sample_box(b) for b in BOXES]
clutter = np.column_stack([rng.uniform(5, 35, 250), rng.uniform(-12, 12, 250),
                           rng.uniform(-0.5, 2.5, 250)])
sweep = PointCloud(np.vstack(clusters + [clutter]), frame="sensor")
write_lidar_bin(OUT / "lidar" / "frame0.bin", sweep)

# --- camera on the ego, looking forward -------------------------------------
R_EGO_FROM_CAM = np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])
cam = CameraModel(fx=800.0, fy=800.0, cx=800.0, cy=450.0, width=1600, height=900,
                  sensor_from_reference=inverse(Se3Pose(quat_from_matrix(R_EGO_FROM_CAM))))

instance_map = np.zeros((900, 1600), dtype=np.uint16)
detections = []
for i, pts in enumerate(clusters):
    pm = project_cloud(cam, transform_cloud(cam.sensor_from_reference,
                                            PointCloud(pts), frame="camera"))
    u0, v0 = np.floor(pm.pixel_uv.min(axis=0)).astype(int)
    u1, v1 = np.floor(pm.pixel_uv.max(axis=0)).astype(int)
    instance_map[v0:v1 + 1, u0:u1 + 1] = i + 1
    detections.append({"label": "car", "score": 0.9 - 0.1 * i,
                       "box2d": [float(u0), float(v0), float(u1 + 1), float(v1 + 1)],
                       "mask": {"png": "masks/frame0.png", "instance_id": i + 1}})
write_instance_map(OUT / "masks" / "frame0.png", instance_map)

identity = {"rotation": [1.0, 0.0, 0.0, 0.0], "translation": [0.0, 0.0, 0.0]}
manifest = {
    "frame_id": "frame0",
    "camera": {"name": "CAM_FRONT", "width": 1600, "height": 900,
               "intrinsic": [[800.0, 0.0, 800.0], [0.0, 800.0, 450.0], [0.0, 0.0, 1.0]],
               "rotation": [float(v) for v in quat_from_matrix(R_EGO_FROM_CAM)],
               "translation": [0.0, 0.0, 0.0]},
    "ego_pose": identity,
    "lidar": {"path": "lidar/frame0.bin", **identity},
    "detections": detections,
}
(OUT / "frames" / "frame0.json").write_text(json.dumps(manifest, indent=2) + "\n")

gt_records = [{"frame_id": "frame0", "label": "car", "center": list(b["center"]),
               "size": list(b["size"]), "yaw": b["yaw"], "velocity": [0.0, 0.0]}
              for b in BOXES]
(OUT / "gt.json").write_text(canonical_json(gt_records))

# --- run the pipeline both ways ---------------------------------------------
for label, config in [("with DBSCAN", PipelineConfig()),
                      ("without DBSCAN", dataclasses.replace(PipelineConfig(),
                                                             dbscan_enabled=False))]:
    preds, drops = run_inflate(config, OUT)
    tag = "on" if config.dbscan_enabled else "off"
    pred_path = OUT / f"predictions_{tag}.json"
    write_boxes(pred_path, preds)
    report = run_eval(pred_path, OUT / "gt.json")
    print(f"== {label} ==")
    for p in preds:
        print(f"  {p.label} s={p.score:.2f} center {np.round(p.center, 2)}"
              f" size {np.round(p.size, 2)} yaw {p.yaw:+.3f}")
    print(f"  mAP {report.mean_ap:.4f}  NDS {report.nds_score:.4f}\n")

preds, _ = run_inflate(PipelineConfig(), OUT)
emit_bev(preds, read_gt(OUT / "gt.json"), OUT / "bev.svg", meters_range=40.0)
print(f"BEV plot written to {OUT / 'bev.svg'} (green = ground truth, blue = predictions)")
