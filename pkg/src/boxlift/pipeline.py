"""End-to-end orchestration: lift detections over a dataset, evaluate, augment.

Per-detection geometric failures (a mask that captures no points, a segment
that is all noise) drop that detection and log why; file and schema
failures abort. Frames are processed in sorted order and detections in
manifest order, so outputs are deterministic for a fixed configuration.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from . import formats
from .boxes import inflate
from .clustering import dbscan, densest_cluster
from .errors import AllNoiseError, EmptySegmentError, SchemaError
from .evaluation import MatchConfig, MetricsReport, PredBox, evaluate
from .fog import FogParams, apply_fog
from .formats import FrameBundle, InstanceDetection, PipelineConfig
from .geometry import compose, inverse, project_cloud, transform_cloud
from .lifting import LiftedSegment, depth_to_pseudocloud, lift_mask_depth, lift_mask_lidar

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DroppedDetection:
    frame_id: str
    detection_index: int
    label: str
    reason: str


class _FrameLifter:
    """Holds one frame's projection state and lifts its detections."""

    def __init__(self, bundle: FrameBundle, config: PipelineConfig):
        self.bundle = bundle
        self.config = config
        self.mask_cache: dict = {}
        if config.source == "lidar":
            if bundle.lidar_path is None:
                raise SchemaError(f"frame {bundle.frame_id!r}: config wants lidar but none present")
            sweep = formats.read_lidar_bin(bundle.lidar_path)
            camera_from_lidar = compose(bundle.camera.sensor_from_reference, bundle.ego_from_lidar)
            self.cam_cloud = transform_cloud(camera_from_lidar, sweep, frame="camera")
            self.pixel_map = project_cloud(bundle.camera, self.cam_cloud)
            self.depth = None
        else:
            if bundle.depth_path is None:
                raise SchemaError(f"frame {bundle.frame_id!r}: config wants depth but none present")
            self.depth = formats.read_depth(bundle.depth_path)

    def lift(self, index: int, det: InstanceDetection) -> LiftedSegment:
        bundle = self.bundle
        mask = formats.load_mask(bundle.root, det.mask_ref, self.mask_cache)
        if (mask.height, mask.width) != (bundle.camera.height, bundle.camera.width):
            raise SchemaError(f"frame {bundle.frame_id!r}: detection {index} mask is "
                              f"{mask.width}x{mask.height}, camera is "
                              f"{bundle.camera.width}x{bundle.camera.height}")
        ref = f"{bundle.frame_id}/{index}"
        if self.config.source == "lidar":
            return lift_mask_lidar(mask, self.pixel_map, self.cam_cloud, detection_ref=ref)
        return lift_mask_depth(mask, self.depth, bundle.camera,
                               stride=self.config.stride, detection_ref=ref)


def _process_frame(frame_path: Path, root: Path, config: PipelineConfig):
    bundle = formats.load_frame_bundle(frame_path, root)
    lifter = _FrameLifter(bundle, config)
    camera_to_global = compose(inverse(bundle.ego_from_global),
                               inverse(bundle.camera.sensor_from_reference))
    predictions: list[PredBox] = []
    drops: list[DroppedDetection] = []
    for k, det in enumerate(bundle.detections):
        try:
            segment = lifter.lift(k, det)
            cloud = transform_cloud(camera_to_global, segment.points, frame="global")
            if config.dbscan_enabled:
                labeling = dbscan(cloud, config.dbscan_for(det.label))
                cloud = densest_cluster(cloud, labeling)
            box = inflate(cloud, config.strategy, det.label, det.score,
                          heading_hint=det.heading_hint)
        except (EmptySegmentError, AllNoiseError) as exc:
            logger.info("frame %s: dropping detection %d (%s): %s",
                        bundle.frame_id, k, det.label, exc)
            drops.append(DroppedDetection(bundle.frame_id, k, det.label, str(exc)))
            continue
        predictions.append(PredBox(center=box.center, size=box.size, yaw=box.yaw,
                                   label=box.label, score=box.score,
                                   velocity=box.velocity, frame="global",
                                   frame_id=bundle.frame_id))
    return predictions, drops


def run_inflate(config: PipelineConfig, root,
                workers: int = 1) -> tuple[list[PredBox], list[DroppedDetection]]:
    """Lift every detection in every frame under ``root`` into global-frame boxes.

    Frames share no state, so ``workers > 1`` fans them out to a thread
    pool; results are reassembled in frame order, keeping output identical
    to a sequential run.
    """
    root = Path(root)
    frame_paths = formats.list_frames(root)
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_frame = list(pool.map(lambda p: _process_frame(p, root, config), frame_paths))
    else:
        per_frame = [_process_frame(p, root, config) for p in frame_paths]
    predictions: list[PredBox] = []
    drops: list[DroppedDetection] = []
    for preds, dropped in per_frame:
        predictions.extend(preds)
        drops.extend(dropped)
    return predictions, drops


def run_eval(pred_path, gt_path, match_config: MatchConfig | None = None,
             classes: list[str] | None = None) -> MetricsReport:
    """Evaluate a predictions file against a ground-truth file."""
    preds = formats.read_predictions(pred_path)
    gts = formats.read_gt(gt_path)
    return evaluate(preds, gts, match_config or MatchConfig(), classes=classes)


def build_pseudo_dataset(root, out_root, beta: float | None = None, stride: int | None = None,
                         config: PipelineConfig | None = None,
                         images: bool = True, clouds: bool = True) -> list[Path]:
    """Write fogged images and pseudo-LiDAR clouds mirroring the input layout.

    Frames without a depth map are skipped with a log entry. Re-running
    overwrites the same files with identical bytes.
    """
    config = config or PipelineConfig()
    fog_params = config.fog_params if beta is None else \
        FogParams(beta=beta, ambient=config.fog_params.ambient)
    stride = config.stride if stride is None else stride
    root = Path(root)
    out_root = Path(out_root)
    written: list[Path] = []
    for frame_path in formats.list_frames(root):
        bundle = formats.load_frame_bundle(frame_path, root)
        if bundle.depth_path is None or not bundle.depth_path.exists():
            logger.info("frame %s: no depth map, skipped", bundle.frame_id)
            continue
        depth = formats.read_depth(bundle.depth_path)
        if images and bundle.image_path is not None:
            img = formats.read_image(bundle.image_path)
            fogged = apply_fog(img, depth, fog_params)
            out_img = out_root / bundle.image_path.relative_to(root)
            out_img.parent.mkdir(parents=True, exist_ok=True)
            formats.write_image(out_img, fogged)
            written.append(out_img)
        if clouds:
            cloud = depth_to_pseudocloud(depth, bundle.camera, stride=stride)
            out_cloud = (out_root / bundle.depth_path.relative_to(root)).with_suffix(".bin")
            out_cloud.parent.mkdir(parents=True, exist_ok=True)
            formats.write_lidar_bin(out_cloud, cloud)
            written.append(out_cloud)
    return written
