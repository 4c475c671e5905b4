"""Dataset ingestion and on-disk formats.

Formats:
    LiDAR sweep: consecutive little-endian float32 records of
        (x, y, z, intensity, ring), 20 bytes per point.
    Depth map: 16-bit grayscale PNG in millimeters (0 = invalid), or a raw
        little-endian float32 file with a 16-byte header
        (magic ``BLDEPTHF``, uint32 width, uint32 height), meters.
    Instance masks: 16-bit grayscale PNG id maps (0 = background), or
        uncompressed column-major run-length encodings
        ``{"size": [h, w], "counts": [...]}`` starting with a background run.
    Calibration: JSON carrying the 3x3 intrinsic matrix, the camera pose in
        the ego frame, and the ego pose in the global frame, quaternions
        scalar-first (w, x, y, z).
    Predictions / ground truth: a JSON array of records
        {frame_id, label, score, center [x,y,z], size [l,w,h], yaw,
         velocity [vx,vy], attribute?} in the global frame.

All JSON emitted here is canonical (sorted keys, two-space indent) so that
write -> read -> write is byte-stable.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .boxes import Box3D, InflationStrategy, InflationVariant, ShapePrior
from .clustering import DbscanParams
from .errors import ConfigError, ParseError, SchemaError
from .evaluation import GtBox, MatchConfig, PredBox
from .fog import FogParams
from .geometry import CameraModel, PointCloud, Se3Pose, inverse
from .lifting import DEFAULT_PSEUDO_STRIDE, DepthMap, InstanceMask

logger = logging.getLogger(__name__)

LIDAR_RECORD_BYTES = 20
DEPTH_RAW_MAGIC = b"BLDEPTHF"


# ---------------------------------------------------------------------------
# Point clouds

def read_lidar_bin(path) -> PointCloud:
    """Parse a (x, y, z, intensity, ring) float32 sweep into a sensor-frame cloud."""
    raw = Path(path).read_bytes()
    if len(raw) % LIDAR_RECORD_BYTES != 0:
        raise ParseError(f"{path}: truncated sweep, {len(raw)} bytes is not a whole"
                         f" number of {LIDAR_RECORD_BYTES}-byte records",
                         offset=len(raw) - len(raw) % LIDAR_RECORD_BYTES)
    records = np.frombuffer(raw, dtype="<f4").reshape(-1, 5).astype(float)
    bad = np.nonzero(~np.isfinite(records).all(axis=1))[0]
    if bad.size:
        raise ParseError(f"{path}: non-finite value in record {bad[0]}",
                         offset=int(bad[0]) * LIDAR_RECORD_BYTES)
    return PointCloud(records[:, :3], frame="sensor",
                      intensity=records[:, 3], ring=records[:, 4])


def write_lidar_bin(path, cloud: PointCloud) -> None:
    n = len(cloud)
    records = np.zeros((n, 5), dtype="<f4")
    records[:, :3] = cloud.positions
    if cloud.intensity is not None:
        records[:, 3] = cloud.intensity
    if cloud.ring is not None:
        records[:, 4] = cloud.ring
    Path(path).write_bytes(records.tobytes())


# ---------------------------------------------------------------------------
# Images, depth maps, masks

def read_image(path) -> np.ndarray:
    img = Image.open(path).convert("RGB")
    return np.asarray(img, dtype=np.uint8)


def write_image(path, pixels: np.ndarray) -> None:
    Image.fromarray(np.asarray(pixels, dtype=np.uint8), mode="RGB").save(path, format="PNG")


def read_depth(path) -> DepthMap:
    """Load a depth map; PNG paths decode as millimeters, others as raw float32."""
    path = Path(path)
    if path.suffix.lower() == ".png":
        arr = np.asarray(Image.open(path))
        if arr.ndim != 2:
            raise ParseError(f"{path}: depth PNG must be single-channel")
        return DepthMap(arr.astype(float) / 1000.0)
    raw = path.read_bytes()
    if len(raw) < 16 or raw[:8] != DEPTH_RAW_MAGIC:
        raise ParseError(f"{path}: missing depth magic header", offset=0)
    width = int.from_bytes(raw[8:12], "little")
    height = int.from_bytes(raw[12:16], "little")
    expected = 16 + 4 * width * height
    if len(raw) != expected:
        raise ParseError(f"{path}: expected {expected} bytes for {width}x{height}, got {len(raw)}",
                         offset=min(len(raw), expected))
    data = np.frombuffer(raw, dtype="<f4", offset=16).reshape(height, width)
    return DepthMap(data.astype(float))


def write_depth_png(path, depth: DepthMap) -> None:
    mm = np.clip(np.floor(depth.depth * 1000.0 + 0.5), 0, 65535).astype(np.uint16)
    Image.fromarray(mm).save(path, format="PNG")


def write_depth_raw(path, depth: DepthMap) -> None:
    header = DEPTH_RAW_MAGIC + depth.width.to_bytes(4, "little") + depth.height.to_bytes(4, "little")
    Path(path).write_bytes(header + depth.depth.astype("<f4").tobytes())


def read_instance_map(path) -> np.ndarray:
    arr = np.asarray(Image.open(path))
    if arr.ndim != 2:
        raise ParseError(f"{path}: instance map PNG must be single-channel")
    return arr.astype(np.int64)


def write_instance_map(path, ids: np.ndarray) -> None:
    Image.fromarray(np.asarray(ids).astype(np.uint16)).save(path, format="PNG")


def rle_decode(obj: dict) -> np.ndarray:
    """Uncompressed column-major RLE to a boolean bitmap (background first)."""
    try:
        h, w = obj["size"]
        counts = obj["counts"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed RLE object: {exc}") from exc
    total = sum(counts)
    if total != h * w:
        raise SchemaError(f"RLE counts sum to {total}, expected {h * w}")
    flat = np.zeros(h * w, dtype=bool)
    pos, value = 0, False
    for run in counts:
        if run < 0:
            raise SchemaError("RLE run lengths must be non-negative")
        if value:
            flat[pos:pos + run] = True
        pos += run
        value = not value
    return flat.reshape(w, h).T  # column-major layout


def rle_encode(bitmap: np.ndarray) -> dict:
    bm = np.asarray(bitmap, dtype=bool)
    h, w = bm.shape
    flat = bm.T.reshape(-1)
    changes = np.nonzero(np.diff(flat))[0] + 1
    edges = np.concatenate(([0], changes, [flat.size]))
    counts = np.diff(edges).tolist()
    if flat.size and flat[0]:
        counts = [0] + counts
    return {"size": [h, w], "counts": counts}


def load_mask(root: Path, mask_ref: dict, instance_maps: dict) -> InstanceMask:
    """Resolve a detection's mask reference (instance-map PNG or inline RLE)."""
    if "rle" in mask_ref:
        return InstanceMask(rle_decode(mask_ref["rle"]))
    if "png" in mask_ref:
        rel = mask_ref["png"]
        if rel not in instance_maps:
            instance_maps[rel] = read_instance_map(root / rel)
        instance_id = int(mask_ref.get("instance_id", 1))
        return InstanceMask(instance_maps[rel] == instance_id, instance_id=instance_id)
    raise SchemaError(f"mask reference needs 'png' or 'rle', got keys {sorted(mask_ref)}")


# ---------------------------------------------------------------------------
# Calibration and frame manifests

def _read_pose(obj: dict, where: str) -> Se3Pose:
    try:
        q = np.asarray(obj["rotation"], dtype=float).reshape(4)
        t = np.asarray(obj["translation"], dtype=float).reshape(3)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: pose needs 'rotation' (w,x,y,z) and 'translation': {exc}") from exc
    norm = float(np.linalg.norm(q))
    if abs(norm - 1.0) > 1e-3:
        raise SchemaError(f"{where}: quaternion norm {norm:.6f} is not within 1e-3 of 1")
    return Se3Pose(q, t)


def parse_calibration(obj: dict, where: str = "calibration") -> tuple[CameraModel, Se3Pose]:
    """Build (CameraModel, ego_from_global) from a calibration document.

    The camera pose in the file maps camera to ego; the model stores its
    inverse so reference (ego) points transform into the camera frame.
    """
    try:
        cam_obj = obj["camera"]
        intrinsic = np.asarray(cam_obj["intrinsic"], dtype=float).reshape(3, 3)
        width = int(cam_obj["width"])
        height = int(cam_obj["height"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: missing or malformed camera fields: {exc}") from exc
    if cam_obj.get("distortion"):
        logger.warning("%s: distortion coefficients present but ignored (pinhole model only)", where)
    ego_from_cam = _read_pose(cam_obj, f"{where}.camera")
    global_from_ego = _read_pose(obj["ego_pose"], f"{where}.ego_pose") if "ego_pose" in obj \
        else Se3Pose.identity()
    try:
        cam = CameraModel(fx=float(intrinsic[0, 0]), fy=float(intrinsic[1, 1]),
                          cx=float(intrinsic[0, 2]), cy=float(intrinsic[1, 2]),
                          width=width, height=height,
                          sensor_from_reference=inverse(ego_from_cam))
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from exc
    return cam, inverse(global_from_ego)


def read_calibration(path) -> tuple[CameraModel, Se3Pose]:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    return parse_calibration(obj, where=str(path))


@dataclass
class InstanceDetection:
    """One 2D open-vocabulary detection to lift."""

    label: str
    score: float
    box2d: tuple[float, float, float, float]
    mask_ref: dict
    heading_hint: float | None = None

    def __post_init__(self):
        x1, y1, x2, y2 = self.box2d
        if not (x1 < x2 and y1 < y2):
            raise SchemaError(f"degenerate 2D box {self.box2d}")
        if not 0.0 <= self.score <= 1.0:
            raise SchemaError(f"detection score {self.score} outside [0, 1]")


@dataclass
class FrameBundle:
    """Everything needed to lift one camera frame."""

    frame_id: str
    camera_name: str
    camera: CameraModel
    ego_from_global: Se3Pose
    detections: list[InstanceDetection]
    image_path: Path | None = None
    depth_path: Path | None = None
    lidar_path: Path | None = None
    ego_from_lidar: Se3Pose = field(default_factory=Se3Pose)
    root: Path = Path(".")

    def __post_init__(self):
        if self.depth_path is None and self.lidar_path is None:
            raise SchemaError(f"frame {self.frame_id!r}: needs a lidar or a depth source")


def load_frame_bundle(path, root=None) -> FrameBundle:
    path = Path(path)
    root = Path(root) if root is not None else path.parent.parent
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    where = str(path)
    try:
        frame_id = str(obj["frame_id"])
        cam, ego_from_global = parse_calibration(obj, where)
        detections = []
        for k, d in enumerate(obj.get("detections", [])):
            box2d = tuple(float(v) for v in d["box2d"])
            if not (0 <= box2d[0] and 0 <= box2d[1]
                    and box2d[2] <= cam.width and box2d[3] <= cam.height):
                raise SchemaError(f"{where}: detection {k} box2d {box2d} outside image bounds")
            detections.append(InstanceDetection(
                label=str(d["label"]), score=float(d["score"]), box2d=box2d,
                mask_ref=d["mask"], heading_hint=d.get("heading_hint")))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"{where}: {exc}") from exc

    lidar = obj.get("lidar")
    return FrameBundle(
        frame_id=frame_id,
        camera_name=str(obj["camera"].get("name", "CAM")),
        camera=cam,
        ego_from_global=ego_from_global,
        detections=detections,
        image_path=root / obj["image"] if obj.get("image") else None,
        depth_path=root / obj["depth"] if obj.get("depth") else None,
        lidar_path=root / lidar["path"] if lidar else None,
        ego_from_lidar=_read_pose(lidar, f"{where}.lidar") if lidar else Se3Pose.identity(),
        root=root,
    )


def list_frames(root) -> list[Path]:
    frames_dir = Path(root) / "frames"
    if not frames_dir.is_dir():
        raise SchemaError(f"{root}: no frames/ directory")
    return sorted(frames_dir.glob("*.json"))


# ---------------------------------------------------------------------------
# Predictions / ground truth JSON

def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _box_record(frame_id: str, box: Box3D, attribute: str | None = None,
                num_pts: int | None = None) -> dict:
    rec = {
        "frame_id": frame_id,
        "label": box.label,
        "score": box.score,
        "center": [float(v) for v in box.center],
        "size": [float(v) for v in box.size],
        "yaw": float(box.yaw),
        "velocity": [float(v) for v in box.velocity],
    }
    if attribute is not None:
        rec["attribute"] = attribute
    if num_pts is not None:
        rec["num_pts"] = num_pts
    return rec


def write_boxes(path, boxes: list) -> None:
    """Serialize PredBox or GtBox records to the canonical JSON array."""
    records = []
    for b in boxes:
        records.append(_box_record(getattr(b, "frame_id", ""), b,
                                   attribute=getattr(b, "attribute", None),
                                   num_pts=getattr(b, "num_pts", None)))
    Path(path).write_text(canonical_json(records))


def _parse_box_fields(rec: dict, index: int, path) -> dict:
    try:
        return dict(
            frame_id=str(rec["frame_id"]),
            label=str(rec["label"]),
            score=float(rec.get("score", 1.0)),
            center=np.asarray(rec["center"], dtype=float),
            size=np.asarray(rec["size"], dtype=float),
            yaw=float(rec["yaw"]),
            velocity=np.asarray(rec.get("velocity", (0.0, 0.0)), dtype=float),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: record {index}: {exc}") from exc


def _load_records(path) -> list:
    with open(path) as fh:
        try:
            records = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(records, list):
        raise SchemaError(f"{path}: expected a JSON array of box records")
    return records


def read_predictions(path) -> list[PredBox]:
    boxes = []
    for i, rec in enumerate(_load_records(path)):
        fields = _parse_box_fields(rec, i, path)
        try:
            boxes.append(PredBox(**fields, attribute=rec.get("attribute")))
        except ValueError as exc:
            raise SchemaError(f"{path}: record {i}: {exc}") from exc
    return boxes


def read_gt(path) -> list[GtBox]:
    boxes = []
    for i, rec in enumerate(_load_records(path)):
        fields = _parse_box_fields(rec, i, path)
        try:
            boxes.append(GtBox(**fields, attribute=rec.get("attribute"),
                               num_pts=rec.get("num_pts")))
        except ValueError as exc:
            raise SchemaError(f"{path}: record {i}: {exc}") from exc
    return boxes


# ---------------------------------------------------------------------------
# Shape priors and pipeline configuration

def load_shape_priors(path) -> dict[str, ShapePrior]:
    """JSON mapping class label -> [length, width, height] meters."""
    with open(path) as fh:
        try:
            table = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(table, dict):
        raise ConfigError(f"{path}: expected an object mapping label to [l, w, h]")
    priors = {}
    for label, size in table.items():
        try:
            l, w, h = (float(v) for v in size)
            priors[label] = ShapePrior(label=label, size=(l, w, h))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: prior for {label!r}: {exc}") from exc
    return priors


@dataclass
class PipelineConfig:
    """Validated pipeline settings; see load_config for the document layout."""

    source: str = "lidar"
    strategy: InflationStrategy = field(
        default_factory=lambda: InflationStrategy(InflationVariant.CALIPERS_FULL))
    dbscan_enabled: bool = True
    dbscan_params: DbscanParams = field(default_factory=DbscanParams)
    dbscan_per_class: dict[str, DbscanParams] = field(default_factory=dict)
    stride: int = DEFAULT_PSEUDO_STRIDE
    fog_params: FogParams = field(default_factory=FogParams)
    match_config: MatchConfig = field(default_factory=MatchConfig)
    classes: list[str] | None = None
    shape_priors_path: str | None = None

    def dbscan_for(self, label: str) -> DbscanParams:
        return self.dbscan_per_class.get(label, self.dbscan_params)


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def parse_config(obj: dict, base_dir: Path = Path("."), where: str = "config") -> PipelineConfig:
    _reject_unknown(obj, {"source", "strategy", "shape_priors", "dbscan", "stride",
                          "fog", "eval", "classes"}, where)
    source = obj.get("source", "lidar")
    if source not in ("lidar", "depth"):
        raise ConfigError(f"{where}: source must be 'lidar' or 'depth', got {source!r}")

    try:
        variant = InflationVariant(obj.get("strategy", "calipers_full"))
    except ValueError:
        raise ConfigError(f"{where}: unknown strategy {obj.get('strategy')!r}; expected one of "
                          f"{[v.value for v in InflationVariant]}") from None
    priors_path = obj.get("shape_priors")
    priors = None
    if priors_path is not None:
        priors = load_shape_priors(base_dir / priors_path)
    if variant is InflationVariant.MEDOID_PRIOR and priors is None:
        raise ConfigError(f"{where}: strategy 'medoid_prior' requires 'shape_priors'")

    def parse_dbscan(d: dict, ctx: str) -> DbscanParams:
        _reject_unknown(d, {"eps", "min_pts"}, ctx)
        try:
            return DbscanParams(eps=float(d.get("eps", 0.75)), min_pts=int(d.get("min_pts", 5)))
        except ValueError as exc:
            raise ConfigError(f"{ctx}: {exc}") from exc

    dbscan_obj = dict(obj.get("dbscan", {}))
    _reject_unknown(dbscan_obj, {"enabled", "eps", "min_pts", "per_class"}, f"{where}.dbscan")
    per_class_obj = dbscan_obj.pop("per_class", {})
    enabled = bool(dbscan_obj.pop("enabled", True))
    params = parse_dbscan(dbscan_obj, f"{where}.dbscan")
    per_class = {label: parse_dbscan(d, f"{where}.dbscan.per_class.{label}")
                 for label, d in per_class_obj.items()}

    fog_obj = obj.get("fog", {})
    _reject_unknown(fog_obj, {"beta", "ambient"}, f"{where}.fog")
    try:
        fog_params = FogParams(beta=float(fog_obj.get("beta", FogParams.beta)),
                               ambient=tuple(fog_obj.get("ambient", (255.0, 255.0, 255.0))))
    except ValueError as exc:
        raise ConfigError(f"{where}.fog: {exc}") from exc

    eval_obj = obj.get("eval", {})
    _reject_unknown(eval_obj, {"dist_thresholds", "tp_threshold", "min_recall", "min_precision"},
                    f"{where}.eval")
    try:
        match_config = MatchConfig(
            dist_thresholds=tuple(float(t) for t in eval_obj.get("dist_thresholds", (0.5, 1.0, 2.0, 4.0))),
            tp_threshold=float(eval_obj.get("tp_threshold", 2.0)),
            min_recall=float(eval_obj.get("min_recall", 0.1)),
            min_precision=float(eval_obj.get("min_precision", 0.1)))
    except ValueError as exc:
        raise ConfigError(f"{where}.eval: {exc}") from exc

    stride = int(obj.get("stride", DEFAULT_PSEUDO_STRIDE))
    if stride < 1:
        raise ConfigError(f"{where}: stride must be >= 1")

    classes = obj.get("classes")
    if classes is not None and (not isinstance(classes, list)
                                or not all(isinstance(c, str) for c in classes)):
        raise ConfigError(f"{where}: classes must be a list of strings")

    return PipelineConfig(
        source=source,
        strategy=InflationStrategy(variant, shape_priors=priors),
        dbscan_enabled=enabled,
        dbscan_params=params,
        dbscan_per_class=per_class,
        stride=stride,
        fog_params=fog_params,
        match_config=match_config,
        classes=classes,
        shape_priors_path=priors_path,
    )


def load_config(path) -> PipelineConfig:
    path = Path(path)
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return parse_config(obj, base_dir=path.parent, where=str(path))
