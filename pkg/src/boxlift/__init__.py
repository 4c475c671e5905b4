"""boxlift: training-free lifting of 2D detections into oriented 3D boxes.

The toolkit takes 2D open-vocabulary detections (boxes plus instance
masks, supplied as files), associates them with 3D points from LiDAR or
monocular pseudo-depth, suppresses projection noise with DBSCAN, fits
minimum-area oriented boxes with rotating calipers, and scores the result
with the nuScenes detection protocol. A depth-aware fog model augments
images for adverse-weather experiments.
"""

from .boxes import (Box3D, Hull2D, InflationStrategy, InflationVariant, ShapePrior,
                    assign_label, convex_hull_2d, inflate, min_area_rect, normalize_yaw)
from .clustering import ClusterLabeling, DbscanParams, dbscan, densest_cluster, medoid
from .errors import (AllNoiseError, BoxliftError, ConfigError, EmptySegmentError,
                     InvalidDepthError, ParseError, SchemaError)
from .evaluation import (DetectionMatch, GtBox, MatchConfig, MetricsReport, PredBox,
                         average_precision, evaluate, match_greedy, mean_recall, nds, tp_errors)
from .fog import FogParams, apply_fog, transmittance
from .geometry import (MIN_CAMERA_DEPTH, CameraModel, PixelPointMap, PointCloud, Se3Pose,
                       backproject_pixel, compose, inverse, project_cloud, transform_cloud)
from .lifting import (DepthMap, InstanceMask, LiftedSegment, depth_to_pseudocloud,
                      lift_mask_depth, lift_mask_lidar)

__version__ = "0.1.0"

__all__ = [
    "AllNoiseError", "Box3D", "BoxliftError", "CameraModel", "ClusterLabeling",
    "ConfigError", "DbscanParams", "DepthMap", "DetectionMatch", "EmptySegmentError",
    "FogParams", "GtBox", "Hull2D", "InflationStrategy", "InflationVariant",
    "InstanceMask", "InvalidDepthError", "LiftedSegment", "MIN_CAMERA_DEPTH",
    "MatchConfig", "MetricsReport", "ParseError", "PixelPointMap", "PointCloud",
    "PredBox", "SchemaError", "Se3Pose", "ShapePrior", "apply_fog", "assign_label",
    "average_precision", "backproject_pixel", "compose", "convex_hull_2d", "dbscan",
    "densest_cluster", "depth_to_pseudocloud", "evaluate", "inflate", "inverse",
    "lift_mask_depth", "lift_mask_lidar", "match_greedy", "mean_recall", "medoid",
    "min_area_rect", "nds", "normalize_yaw", "project_cloud", "tp_errors",
    "transform_cloud", "transmittance",
]
