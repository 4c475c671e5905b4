"""nuScenes-protocol detection evaluation.

Matching is by 2D Euclidean distance of ground-plane box centers, greedy in
score order, averaged over the distance thresholds {0.5, 1, 2, 4} m. AP is
the official devkit definition: precision interpolated onto a 101-point
recall grid, bins below min_recall dropped, precision clipped below
min_precision, normalized by (1 - min_precision). True-positive error
metrics are accumulated at the 2 m threshold as cumulative means over TPs
in score order, mapped onto the recall grid through confidence, and
averaged over the achieved recall range.

Scale error compares pure sizes after aligning centers and yaw:
ASE = 1 - prod(min sizes) / prod(max sizes). Orientation error is the
absolute yaw difference on the full circle, in [0, pi]; the quarter-circle
exemption some benchmarks grant barrier-like classes is available via
``orient_periods`` but off by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boxes import Box3D

TP_METRICS = ("trans_err", "scale_err", "orient_err", "vel_err", "attr_err")
TP_METRIC_REPORT_NAMES = {"trans_err": "mATE", "scale_err": "mASE", "orient_err": "mAOE",
                          "vel_err": "mAVE", "attr_err": "mAAE"}
_N_RECALL_BINS = 101


@dataclass(frozen=True)
class MatchConfig:
    dist_thresholds: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)
    tp_threshold: float = 2.0
    min_recall: float = 0.1
    min_precision: float = 0.1

    def __post_init__(self):
        th = self.dist_thresholds
        if not th or any(t <= 0 for t in th) or list(th) != sorted(th):
            raise ValueError("dist_thresholds must be positive and ascending")
        if self.tp_threshold not in th:
            raise ValueError("tp_threshold must be one of dist_thresholds")


@dataclass
class PredBox(Box3D):
    """A predicted box plus the frame it belongs to."""

    frame_id: str = ""
    attribute: str | None = None


@dataclass
class GtBox(Box3D):
    """A ground-truth box plus annotation extras."""

    frame_id: str = ""
    attribute: str | None = None
    num_pts: int | None = None


@dataclass(frozen=True)
class DetectionMatch:
    """One prediction's matching outcome at a given threshold."""

    pred_index: int
    gt_index: int | None
    distance: float
    is_tp: bool


def ground_distance(a: Box3D, b: Box3D) -> float:
    return float(math.hypot(a.center[0] - b.center[0], a.center[1] - b.center[1]))


def match_greedy(preds: list, gts: list, class_name: str, threshold: float) -> list[DetectionMatch]:
    """Greedy matching in descending score order (score ties: lower index first).

    Each prediction of the class takes the nearest not-yet-matched
    ground-truth box of the same class in the same frame, provided their
    ground-plane centers are within the threshold. Returns one entry per
    prediction of the class, in the processing order.
    """
    pred_order = sorted((i for i, p in enumerate(preds) if p.label == class_name),
                        key=lambda i: (-preds[i].score, i))
    gt_by_frame: dict[str, list[int]] = {}
    for j, g in enumerate(gts):
        if g.label == class_name:
            gt_by_frame.setdefault(getattr(g, "frame_id", ""), []).append(j)
    taken: set[int] = set()
    matches = []
    for i in pred_order:
        pred = preds[i]
        best_j, best_d = None, math.inf
        for j in gt_by_frame.get(getattr(pred, "frame_id", ""), ()):
            if j in taken:
                continue
            d = ground_distance(pred, gts[j])
            if d < best_d:
                best_j, best_d = j, d
        if best_j is not None and best_d <= threshold:
            taken.add(best_j)
            matches.append(DetectionMatch(i, best_j, best_d, True))
        else:
            matches.append(DetectionMatch(i, None, best_d, False))
    return matches


def _interp_grid(rec: np.ndarray, values: np.ndarray) -> np.ndarray:
    grid = np.linspace(0.0, 1.0, _N_RECALL_BINS)
    return np.interp(grid, rec, values, right=0)


def average_precision(matches: list[DetectionMatch], num_gt: int,
                      min_recall: float = 0.1, min_precision: float = 0.1) -> float:
    """AP of one (class, threshold) evaluation; matches must be in score order."""
    if num_gt <= 0:
        raise ValueError("AP is undefined for a class with no ground truth")
    if not matches:
        return 0.0
    tp = np.cumsum([m.is_tp for m in matches]).astype(float)
    fp = np.cumsum([not m.is_tp for m in matches]).astype(float)
    prec = _interp_grid(tp / num_gt, tp / (tp + fp))
    clipped = prec[round(100 * min_recall) + 1:] - min_precision
    clipped[clipped < 0] = 0
    # Accumulation noise can land a few ulp above 1; the metric is bounded by 1.
    return min(1.0, float(np.mean(clipped)) / (1.0 - min_precision))


def scale_error(pred: Box3D, gt: Box3D) -> float:
    """1 - size IoU with centers and yaw aligned: prod of per-axis min/max ratios."""
    mins = np.minimum(pred.size, gt.size)
    maxs = np.maximum(pred.size, gt.size)
    return float(1.0 - np.prod(mins) / np.prod(maxs))


def orientation_error(pred: Box3D, gt: Box3D, period: float = 2.0 * math.pi) -> float:
    """Smallest absolute yaw difference under the given period; full circle gives [0, pi]."""
    diff = (pred.yaw - gt.yaw + period / 2.0) % period - period / 2.0
    return abs(float(diff))


def velocity_error(pred: Box3D, gt: Box3D) -> float:
    return float(np.linalg.norm(pred.velocity - gt.velocity))


def attribute_error(pred, gt) -> float:
    """1 - match indicator; NaN when the ground truth carries no attribute."""
    gt_attr = getattr(gt, "attribute", None)
    if not gt_attr:
        return math.nan
    return 0.0 if getattr(pred, "attribute", None) == gt_attr else 1.0


def _cummean(x: np.ndarray) -> np.ndarray:
    """Cumulative mean ignoring NaNs; all-NaN input yields ones."""
    if np.all(np.isnan(x)):
        return np.ones(len(x))
    sums = np.nancumsum(x.astype(float))
    counts = np.cumsum(~np.isnan(x))
    return np.divide(sums, counts, out=np.zeros_like(sums), where=counts != 0)


def tp_errors(preds: list, gts: list, matches: list[DetectionMatch], num_gt: int,
              min_recall: float = 0.1, orient_period: float = 2.0 * math.pi) -> dict[str, float]:
    """Recall-averaged TP error metrics for one class at the TP threshold.

    Per-TP errors are cumulative-meaned in score order, carried onto the
    101-point recall grid through confidence interpolation, and averaged
    between min_recall and the maximum achieved recall. A class with no TPs
    in that range contributes the metric's cap of 1.0.
    """
    if num_gt <= 0:
        raise ValueError("TP errors are undefined for a class with no ground truth")
    result = {}
    tp_matches = [m for m in matches if m.is_tp]
    if matches:
        tp = np.cumsum([m.is_tp for m in matches]).astype(float)
        rec = tp / num_gt
        conf_all = np.array([preds[m.pred_index].score for m in matches], dtype=float)
        conf_grid = _interp_grid(rec, conf_all)
        nonzero = np.nonzero(conf_grid)[0]
        max_recall_ind = int(nonzero[-1]) if nonzero.size else 0
    else:
        conf_grid = np.zeros(_N_RECALL_BINS)
        max_recall_ind = 0
    first_ind = round(100 * min_recall) + 1

    err_fns = {
        "trans_err": lambda p, g: ground_distance(p, g),
        "scale_err": scale_error,
        "orient_err": lambda p, g: orientation_error(p, g, orient_period),
        "vel_err": velocity_error,
        "attr_err": attribute_error,
    }
    tp_conf = np.array([preds[m.pred_index].score for m in tp_matches], dtype=float)
    for name, fn in err_fns.items():
        if max_recall_ind < first_ind or not tp_matches:
            result[name] = 1.0
            continue
        raw = np.array([fn(preds[m.pred_index], gts[m.gt_index]) for m in tp_matches], dtype=float)
        curve = _cummean(raw)
        # Map the TP-ordered curve onto the recall grid via confidence.
        grid = np.interp(conf_grid[::-1], tp_conf[::-1], curve[::-1])[::-1]
        result[name] = float(np.mean(grid[first_ind:max_recall_ind + 1]))
    return result


def mean_recall(recalls: dict[str, dict[float, float]]) -> float:
    """Average of per-class, per-threshold maximum achievable recall."""
    per_class = [np.mean(list(by_thr.values())) for by_thr in recalls.values()]
    return float(np.mean(per_class)) if per_class else 0.0


def nds(mean_ap: float, tp_error_means: dict[str, float]) -> float:
    """Detection score: weighted blend of mAP and the five TP error terms.

    NDS = (5 * mAP + sum over metrics of (1 - min(1, err))) / 10
    """
    total = 5.0 * mean_ap
    for name in TP_METRICS:
        total += 1.0 - min(1.0, tp_error_means[name])
    return total / 10.0


@dataclass
class MetricsReport:
    """Per-class and aggregate detection metrics."""

    classes: list[str]
    thresholds: tuple[float, ...]
    ap: dict[str, dict[float, float]]
    recalls: dict[str, dict[float, float]]
    class_tp_errors: dict[str, dict[str, float]]
    mean_ap: float
    mean_tp_errors: dict[str, float]
    mean_ar: float
    nds_score: float

    def to_dict(self) -> dict:
        return {
            "classes": self.classes,
            "dist_thresholds": list(self.thresholds),
            "per_class": {
                cls: {
                    "ap": {f"{thr:g}": self.ap[cls][thr] for thr in self.thresholds},
                    "recall": {f"{thr:g}": self.recalls[cls][thr] for thr in self.thresholds},
                    "tp_errors": {TP_METRIC_REPORT_NAMES[m]: self.class_tp_errors[cls][m]
                                  for m in TP_METRICS},
                }
                for cls in self.classes
            },
            "mAP": self.mean_ap,
            "mATE": self.mean_tp_errors["trans_err"],
            "mASE": self.mean_tp_errors["scale_err"],
            "mAOE": self.mean_tp_errors["orient_err"],
            "mAVE": self.mean_tp_errors["vel_err"],
            "mAAE": self.mean_tp_errors["attr_err"],
            "mAR": self.mean_ar,
            "NDS": self.nds_score,
        }

    def format_table(self) -> str:
        """Aligned plain-text table, one row per class plus the aggregate."""
        headers = ["class", "mAP", "mATE", "mASE", "mAOE", "mAVE", "mAAE", "mAR", "NDS"]
        rows = []
        for cls in self.classes:
            cls_ap = float(np.mean(list(self.ap[cls].values())))
            cls_ar = float(np.mean(list(self.recalls[cls].values())))
            errs = self.class_tp_errors[cls]
            rows.append([cls, f"{cls_ap:.4f}"] + [f"{errs[m]:.3f}" for m in TP_METRICS]
                        + [f"{cls_ar:.4f}", ""])
        rows.append(["(all)", f"{self.mean_ap:.4f}"]
                    + [f"{self.mean_tp_errors[m]:.3f}" for m in TP_METRICS]
                    + [f"{self.mean_ar:.4f}", f"{self.nds_score:.4f}"])
        widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(headers)]
        def fmt(row):
            return "  ".join(cell.ljust(w) if i == 0 else cell.rjust(w)
                             for i, (cell, w) in enumerate(zip(row, widths)))
        return "\n".join([fmt(headers), fmt(["-" * w for w in widths])] + [fmt(r) for r in rows])


def evaluate(preds: list, gts: list, config: MatchConfig = MatchConfig(),
             classes: list[str] | None = None,
             orient_periods: dict[str, float] | None = None) -> MetricsReport:
    """Full evaluation over a prediction and ground-truth set.

    ``classes`` restricts the evaluation (default: every class present in the
    ground truth). Classes without any ground truth are excluded from all
    means. ``orient_periods`` optionally overrides the yaw period per class.
    """
    if classes is None:
        classes = sorted({g.label for g in gts})
    evaluated = [c for c in classes if any(g.label == c for g in gts)]

    ap: dict[str, dict[float, float]] = {}
    recalls: dict[str, dict[float, float]] = {}
    class_tp: dict[str, dict[str, float]] = {}
    for cls in evaluated:
        num_gt = sum(1 for g in gts if g.label == cls)
        ap[cls] = {}
        recalls[cls] = {}
        for thr in config.dist_thresholds:
            matches = match_greedy(preds, gts, cls, thr)
            ap[cls][thr] = average_precision(matches, num_gt, config.min_recall, config.min_precision)
            recalls[cls][thr] = sum(m.is_tp for m in matches) / num_gt
            if thr == config.tp_threshold:
                period = (orient_periods or {}).get(cls, 2.0 * math.pi)
                class_tp[cls] = tp_errors(preds, gts, matches, num_gt,
                                          config.min_recall, orient_period=period)

    if evaluated:
        mean_ap = float(np.mean([ap[c][t] for c in evaluated for t in config.dist_thresholds]))
        mean_tp = {m: float(np.mean([class_tp[c][m] for c in evaluated])) for m in TP_METRICS}
        mar = mean_recall(recalls)
    else:
        mean_ap = 0.0
        mean_tp = {m: 1.0 for m in TP_METRICS}
        mar = 0.0
    return MetricsReport(
        classes=evaluated,
        thresholds=config.dist_thresholds,
        ap=ap,
        recalls=recalls,
        class_tp_errors=class_tp,
        mean_ap=mean_ap,
        mean_tp_errors=mean_tp,
        mean_ar=mar,
        nds_score=nds(mean_ap, mean_tp),
    )
