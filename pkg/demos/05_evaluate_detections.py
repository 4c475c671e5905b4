"""Score a toy set of 3D detections with the nuScenes-style protocol.

Two frames, two classes, a mix of good hits, a duplicate, and a miss; the
report shows per-class AP across distance thresholds, the TP error metrics,
and the blended detection score.
"""

from boxlift import GtBox, MatchConfig, PredBox, evaluate


def gt(frame, label, x, y, yaw=0.0, size=(4.3, 1.9, 1.6), attribute=None):
    return GtBox(center=[x, y, 1.0], size=size, yaw=yaw, label=label,
                 frame_id=frame, attribute=attribute)


def pred(frame, label, x, y, score, yaw=0.0, size=(4.3, 1.9, 1.6)):
    return PredBox(center=[x, y, 1.0], size=size, yaw=yaw, label=label,
                   score=score, frame_id=frame)


gts = [
    gt("t0", "car", 10.0, 2.0, attribute="vehicle.parked"),
    gt("t0", "car", 24.0, -5.0, yaw=0.8, attribute="vehicle.moving"),
    gt("t1", "car", 15.0, 0.0, attribute="vehicle.parked"),
    gt("t0", "pedestrian", 6.0, 4.0, size=(0.6, 0.6, 1.8)),
    gt("t1", "pedestrian", 8.0, -1.0, size=(0.6, 0.6, 1.8)),  # missed below
]

preds = [
    pred("t0", "car", 10.3, 2.1, 0.95),                       # close hit
    pred("t0", "car", 24.9, -5.2, 0.80, yaw=0.4),             # 0.9 m off, yaw off
    pred("t0", "car", 10.6, 2.4, 0.70),                       # duplicate of the first GT
    pred("t1", "car", 18.5, 0.0, 0.60),                       # 3.5 m off: only the 4 m threshold
    pred("t0", "pedestrian", 6.1, 4.0, 0.90, size=(0.6, 0.6, 1.8)),
]

report = evaluate(preds, gts, MatchConfig())
print(report.format_table())

print("\nper-threshold AP for cars:")
for thr, ap in report.ap["car"].items():
    print(f"  {thr:3.1f} m: {ap:.4f}")

print(f"\nmAP {report.mean_ap:.4f}, mAR {report.mean_ar:.4f}, NDS {report.nds_score:.4f}")
print("the duplicate counts as a false positive; the missed pedestrian caps recall")
