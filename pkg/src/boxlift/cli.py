"""Command-line entry points.

Subcommands: inflate, eval, fog, pseudo-depth, bev. Exit codes: 0 on
success, 1 on usage errors, 2 on data errors (unreadable or malformed
inputs).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import formats, pipeline
from .bev import emit_bev
from .errors import BoxliftError
from .evaluation import MatchConfig

USAGE_EXIT = 1
DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="boxlift",
                     description="Lift 2D detections into oriented 3D boxes and evaluate them.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-detection drops")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("inflate", help="lift a dataset's detections into 3D box predictions")
    p.add_argument("--config", required=True, help="pipeline config JSON")
    p.add_argument("--root", required=True, help="dataset root containing frames/")
    p.add_argument("--out", required=True, help="output predictions JSON")
    p.add_argument("--workers", type=int, default=1, help="frames processed in parallel")

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--pred", required=True, help="predictions JSON")
    p.add_argument("--gt", required=True, help="ground-truth JSON")
    p.add_argument("--classes", help="comma-separated class subset")
    p.add_argument("--out", help="write the metrics report JSON here")

    p = sub.add_parser("fog", help="write fog-augmented copies of a dataset's images")
    p.add_argument("--beta", type=float, required=True, help="fog density in 1/m")
    p.add_argument("--in", dest="in_dir", required=True, help="dataset root")
    p.add_argument("--out", required=True, help="output root")

    p = sub.add_parser("pseudo-depth", help="write pseudo-LiDAR clouds from depth maps")
    p.add_argument("--stride", type=int, default=4, help="pixel subsampling stride")
    p.add_argument("--in", dest="in_dir", required=True, help="dataset root")
    p.add_argument("--out", required=True, help="output root")

    p = sub.add_parser("bev", help="render a bird's-eye-view SVG for one frame")
    p.add_argument("--frame", required=True, help="frame id to plot")
    p.add_argument("--pred", required=True, help="predictions JSON")
    p.add_argument("--gt", help="ground-truth JSON")
    p.add_argument("--root", help="dataset root (recenters boxes on the frame's ego pose)")
    p.add_argument("--out", required=True, help="output SVG path")
    p.add_argument("--range", dest="meters_range", type=float, default=60.0,
                   help="half-extent of the plot in meters")
    p.add_argument("--px-per-meter", type=float, default=4.0)
    return parser


def _cmd_inflate(args) -> int:
    config = formats.load_config(args.config)
    predictions, drops = pipeline.run_inflate(config, args.root, workers=args.workers)
    formats.write_boxes(args.out, predictions)
    print(f"wrote {len(predictions)} predictions to {args.out}"
          f" ({len(drops)} detections dropped)")
    return 0


def _cmd_eval(args) -> int:
    classes = args.classes.split(",") if args.classes else None
    report = pipeline.run_eval(args.pred, args.gt, MatchConfig(), classes=classes)
    print(report.format_table())
    if args.out:
        Path(args.out).write_text(formats.canonical_json(report.to_dict()))
        print(f"wrote report to {args.out}")
    return 0


def _cmd_fog(args) -> int:
    written = pipeline.build_pseudo_dataset(args.in_dir, args.out, beta=args.beta,
                                            images=True, clouds=False)
    print(f"wrote {len(written)} fogged images under {args.out}")
    return 0


def _cmd_pseudo_depth(args) -> int:
    written = pipeline.build_pseudo_dataset(args.in_dir, args.out, stride=args.stride,
                                            images=False, clouds=True)
    print(f"wrote {len(written)} pseudo-LiDAR clouds under {args.out}")
    return 0


def _cmd_bev(args) -> int:
    preds = [b for b in formats.read_predictions(args.pred) if b.frame_id == args.frame]
    gts = []
    if args.gt:
        gts = [b for b in formats.read_gt(args.gt) if b.frame_id == args.frame]
    ego_from_global = None
    if args.root:
        frame_path = Path(args.root) / "frames" / f"{args.frame}.json"
        bundle = formats.load_frame_bundle(frame_path, args.root)
        ego_from_global = bundle.ego_from_global
    emit_bev(preds, gts, args.out, ego_from_global=ego_from_global,
             meters_range=args.meters_range, px_per_meter=args.px_per_meter)
    print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "inflate": _cmd_inflate,
    "eval": _cmd_eval,
    "fog": _cmd_fog,
    "pseudo-depth": _cmd_pseudo_depth,
    "bev": _cmd_bev,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (BoxliftError, OSError) as exc:
        print(f"boxlift {args.command}: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
