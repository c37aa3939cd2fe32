"""Command-line entry points: analyze, serve, evaluate, calibrate.

Exit codes: 0 success, 2 bad usage/missing inputs/invalid configuration,
1 runtime I/O failure mid-run.
"""

from __future__ import annotations

import argparse
import contextlib
import importlib
import json
import sys
import time
from pathlib import Path

from .detection import NmsConfig, RecordedDetections
from .errors import (
    AlignmentError,
    ConfigurationError,
    DistmonError,
    PipelineIOError,
    RecordParseError,
    StoreError,
)
from .evaluation import evaluate_run
from .geometry import BIRDSEYE_SIDE, AnchorMode, CalibrationQuad, birdseye_homography
from .pipeline import (
    DetectionRecordsSource,
    ImageSequenceSource,
    PipelineConfig,
    run_pipeline,
)
from .service import ConfigHandle, serve_api
from .store import EventStore
from .violation import Space, ViolationConfig


def load_calibration_file(path: str | Path) -> tuple[CalibrationQuad, float | None]:
    """Read {"corners": [[x,y]x4], "side": ...} (side optional)."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"calibration file {path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or not set(obj) <= {"corners", "side"} or "corners" not in obj:
        raise ConfigurationError(
            f"calibration file {path} must hold 'corners' and optionally 'side'"
        )
    quad = CalibrationQuad.from_pairs(obj["corners"])
    side = obj.get("side")
    if side is not None and not (isinstance(side, (int, float)) and side > 0):
        raise ConfigurationError(f"calibration side must be positive, got {side!r}")
    return quad, float(side) if side is not None else None


def save_calibration_file(path: str | Path, quad: CalibrationQuad, side: float) -> None:
    Path(path).write_text(
        json.dumps({"corners": quad.as_pairs(), "side": side}) + "\n", encoding="utf-8"
    )


def _load_backend(spec: str):
    """Resolve 'package.module:attr' to a DetectorBackend (instance or factory)."""
    module_name, _, attr_name = spec.partition(":")
    if not module_name or not attr_name:
        raise ConfigurationError(f"backend must be 'module:attr', got {spec!r}")
    try:
        obj = getattr(importlib.import_module(module_name), attr_name)
    except (ImportError, AttributeError) as exc:
        raise ConfigurationError(f"cannot load backend {spec!r}: {exc}") from exc
    if isinstance(obj, type) or not hasattr(obj, "detect"):
        obj = obj()
    if not hasattr(obj, "detect"):
        raise ConfigurationError(f"backend {spec!r} does not provide detect()")
    return obj


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distmon", description="Social-distance violation monitoring"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="run the violation pipeline over a stream")
    analyze.add_argument("--detections", help="recorded-detections file (JSON lines)")
    analyze.add_argument("--frames", help="directory of numbered frame images")
    analyze.add_argument("--backend", help="detector backend as module:attr (with --frames)")
    analyze.add_argument("--threshold", type=float, default=50.0, help="violation distance, px")
    analyze.add_argument("--confidence", type=float, default=0.3, help="NMS confidence gate")
    analyze.add_argument("--iou", type=float, default=0.3, help="NMS overlap threshold")
    analyze.add_argument("--calibration", help="calibration file (corners + side)")
    analyze.add_argument("--space", choices=["image", "birdseye"], default=None)
    analyze.add_argument("--anchor", choices=["centroid", "bottom"], default="centroid")
    analyze.add_argument("--out", help="frame-report output file (JSON lines)")
    analyze.add_argument("--store", help="violation-event store file")
    analyze.add_argument("--annotate", help="directory for annotated frames (with --frames)")
    analyze.add_argument("--run-id", default=None, help="run identifier stored with events")
    analyze.add_argument(
        "--logical-clock",
        action="store_true",
        help="timestamp events by frame index for reproducible runs",
    )

    serve = sub.add_parser("serve", help="serve the risk-management HTTP API")
    serve.add_argument("--store", required=True, help="violation-event store file")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--assets", help="dashboard static assets directory")
    serve.add_argument("--reports", help="frame-report file backing /api/report/latest")

    evaluate = sub.add_parser("evaluate", help="score predictions against ground truth")
    evaluate.add_argument("--pred", required=True, help="prediction file (JSON lines)")
    evaluate.add_argument("--gt", required=True, help="ground-truth file (JSON lines)")
    evaluate.add_argument("--iou", type=float, default=0.5, help="matching IoU threshold")

    calibrate = sub.add_parser("calibrate", help="write a calibration file from 4 points")
    calibrate.add_argument(
        "--points", required=True, help='four corners as "x1,y1 x2,y2 x3,y3 x4,y4" (TL TR BR BL)'
    )
    calibrate.add_argument("--side", type=float, default=BIRDSEYE_SIDE)
    calibrate.add_argument("--out", required=True, help="calibration file to write")

    return parser


def _cmd_analyze(args: argparse.Namespace) -> int:
    if not args.detections and not args.frames:
        print("analyze: one of --detections or --frames is required", file=sys.stderr)
        return 2
    if args.threshold <= 0:
        print("analyze: threshold must be positive", file=sys.stderr)
        return 2
    for path in (args.detections, args.calibration):
        if path and not Path(path).exists():
            print(f"analyze: no such file: {path}", file=sys.stderr)
            return 2
    if args.frames and not Path(args.frames).is_dir():
        print(f"analyze: no such directory: {args.frames}", file=sys.stderr)
        return 2

    try:
        calibration = None
        side = BIRDSEYE_SIDE
        if args.calibration:
            calibration, file_side = load_calibration_file(args.calibration)
            if file_side is not None:
                side = file_side
        # Bird's-eye when calibrated, image plane otherwise; --space overrides.
        if args.space is not None:
            space = Space(args.space)
        else:
            space = Space.BIRDSEYE if calibration is not None else Space.IMAGE
        cfg = PipelineConfig(
            nms=NmsConfig(confidence_threshold=args.confidence, iou_threshold=args.iou),
            violation=ViolationConfig(
                threshold_t=args.threshold, space=space, anchor_mode=AnchorMode(args.anchor)
            ),
            calibration=calibration,
            birdseye_side=side,
        )

        if args.frames:
            if args.detections:
                backend = RecordedDetections(args.detections)
            elif args.backend:
                backend = _load_backend(args.backend)
            else:
                print(
                    "analyze: --frames needs detections (--detections) or a --backend",
                    file=sys.stderr,
                )
                return 2
            source = ImageSequenceSource(args.frames, backend)
        else:
            source = DetectionRecordsSource(args.detections)
    except (DistmonError, OSError) as exc:
        print(f"analyze: {exc}", file=sys.stderr)
        return 2

    clock = (lambda i: i) if args.logical_clock else None
    if args.run_id is not None:
        run_id = args.run_id
    else:
        run_id = "run" if args.logical_clock else f"run-{int(time.time() * 1000)}"

    try:
        with contextlib.ExitStack() as stack:
            report_sink = (
                stack.enter_context(open(args.out, "w", encoding="utf-8")) if args.out else None
            )
            event_store = stack.enter_context(EventStore(args.store)) if args.store else None
            summary = run_pipeline(
                source,
                cfg,
                report_sink=report_sink,
                event_store=event_store,
                run_id=run_id,
                clock=clock,
                annotate_dir=args.annotate,
            )
    except (PipelineIOError, StoreError, OSError) as exc:
        print(f"analyze: {exc}", file=sys.stderr)
        return 1
    except DistmonError as exc:
        print(f"analyze: {exc}", file=sys.stderr)
        return 2

    print(json.dumps(summary.as_record()))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    store_path = Path(args.store)
    try:
        store = EventStore(store_path)
    except (StoreError, OSError) as exc:
        print(f"serve: {exc}", file=sys.stderr)
        return 2
    serve_api(
        store,
        ConfigHandle(),
        assets_dir=args.assets,
        reports_path=args.reports,
        host=args.host,
        port=args.port,
    )
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    for path in (args.pred, args.gt):
        if not Path(path).exists():
            print(f"evaluate: no such file: {path}", file=sys.stderr)
            return 2
    try:
        report = evaluate_run(args.pred, args.gt, args.iou)
    except (RecordParseError, AlignmentError, DistmonError) as exc:
        print(f"evaluate: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(report.as_record()))
    return 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    try:
        pairs = []
        for token in args.points.split():
            x, y = token.split(",")
            pairs.append((float(x), float(y)))
        if len(pairs) != 4:
            raise ConfigurationError(f"exactly 4 corners required, got {len(pairs)}")
        quad = CalibrationQuad.from_pairs(pairs)
        homography = birdseye_homography(quad, args.side)  # reject degenerate picks
        save_calibration_file(args.out, quad, args.side)
    except ValueError:
        print(f'calibrate: cannot parse --points {args.points!r}', file=sys.stderr)
        return 2
    except DistmonError as exc:
        print(f"calibrate: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"calibrate: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({"calibration": args.out, "homography": [list(r) for r in homography.m]}))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "analyze": _cmd_analyze,
        "serve": _cmd_serve,
        "evaluate": _cmd_evaluate,
        "calibrate": _cmd_calibrate,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
