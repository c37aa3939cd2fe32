"""Detection data model, IoU, confidence filtering, and non-maximum suppression.

The neural detector itself lives behind the DetectorBackend protocol; the
reference implementation replays recorded detections from a line-delimited
JSON file (one frame per line):

    {"frame": 0, "detections": [{"x1": 1.0, "y1": 2.0, "x2": 3.0, "y2": 4.0,
                                 "class_id": 0, "confidence": 0.9}, ...]}

Unknown fields are rejected, frame indices must be strictly ascending.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Iterator, Protocol, runtime_checkable

import numpy as np

from .errors import (
    InvalidDetectionError,
    InvalidGeometryError,
    RecordParseError,
    StreamOrderError,
)

if TYPE_CHECKING:
    from PIL.Image import Image

PERSON_CLASS_ID = 0  # COCO index for the person class


@dataclass(frozen=True, slots=True)
class BoundingBox:
    """Axis-aligned box in pixel coordinates, corners (x1,y1) top-left, (x2,y2) bottom-right."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise InvalidGeometryError(
                f"degenerate box: need x1 < x2 and y1 < y2, got "
                f"({self.x1}, {self.y1}, {self.x2}, {self.y2})"
            )

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)


@dataclass(frozen=True, slots=True)
class Detection:
    """One detected object: box, class id, and confidence in [0, 1]."""

    box: BoundingBox
    class_id: int
    confidence: float

    def __post_init__(self):
        if not isinstance(self.class_id, int) or isinstance(self.class_id, bool) or self.class_id < 0:
            raise InvalidDetectionError(f"class_id must be an integer >= 0, got {self.class_id!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidDetectionError(f"confidence must be in [0, 1], got {self.confidence!r}")


@dataclass(frozen=True, slots=True)
class FrameDetections:
    """All detections of one frame."""

    frame_index: int
    detections: tuple[Detection, ...]

    def __post_init__(self):
        if not isinstance(self.frame_index, int) or isinstance(self.frame_index, bool) or self.frame_index < 0:
            raise InvalidDetectionError(f"frame_index must be an integer >= 0, got {self.frame_index!r}")


@runtime_checkable
class DetectorBackend(Protocol):
    """Pluggable detector: produces per-frame detections for an image.

    Implementations must be deterministic when replaying recorded data.
    """

    def detect(self, frame_index: int, image: "Image") -> FrameDetections: ...


@dataclass(frozen=True, slots=True)
class NmsConfig:
    """Confidence gate and overlap threshold for non-maximum suppression."""

    confidence_threshold: float = 0.3
    iou_threshold: float = 0.3

    def __post_init__(self):
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise InvalidDetectionError(
                f"confidence_threshold must be in [0, 1], got {self.confidence_threshold!r}"
            )
        if not 0.0 <= self.iou_threshold <= 1.0:
            raise InvalidDetectionError(f"iou_threshold must be in [0, 1], got {self.iou_threshold!r}")


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two valid boxes; 0 when disjoint."""
    inter_w = min(a.x2, b.x2) - max(a.x1, b.x1)
    inter_h = min(a.y2, b.y2) - max(a.y1, b.y1)
    if inter_w <= 0.0 or inter_h <= 0.0:
        return 0.0
    inter = inter_w * inter_h
    union = a.area + b.area - inter
    return inter / union


def non_max_suppression(dets: Iterable[Detection], cfg: NmsConfig) -> list[Detection]:
    """Greedy per-class NMS.

    Detections below the confidence threshold are dropped, then the
    highest-confidence remaining detection is kept and all same-class
    detections overlapping it with IoU strictly above the threshold are
    suppressed. Equal confidences break ties by original position. The
    result is in keep order, i.e. sorted by confidence descending.
    """
    cand = [d for d in dets if d.confidence >= cfg.confidence_threshold]
    n = len(cand)
    if n <= 1:
        return cand

    x1 = np.array([d.box.x1 for d in cand])
    y1 = np.array([d.box.y1 for d in cand])
    x2 = np.array([d.box.x2 for d in cand])
    y2 = np.array([d.box.y2 for d in cand])
    cls = np.array([d.class_id for d in cand])
    area = (x2 - x1) * (y2 - y1)

    # Precompute, per pair, whether keeping one suppresses the other.
    inter_w = np.minimum.outer(x2, x2) - np.maximum.outer(x1, x1)
    inter_h = np.minimum.outer(y2, y2) - np.maximum.outer(y1, y1)
    inter = np.where((inter_w > 0.0) & (inter_h > 0.0), inter_w * inter_h, 0.0)
    overlap = inter / (np.add.outer(area, area) - inter)
    suppresses = (cls[:, None] == cls[None, :]) & (overlap > cfg.iou_threshold)

    # Stable sort so that equal confidences keep input order.
    order = sorted(range(n), key=lambda i: -cand[i].confidence)
    suppressed = np.zeros(n, dtype=bool)
    keep: list[Detection] = []
    for i in order:
        if suppressed[i]:
            continue
        keep.append(cand[i])
        suppressed |= suppresses[i]
    return keep


def filter_persons(fd: FrameDetections, person_class_id: int = PERSON_CLASS_ID) -> FrameDetections:
    """Keep only person-class detections, preserving order."""
    kept = tuple(d for d in fd.detections if d.class_id == person_class_id)
    return FrameDetections(fd.frame_index, kept)


_DETECTION_KEYS = frozenset(("x1", "y1", "x2", "y2", "class_id", "confidence"))
_FRAME_KEYS = frozenset(("frame", "detections"))


def _parse_detection(obj: object, line_number: int, require_confidence: bool) -> Detection:
    if not isinstance(obj, dict):
        raise RecordParseError("detection entry is not an object", line_number)
    keys = set(obj)
    if require_confidence:
        if keys != _DETECTION_KEYS:
            raise RecordParseError(
                f"detection fields must be exactly {sorted(_DETECTION_KEYS)}, got {sorted(keys)}",
                line_number,
            )
        confidence = obj["confidence"]
    else:
        # Ground-truth records: confidence is optional and ignored.
        if not keys <= _DETECTION_KEYS or not (_DETECTION_KEYS - {"confidence"}) <= keys:
            raise RecordParseError(
                f"detection fields must be {sorted(_DETECTION_KEYS - {'confidence'})} "
                f"(confidence optional), got {sorted(keys)}",
                line_number,
            )
        confidence = 1.0
    try:
        return Detection(
            box=BoundingBox(float(obj["x1"]), float(obj["y1"]), float(obj["x2"]), float(obj["y2"])),
            class_id=obj["class_id"],
            confidence=float(confidence),
        )
    except (InvalidGeometryError, InvalidDetectionError, TypeError, ValueError) as exc:
        raise RecordParseError(str(exc), line_number) from exc


def parse_frame_record(line: str, line_number: int, *, require_confidence: bool = True) -> FrameDetections:
    """Parse one detection-record line, validating every invariant."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordParseError(f"invalid JSON: {exc}", line_number) from exc
    if not isinstance(obj, dict) or set(obj) != _FRAME_KEYS:
        raise RecordParseError(
            f"frame record fields must be exactly {sorted(_FRAME_KEYS)}", line_number
        )
    dets = obj["detections"]
    if not isinstance(dets, list):
        raise RecordParseError("'detections' must be a list", line_number)
    frame = obj["frame"]
    try:
        return FrameDetections(
            frame_index=frame,
            detections=tuple(_parse_detection(d, line_number, require_confidence) for d in dets),
        )
    except InvalidDetectionError as exc:
        raise RecordParseError(str(exc), line_number) from exc


def frame_record_line(fd: FrameDetections) -> str:
    """Serialize a frame's detections to one record line (no newline)."""
    return json.dumps(
        {
            "frame": fd.frame_index,
            "detections": [
                {
                    "x1": d.box.x1,
                    "y1": d.box.y1,
                    "x2": d.box.x2,
                    "y2": d.box.y2,
                    "class_id": d.class_id,
                    "confidence": d.confidence,
                }
                for d in fd.detections
            ],
        }
    )


def load_recorded_detections(
    path: str | Path, *, require_confidence: bool = True
) -> Iterator[FrameDetections]:
    """Yield frames from a detection-record file in ascending frame order.

    Raises RecordParseError (with line number) on malformed records and
    StreamOrderError when frame indices are not strictly ascending.
    """
    last_frame = -1
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fd = parse_frame_record(line, line_number, require_confidence=require_confidence)
            if fd.frame_index <= last_frame:
                raise StreamOrderError(
                    f"frame {fd.frame_index} after frame {last_frame}: "
                    "frame indices must be strictly ascending",
                    line_number,
                )
            last_frame = fd.frame_index
            yield fd


class RecordedDetections:
    """DetectorBackend over a recorded-detections file, keyed by frame index."""

    def __init__(self, path: str | Path):
        self._frames = {fd.frame_index: fd for fd in load_recorded_detections(path)}

    def detect(self, frame_index: int, image: "Image" = None) -> FrameDetections:
        fd = self._frames.get(frame_index)
        if fd is None:
            return FrameDetections(frame_index, ())
        return fd
