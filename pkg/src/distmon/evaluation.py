"""Detection-quality metrics: greedy IoU matching, AP, precision/recall, F1.

Matching is greedy in confidence order with one-to-one ground-truth
assignment; AP uses all-point interpolation (area under the precision
envelope over recall) aggregated at dataset level, so one PR curve covers
all frames.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

from .detection import BoundingBox, Detection, PERSON_CLASS_ID, iou, load_recorded_detections
from .errors import AlignmentError, UndefinedMetricError
from .pipeline import measure_fps


@dataclass(frozen=True, slots=True)
class GroundTruthFrame:
    frame_index: int
    boxes: tuple[tuple[BoundingBox, int], ...]


@dataclass(frozen=True, slots=True)
class MatchResult:
    """Per-prediction TP/FP flags ordered by descending confidence, plus missed ground truths."""

    flags: tuple[bool, ...]  # True = TP
    confidences: tuple[float, ...]  # aligned with flags
    fn_count: int

    @property
    def tp_count(self) -> int:
        return sum(self.flags)

    @property
    def gt_count(self) -> int:
        return self.tp_count + self.fn_count


@dataclass(frozen=True, slots=True)
class MetricReport:
    ap: float
    precision: float
    recall: float
    f1: float
    fps: float

    def as_record(self) -> dict:
        return {
            "ap": self.ap,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "fps": round(self.fps, 2),
        }


def match_detections(
    preds: list[Detection], gts: GroundTruthFrame, iou_threshold: float = 0.5
) -> MatchResult:
    """Greedily match single-class predictions against one frame's ground truths.

    Predictions are visited by descending confidence (ties keep input
    order); each matches the unmatched ground truth of highest IoU when
    that IoU reaches the threshold, and every ground truth matches at most
    once.
    """
    order = sorted(range(len(preds)), key=lambda k: -preds[k].confidence)
    matched = [False] * len(gts.boxes)
    flags = []
    confidences = []
    for k in order:
        pred = preds[k]
        best_iou = 0.0
        best_g = -1
        for g, (gt_box, _class_id) in enumerate(gts.boxes):
            if matched[g]:
                continue
            overlap = iou(pred.box, gt_box)
            if overlap > best_iou:
                best_iou = overlap
                best_g = g
        if best_g >= 0 and best_iou >= iou_threshold:
            matched[best_g] = True
            flags.append(True)
        else:
            flags.append(False)
        confidences.append(pred.confidence)
    return MatchResult(tuple(flags), tuple(confidences), fn_count=matched.count(False))


def average_precision(match_results: list[MatchResult]) -> float:
    """All-point interpolated AP over the pooled predictions of a dataset."""
    total_gt = sum(m.gt_count for m in match_results)
    if total_gt == 0:
        raise UndefinedMetricError("AP is undefined without ground truths")
    pooled: list[tuple[float, bool]] = []
    for m in match_results:
        pooled.extend(zip(m.confidences, m.flags))
    if not pooled:
        return 0.0
    pooled.sort(key=lambda cf: -cf[0])  # stable: equal confidences keep frame order

    tp = 0
    tp_counts = []
    precisions = []
    for rank, (_conf, is_tp) in enumerate(pooled, start=1):
        tp += is_tp
        tp_counts.append(tp)
        precisions.append(tp / rank)

    # Area under the precision envelope (max precision at recall >= r),
    # swept from the right. Recall increments are carried as integer TP
    # counts and divided out once, so perfect runs come out exactly 1.
    weighted = 0.0
    best = 0.0
    prev_tp = None
    for t, p in zip(reversed(tp_counts), reversed(precisions)):
        if prev_tp is not None and t < prev_tp:
            weighted += (prev_tp - t) * best
        best = max(best, p)
        prev_tp = t
    weighted += prev_tp * best
    return weighted / total_gt


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def load_ground_truth(path: str | Path) -> list[GroundTruthFrame]:
    """Ground-truth frames from the detection-record format (confidence ignored)."""
    return [
        GroundTruthFrame(
            fd.frame_index, tuple((d.box, d.class_id) for d in fd.detections)
        )
        for fd in load_recorded_detections(path, require_confidence=False)
    ]


def evaluate_run(
    pred_path: str | Path,
    gt_path: str | Path,
    iou_threshold: float = 0.5,
    class_id: int = PERSON_CLASS_ID,
) -> MetricReport:
    """Match every frame of a prediction file against a ground-truth file.

    Both files must carry the same frame-index sequence; matches are
    aggregated across frames before the AP computation.
    """
    started = time.perf_counter()
    preds = list(load_recorded_detections(pred_path))
    gts = load_ground_truth(gt_path)
    pred_frames = [fd.frame_index for fd in preds]
    gt_frames = [g.frame_index for g in gts]
    if pred_frames != gt_frames:
        raise AlignmentError(
            f"prediction frames {pred_frames[:10]}... do not align with "
            f"ground-truth frames {gt_frames[:10]}..."
        )

    results = []
    for fd, gt in zip(preds, gts):
        frame_preds = [d for d in fd.detections if d.class_id == class_id]
        frame_gt = GroundTruthFrame(
            gt.frame_index, tuple(b for b in gt.boxes if b[1] == class_id)
        )
        results.append(match_detections(frame_preds, frame_gt, iou_threshold))

    ap = average_precision(results)
    tp = sum(m.tp_count for m in results)
    n_preds = sum(len(m.flags) for m in results)
    total_gt = sum(m.gt_count for m in results)
    precision = tp / n_preds if n_preds else 0.0
    recall = tp / total_gt
    wall = time.perf_counter() - started
    return MetricReport(
        ap=ap,
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
        fps=measure_fps(len(preds), wall) if wall > 0 else 0.0,
    )
