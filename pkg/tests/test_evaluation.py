import json

import pytest

from distmon.detection import BoundingBox, Detection, FrameDetections
from distmon.errors import AlignmentError, RecordParseError, UndefinedMetricError
from distmon.evaluation import (
    GroundTruthFrame,
    MatchResult,
    average_precision,
    evaluate_run,
    f1_score,
    load_ground_truth,
    match_detections,
)

import oracles
from conftest import random_box, write_detections_file


def det(x1, y1, x2, y2, confidence=0.9, class_id=0) -> Detection:
    return Detection(BoundingBox(x1, y1, x2, y2), class_id, confidence)


def gt_frame(index, *boxes) -> GroundTruthFrame:
    return GroundTruthFrame(index, tuple((b, 0) for b in boxes))


class TestMatchDetections:
    def test_exact_hit(self):
        gt = gt_frame(0, BoundingBox(0, 0, 10, 10))
        result = match_detections([det(0, 0, 10, 10)], gt)
        assert result.flags == (True,)
        assert result.fn_count == 0

    def test_no_ground_truth(self):
        result = match_detections([det(0, 0, 10, 10)], gt_frame(0))
        assert result.flags == (False,)
        assert result.fn_count == 0

    def test_double_detection_second_is_fp(self):
        gt = gt_frame(0, BoundingBox(0, 0, 10, 10))
        preds = [det(0, 0, 10, 10, confidence=0.6), det(0, 1, 10, 11, confidence=0.8)]
        result = match_detections(preds, gt, iou_threshold=0.5)
        # higher-confidence pred (index 1) claims the gt, the other is FP
        assert result.flags == (True, False)
        assert result.confidences == (0.8, 0.6)
        assert result.fn_count == 0

    def test_iou_threshold_boundary_matches(self):
        # IoU exactly 0.5 counts as a match (>= threshold)
        gt = gt_frame(0, BoundingBox(0, 0, 10, 10))
        pred = det(0, 0, 10, 5)  # IoU = 50/100
        result = match_detections([pred], gt, iou_threshold=0.5)
        assert result.flags == (True,)

    def test_unmatched_gts_counted_fn(self):
        gt = gt_frame(0, BoundingBox(0, 0, 10, 10), BoundingBox(50, 50, 60, 60))
        result = match_detections([det(0, 0, 10, 10)], gt)
        assert result.fn_count == 1
        assert result.tp_count == 1
        assert result.gt_count == 2


class TestAveragePrecision:
    def test_perfect_detector(self):
        result = MatchResult((True, True, True), (0.9, 0.8, 0.7), fn_count=0)
        assert average_precision([result]) == 1.0

    def test_fp_then_tp_fixture(self):
        # PR points (r=0, p=0), (r=1, p=0.5) -> AP = 0.5
        result = MatchResult((False, True), (0.9, 0.8), fn_count=0)
        assert average_precision([result]) == 0.5

    def test_no_predictions(self):
        assert average_precision([MatchResult((), (), fn_count=3)]) == 0.0

    def test_zero_ground_truths_undefined(self):
        with pytest.raises(UndefinedMetricError):
            average_precision([MatchResult((False,), (0.9,), fn_count=0)])

    def test_matches_enumeration_oracle_on_random_datasets(self, rng):
        for _ in range(200):
            n_preds = rng.randrange(0, 21)
            flags = tuple(rng.random() < 0.5 for _ in range(n_preds))
            confidences = tuple(round(rng.random(), 2) for _ in range(n_preds))
            tp = sum(flags)
            fn = rng.randrange(0, 11)
            if tp + fn == 0:
                fn = 1
            result = MatchResult(flags, confidences, fn_count=fn)
            got = average_precision([result])
            want = oracles.average_precision(list(zip(confidences, flags)), tp + fn)
            assert abs(got - want) < 1e-9
            assert 0.0 <= got <= 1.0

    def test_rank_only_dependence(self, rng):
        flags = tuple(rng.random() < 0.5 for _ in range(15)) + (True,)
        confs = tuple(sorted((rng.random() for _ in flags), reverse=True))
        base = MatchResult(flags, confs, fn_count=2)
        # strictly monotone transform preserves the ranking
        squashed = MatchResult(flags, tuple(c**3 for c in confs), fn_count=2)
        assert average_precision([base]) == average_precision([squashed])

    def test_removing_fps_never_decreases_ap(self, rng):
        flags = [True, False, True, False, False, True]
        confs = [0.9, 0.85, 0.8, 0.7, 0.6, 0.5]
        full = MatchResult(tuple(flags), tuple(confs), fn_count=1)
        pruned = MatchResult(
            tuple(f for f in flags if f),
            tuple(c for f, c in zip(flags, confs) if f),
            fn_count=1,
        )
        assert average_precision([pruned]) >= average_precision([full])

    def test_pools_across_frames(self):
        r1 = MatchResult((True,), (0.9,), fn_count=0)
        r2 = MatchResult((False, True), (0.95, 0.5), fn_count=1)
        got = average_precision([r1, r2])
        want = oracles.average_precision([(0.9, True), (0.95, False), (0.5, True)], 3)
        assert abs(got - want) < 1e-12


class TestF1Score:
    def test_perfect(self):
        assert f1_score(1.0, 1.0) == 1.0

    def test_symmetric_half(self):
        assert f1_score(0.5, 0.5) == 0.5

    def test_zero_recall(self):
        assert f1_score(1.0, 0.0) == 0.0

    def test_both_zero(self):
        assert f1_score(0.0, 0.0) == 0.0

    def test_symmetry_and_bound(self, rng):
        for _ in range(200):
            p, r = rng.random(), rng.random()
            assert f1_score(p, r) == f1_score(r, p)
            assert f1_score(p, r) <= min(2 * p, 2 * r) + 1e-12


class TestEvaluateRun:
    def _write(self, path, frames):
        return write_detections_file(path, frames)

    def test_identical_files_are_perfect(self, rng, tmp_path):
        frames = [
            FrameDetections(
                i, tuple(det(*(b.x1, b.y1, b.x2, b.y2), confidence=1.0) for b in (random_box(rng) for _ in range(3)))
            )
            for i in range(5)
        ]
        pred = self._write(tmp_path / "pred.jsonl", frames)
        gt = self._write(tmp_path / "gt.jsonl", frames)
        report = evaluate_run(pred, gt)
        assert report.ap == 1.0
        assert report.precision == 1.0
        assert report.recall == 1.0
        assert report.f1 == 1.0

    def test_empty_predictions(self, rng, tmp_path):
        gt_frames = [FrameDetections(i, (det(0, 0, 10, 10, confidence=1.0),)) for i in range(3)]
        pred_frames = [FrameDetections(i, ()) for i in range(3)]
        pred = self._write(tmp_path / "pred.jsonl", pred_frames)
        gt = self._write(tmp_path / "gt.jsonl", gt_frames)
        report = evaluate_run(pred, gt)
        assert report.ap == 0.0
        assert report.recall == 0.0

    def test_seeded_fixture_matches_oracle(self, rng, tmp_path):
        pred_frames = []
        gt_frames = []
        samples = []
        total_gt = 0
        for i in range(10):
            preds = []
            gts = []
            for _ in range(rng.randrange(0, 5)):
                box = random_box(rng)
                conf = round(rng.uniform(0.05, 1.0), 3)
                if rng.random() < 0.6:
                    gts.append(box)  # matching gt: same box, IoU 1
                    samples.append((conf, True))
                else:
                    samples.append((conf, False))
                preds.append(det(box.x1, box.y1, box.x2, box.y2, confidence=conf))
            for _ in range(rng.randrange(0, 2)):  # extra missed gts, far away
                x = 5000 + rng.uniform(0, 100)
                gts.append(BoundingBox(x, x, x + 10, x + 10))
            total_gt += len(gts)
            pred_frames.append(FrameDetections(i, tuple(preds)))
            gt_frames.append(FrameDetections(i, tuple(det(b.x1, b.y1, b.x2, b.y2) for b in gts)))
        if total_gt == 0:
            gt_frames[0] = FrameDetections(0, (det(0, 0, 1, 1),))
            total_gt = 1
        pred = self._write(tmp_path / "pred.jsonl", pred_frames)
        gt = self._write(tmp_path / "gt.jsonl", gt_frames)
        report = evaluate_run(pred, gt, iou_threshold=0.5)
        want = oracles.average_precision(samples, total_gt)
        assert abs(report.ap - want) < 1e-9

    def test_frame_mismatch(self, tmp_path):
        pred = self._write(tmp_path / "pred.jsonl", [FrameDetections(0, ())])
        gt = self._write(tmp_path / "gt.jsonl", [FrameDetections(1, ())])
        with pytest.raises(AlignmentError):
            evaluate_run(pred, gt)

    def test_no_ground_truth_at_all(self, tmp_path):
        pred = self._write(tmp_path / "pred.jsonl", [FrameDetections(0, ())])
        gt = self._write(tmp_path / "gt.jsonl", [FrameDetections(0, ())])
        with pytest.raises(UndefinedMetricError):
            evaluate_run(pred, gt)


class TestLoadGroundTruth:
    def test_confidence_optional(self, tmp_path):
        path = tmp_path / "gt.jsonl"
        path.write_text(
            json.dumps(
                {"frame": 0, "detections": [{"x1": 0, "y1": 0, "x2": 5, "y2": 5, "class_id": 0}]}
            )
            + "\n"
        )
        frames = load_ground_truth(path)
        assert len(frames) == 1
        assert frames[0].boxes == ((BoundingBox(0, 0, 5, 5), 0),)

    def test_confidence_ignored_when_present(self, tmp_path):
        path = tmp_path / "gt.jsonl"
        path.write_text(
            json.dumps(
                {
                    "frame": 0,
                    "detections": [
                        {"x1": 0, "y1": 0, "x2": 5, "y2": 5, "class_id": 0, "confidence": 0.4}
                    ],
                }
            )
            + "\n"
        )
        assert load_ground_truth(path)[0].boxes == ((BoundingBox(0, 0, 5, 5), 0),)

    def test_unknown_field_still_rejected(self, tmp_path):
        path = tmp_path / "gt.jsonl"
        path.write_text(
            json.dumps(
                {"frame": 0, "detections": [{"x1": 0, "y1": 0, "x2": 5, "y2": 5, "class_id": 0, "bad": 1}]}
            )
            + "\n"
        )
        with pytest.raises(RecordParseError):
            load_ground_truth(path)
