"""Shared fixtures and random-instance generators."""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable

from distmon.detection import BoundingBox, Detection, FrameDetections
from distmon.geometry import CalibrationQuad, Point2D


def random_quad(rng: random.Random, scale: float = 300.0) -> CalibrationQuad:
    """A well-conditioned random quad: a jittered axis-aligned square."""
    while True:
        s = scale * rng.uniform(0.5, 1.5)
        ox, oy = rng.uniform(-200, 200), rng.uniform(-200, 200)
        base = [(ox, oy), (ox + s, oy), (ox + s, oy + s), (ox, oy + s)]
        jitter = 0.25 * s
        pts = [
            (x + rng.uniform(-jitter, jitter), y + rng.uniform(-jitter, jitter))
            for x, y in base
        ]
        try:
            return CalibrationQuad.from_pairs(pts)
        except Exception:
            continue


def random_box(rng: random.Random, extent: float = 400.0, max_side: float = 120.0) -> BoundingBox:
    x1 = rng.uniform(0, extent)
    y1 = rng.uniform(0, extent)
    return BoundingBox(x1, y1, x1 + rng.uniform(1.0, max_side), y1 + rng.uniform(1.0, max_side))


def random_detections(
    rng: random.Random, n: int, n_classes: int = 4, tie_prob: float = 0.2
) -> list[Detection]:
    dets = []
    for _ in range(n):
        if dets and rng.random() < tie_prob:
            conf = rng.choice(dets).confidence  # exercise tie-breaking
        else:
            conf = rng.random()
        dets.append(Detection(random_box(rng), rng.randrange(n_classes), conf))
    return dets


def random_points(rng: random.Random, n: int, extent: float = 1000.0) -> list[Point2D]:
    return [Point2D(rng.uniform(0, extent), rng.uniform(0, extent)) for _ in range(n)]


def interior_point(rng: random.Random, quad: CalibrationQuad) -> Point2D:
    """Convex combination of the corners with strictly positive weights."""
    weights = [rng.uniform(0.05, 1.0) for _ in range(4)]
    total = sum(weights)
    x = sum(w * p.x for w, p in zip(weights, quad.corners)) / total
    y = sum(w * p.y for w, p in zip(weights, quad.corners)) / total
    return Point2D(x, y)


def write_detections_file(path: Path, frames: list[FrameDetections]) -> Path:
    lines = []
    for fd in frames:
        lines.append(
            json.dumps(
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
        )
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return path


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xD157)
