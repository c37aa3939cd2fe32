"""Pairwise proximity analysis and per-frame report assembly.

A pair of persons is a violation when their anchor distance d is strictly
below the threshold t; at exactly d = t the pair is safe. Persons in at
least one violation pair are classified red, all others green. Distances
are measured either in the image plane or, given a calibration homography,
in the bird's-eye plane; threshold and distances always share one space.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .detection import FrameDetections
from .errors import ConfigurationError, InvalidDetectionError
from .geometry import AnchorMode, Homography, Point2D, anchor_point, project_points

DEFAULT_THRESHOLD = 50.0  # minimum permitted anchor distance, pixels


class Space(str, Enum):
    """Plane in which pair distances (and the threshold) live."""

    IMAGE = "image"
    BIRDSEYE = "birdseye"


class Color(str, Enum):
    RED = "red"
    GREEN = "green"


@dataclass(frozen=True, slots=True)
class ViolationConfig:
    threshold_t: float = DEFAULT_THRESHOLD
    space: Space = Space.IMAGE
    anchor_mode: AnchorMode = AnchorMode.CENTROID

    def __post_init__(self):
        if not self.threshold_t > 0:
            raise ConfigurationError(f"threshold must be positive, got {self.threshold_t!r}")


@dataclass(frozen=True, slots=True)
class ViolationPair:
    """Person indices i < j whose distance fell below the threshold."""

    i: int
    j: int
    distance_d: float


@dataclass(frozen=True, slots=True)
class PersonStatus:
    """Classification of one person in the configured space."""

    index: int
    point: Point2D
    color_c: Color


@dataclass(frozen=True, slots=True)
class FrameReport:
    frame_index: int
    person_count: int
    statuses: tuple[PersonStatus, ...]
    violations: tuple[ViolationPair, ...]

    @property
    def violation_count(self) -> int:
        return len(self.violations)


def pairwise_distances(points: list[Point2D]) -> list[tuple[int, int, float]]:
    """Condensed (i, j, d) list over all index pairs i < j, in row-major order."""
    n = len(points)
    if n < 2:
        return []
    xs = np.array([p.x for p in points])
    ys = np.array([p.y for p in points])
    iu, ju = np.triu_indices(n, k=1)
    dx = xs[iu] - xs[ju]
    dy = ys[iu] - ys[ju]
    d = np.sqrt(dx * dx + dy * dy)
    return list(zip(iu.tolist(), ju.tolist(), d.tolist()))


def classify_violations(
    points: list[Point2D], cfg: ViolationConfig
) -> tuple[list[ViolationPair], list[PersonStatus]]:
    """All violating pairs (d strictly below threshold) plus a red/green status per person."""
    n = len(points)
    violations: list[ViolationPair] = []
    if n >= 2:
        # Same arithmetic as pairwise_distances, but only violating pairs
        # are materialized.
        xs = np.array([p.x for p in points])
        ys = np.array([p.y for p in points])
        iu, ju = np.triu_indices(n, k=1)
        dx = xs[iu] - xs[ju]
        dy = ys[iu] - ys[ju]
        d = np.sqrt(dx * dx + dy * dy)
        (hits,) = np.nonzero(d < cfg.threshold_t)
        violations = [
            ViolationPair(int(iu[k]), int(ju[k]), float(d[k])) for k in hits
        ]
    in_violation = set()
    for v in violations:
        in_violation.add(v.i)
        in_violation.add(v.j)
    statuses = [
        PersonStatus(k, p, Color.RED if k in in_violation else Color.GREEN)
        for k, p in enumerate(points)
    ]
    return violations, statuses


def frame_report(
    fd: FrameDetections, cfg: ViolationConfig, h: Homography | None = None
) -> FrameReport:
    """Analyze one frame of already person-filtered, NMS-filtered detections.

    A homography is required (and only used) when the configured space is
    the bird's-eye plane.
    """
    if cfg.space is Space.BIRDSEYE and h is None:
        raise ConfigurationError("bird's-eye space requires a calibration homography")

    anchors = [anchor_point(d.box, cfg.anchor_mode) for d in fd.detections]
    if cfg.space is Space.BIRDSEYE and anchors:
        xs = np.array([p.x for p in anchors])
        ys = np.array([p.y for p in anchors])
        px, py = project_points(h, xs, ys)
        anchors = [Point2D(float(x), float(y)) for x, y in zip(px, py)]

    violations, statuses = classify_violations(anchors, cfg)
    return FrameReport(
        frame_index=fd.frame_index,
        person_count=len(anchors),
        statuses=tuple(statuses),
        violations=tuple(violations),
    )


def report_record(report: FrameReport) -> dict:
    """FrameReport as a JSON-serializable record (see service module for the schema)."""
    return {
        "frame": report.frame_index,
        "person_count": report.person_count,
        "violation_count": report.violation_count,
        "statuses": [
            {"index": s.index, "x": s.point.x, "y": s.point.y, "color": s.color_c.value}
            for s in report.statuses
        ],
        "violations": [
            {"i": v.i, "j": v.j, "distance": v.distance_d} for v in report.violations
        ],
    }


def report_record_line(report: FrameReport) -> str:
    # Hand-rolled for the per-frame hot path; byte-identical to
    # json.dumps(report_record(report)) (pinned by a test).
    statuses = ", ".join(
        f'{{"index": {s.index}, "x": {s.point.x!r}, "y": {s.point.y!r}, '
        f'"color": "{s.color_c.value}"}}'
        for s in report.statuses
    )
    violations = ", ".join(
        f'{{"i": {v.i}, "j": {v.j}, "distance": {v.distance_d!r}}}' for v in report.violations
    )
    return (
        f'{{"frame": {report.frame_index}, "person_count": {report.person_count}, '
        f'"violation_count": {report.violation_count}, "statuses": [{statuses}], '
        f'"violations": [{violations}]}}'
    )


def report_from_record(obj: dict) -> FrameReport:
    """Inverse of report_record; raises on schema violations."""
    try:
        statuses = tuple(
            PersonStatus(s["index"], Point2D(float(s["x"]), float(s["y"])), Color(s["color"]))
            for s in obj["statuses"]
        )
        violations = tuple(
            ViolationPair(v["i"], v["j"], float(v["distance"])) for v in obj["violations"]
        )
        report = FrameReport(
            frame_index=obj["frame"],
            person_count=obj["person_count"],
            statuses=statuses,
            violations=violations,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidDetectionError(f"malformed frame report record: {exc}") from exc
    if obj.get("violation_count") != report.violation_count:
        raise InvalidDetectionError("violation_count does not match the violation list")
    if report.person_count != len(report.statuses):
        raise InvalidDetectionError("person_count does not match the status list")
    return report
