"""Planar geometry kernels.

Centroid/anchor extraction, center-box re-parameterization, Euclidean
distance, exact four-point homography estimation, and projection onto the
bird's-eye plane (a square of 448 px per side by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .detection import BoundingBox
from .errors import DegenerateCalibrationError, InvalidGeometryError, PointAtInfinityError

BIRDSEYE_SIDE = 448.0  # default side length of the bird's-eye square, in pixels

_DEPTH_EPS = 1e-12  # |projective depth| at or below this is treated as infinity
_DET_EPS = 1e-12  # |det H| at or below this is a degenerate homography


class AnchorMode(str, Enum):
    """Which point of a bounding box stands in for the person."""

    CENTROID = "centroid"
    BOTTOM_CENTER = "bottom"


@dataclass(frozen=True, slots=True)
class Point2D:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidGeometryError(f"point coordinates must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True, slots=True)
class CenterBox:
    """Box given as center plus extent, the t(x, y, w, h) parameterization."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise InvalidGeometryError(f"center box needs w > 0 and h > 0, got w={self.w}, h={self.h}")


@dataclass(frozen=True, slots=True)
class CalibrationQuad:
    """Four ground-region corners in fixed order: top-left, top-right, bottom-right, bottom-left."""

    corners: tuple[Point2D, Point2D, Point2D, Point2D]

    def __post_init__(self):
        if len(self.corners) != 4:
            raise DegenerateCalibrationError("exactly 4 corners required")
        pts = [(p.x, p.y) for p in self.corners]
        if len(set(pts)) != 4:
            raise DegenerateCalibrationError(f"corners must be pairwise distinct, got {pts}")
        # Reject any collinear corner triple; tolerance scales with the quad extent.
        xs = [p.x for p in self.corners]
        ys = [p.y for p in self.corners]
        span = max(max(xs) - min(xs), max(ys) - min(ys), 1.0)
        for i in range(4):
            for j in range(i + 1, 4):
                for k in range(j + 1, 4):
                    (ax, ay), (bx, by), (cx, cy) = pts[i], pts[j], pts[k]
                    cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
                    if abs(cross) <= 1e-9 * span * span:
                        raise DegenerateCalibrationError(
                            f"corners {i}, {j}, {k} are collinear: {pts}"
                        )

    @classmethod
    def from_pairs(cls, pairs) -> "CalibrationQuad":
        pts = tuple(Point2D(float(x), float(y)) for x, y in pairs)
        if len(pts) != 4:
            raise DegenerateCalibrationError("exactly 4 corners required")
        return cls(pts)

    def as_pairs(self) -> list[list[float]]:
        return [[p.x, p.y] for p in self.corners]


def square_quad(side: float) -> CalibrationQuad:
    """Corners of the side x side square in TL, TR, BR, BL order."""
    if not side > 0:
        raise InvalidGeometryError(f"square side must be positive, got {side}")
    s = float(side)
    return CalibrationQuad(
        (Point2D(0.0, 0.0), Point2D(s, 0.0), Point2D(s, s), Point2D(0.0, s))
    )


@dataclass(frozen=True, slots=True)
class Homography:
    """3x3 projective transform between image planes, normalized so m[2][2] = 1."""

    m: tuple[tuple[float, float, float], ...]

    @classmethod
    def identity(cls) -> "Homography":
        return cls(((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Homography":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (3, 3):
            raise InvalidGeometryError(f"homography must be 3x3, got shape {arr.shape}")
        if abs(arr[2, 2]) <= _DEPTH_EPS:
            raise DegenerateCalibrationError("cannot normalize homography: m[2][2] is zero")
        if arr[2, 2] != 1.0:
            arr = arr / arr[2, 2]
        return cls(tuple(tuple(float(v) for v in row) for row in arr))

    def as_array(self) -> np.ndarray:
        return np.array(self.m, dtype=float)

    def inverse(self) -> "Homography":
        a = self.as_array()
        if abs(float(np.linalg.det(a))) <= _DET_EPS:
            raise DegenerateCalibrationError("homography is not invertible")
        return Homography.from_array(np.linalg.inv(a))


def centroid(box: BoundingBox) -> Point2D:
    """Geometric center of a bounding box."""
    return Point2D((box.x1 + box.x2) / 2.0, (box.y1 + box.y2) / 2.0)


def anchor_point(box: BoundingBox, mode: AnchorMode = AnchorMode.CENTROID) -> Point2D:
    """The box point used as the person's position: centroid or bottom-edge midpoint."""
    if mode is AnchorMode.BOTTOM_CENTER:
        return Point2D((box.x1 + box.x2) / 2.0, box.y2)
    return centroid(box)


def convert_back(cb: CenterBox) -> BoundingBox:
    """Center-plus-extent to corner coordinates; inverse of centroid + extent extraction."""
    return BoundingBox(
        cb.cx - cb.w / 2.0, cb.cy - cb.h / 2.0, cb.cx + cb.w / 2.0, cb.cy + cb.h / 2.0
    )


def euclidean_distance(a: Point2D, b: Point2D) -> float:
    dx = a.x - b.x
    dy = a.y - b.y
    return math.sqrt(dx * dx + dy * dy)


def estimate_homography(src: CalibrationQuad, dst: CalibrationQuad) -> Homography:
    """Exact homography from four point correspondences.

    Solves the 8-unknown direct linear system (m[2][2] fixed at 1) with
    partial pivoting. Raises DegenerateCalibrationError when the
    correspondences do not determine a well-conditioned homography.
    """
    a = np.zeros((8, 8))
    b = np.zeros(8)
    for i, (s, d) in enumerate(zip(src.corners, dst.corners)):
        a[2 * i] = (s.x, s.y, 1.0, 0.0, 0.0, 0.0, -d.x * s.x, -d.x * s.y)
        b[2 * i] = d.x
        a[2 * i + 1] = (0.0, 0.0, 0.0, s.x, s.y, 1.0, -d.y * s.x, -d.y * s.y)
        b[2 * i + 1] = d.y
    try:
        h = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise DegenerateCalibrationError(f"calibration system is singular: {exc}") from exc

    m = np.array(
        [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]]
    )
    if not np.all(np.isfinite(m)) or abs(float(np.linalg.det(m))) <= _DET_EPS:
        raise DegenerateCalibrationError("calibration yields a non-invertible homography")
    homography = Homography.from_array(m)
    # A near-singular system can still "solve"; reject if corners do not map back.
    scale = max(
        1.0, *(max(abs(p.x), abs(p.y)) for p in (*src.corners, *dst.corners))
    )
    for s, d in zip(src.corners, dst.corners):
        try:
            p = project_point(homography, s)
        except InvalidGeometryError as exc:
            raise DegenerateCalibrationError(f"calibration is numerically degenerate: {exc}") from exc
        if math.hypot(p.x - d.x, p.y - d.y) > 1e-6 * scale:
            raise DegenerateCalibrationError(
                "calibration is numerically degenerate: corners do not map to their targets"
            )
    return homography


def birdseye_homography(cal: CalibrationQuad, side: float = BIRDSEYE_SIDE) -> Homography:
    """Homography taking the calibration quad to the side x side bird's-eye square."""
    return estimate_homography(cal, square_quad(side))


def project_point(h: Homography, p: Point2D) -> Point2D:
    """Apply a homography to one point."""
    (m00, m01, m02), (m10, m11, m12), (m20, m21, m22) = h.m
    w = m20 * p.x + m21 * p.y + m22
    if abs(w) <= _DEPTH_EPS:
        raise PointAtInfinityError(f"point ({p.x}, {p.y}) projects to infinity")
    return Point2D((m00 * p.x + m01 * p.y + m02) / w, (m10 * p.x + m11 * p.y + m12) / w)


def project_points(h: Homography, xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized project_point over coordinate arrays (same arithmetic, same errors)."""
    (m00, m01, m02), (m10, m11, m12), (m20, m21, m22) = h.m
    w = m20 * xs + m21 * ys + m22
    if np.any(np.abs(w) <= _DEPTH_EPS):
        bad = int(np.argmax(np.abs(w) <= _DEPTH_EPS))
        raise PointAtInfinityError(f"point ({xs[bad]}, {ys[bad]}) projects to infinity")
    return (m00 * xs + m01 * ys + m02) / w, (m10 * xs + m11 * ys + m12) / w
