"""Exception types shared across the package."""

from __future__ import annotations


class DistmonError(Exception):
    """Base class for all errors raised by this package."""


class InvalidGeometryError(DistmonError):
    """A box, point, or quad violates a geometric invariant."""


class DegenerateCalibrationError(InvalidGeometryError):
    """A calibration quad is collinear/duplicated or yields a singular system."""


class PointAtInfinityError(InvalidGeometryError):
    """Projective depth of a point is (numerically) zero under a homography."""


class InvalidDetectionError(DistmonError):
    """A detection record violates a range or type invariant."""


class RecordParseError(DistmonError):
    """A line-delimited record file is malformed.

    line_number is 1-based and refers to the offending line.
    """

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class StreamOrderError(RecordParseError):
    """Frame indices in a stream are not strictly ascending."""


class ConfigurationError(DistmonError):
    """A pipeline/service configuration is inconsistent or incomplete."""


class MeasurementError(DistmonError):
    """A timing measurement is unusable (non-positive wall time)."""


class UndefinedMetricError(DistmonError):
    """A metric has no defined value (e.g. AP with zero ground truths)."""


class AlignmentError(DistmonError):
    """Prediction and ground-truth streams disagree on frame indices."""


class InvalidEventError(DistmonError):
    """A violation event fails its invariants and was rejected before write."""


class StoreError(DistmonError):
    """The event store file is unreadable or corrupt."""


class BadRangeError(DistmonError):
    """A query range or bucket width is invalid."""


class PipelineIOError(DistmonError):
    """A pipeline run aborted mid-stream.

    frames_processed counts the frames fully emitted before the failure.
    """

    def __init__(self, message: str, frames_processed: int):
        super().__init__(f"{message} (frames processed: {frames_processed})")
        self.frames_processed = frames_processed
