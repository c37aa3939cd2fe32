"""Social-distance violation monitoring engine and risk-management service."""

from .detection import (
    BoundingBox,
    Detection,
    DetectorBackend,
    FrameDetections,
    NmsConfig,
    filter_persons,
    iou,
    load_recorded_detections,
    non_max_suppression,
)
from .evaluation import (
    GroundTruthFrame,
    MatchResult,
    MetricReport,
    average_precision,
    evaluate_run,
    f1_score,
    match_detections,
)
from .geometry import (
    AnchorMode,
    CalibrationQuad,
    CenterBox,
    Homography,
    Point2D,
    anchor_point,
    birdseye_homography,
    centroid,
    convert_back,
    estimate_homography,
    euclidean_distance,
    project_point,
)
from .pipeline import (
    DetectionRecordsSource,
    ImageSequenceSource,
    PipelineConfig,
    RunSummary,
    measure_fps,
    render_annotations,
    run_pipeline,
)
from .store import EventStore, SeriesBucket, ViolationEvent
from .violation import (
    Color,
    FrameReport,
    PersonStatus,
    Space,
    ViolationConfig,
    ViolationPair,
    classify_violations,
    frame_report,
    pairwise_distances,
)

__version__ = "0.1.0"
