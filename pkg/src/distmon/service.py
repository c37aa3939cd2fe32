"""Risk-management HTTP API serving the operator dashboard.

Endpoints (all payloads JSON, numbers at full precision):

  GET  /api/stats            latest frame summary, cumulative total, fps
  GET  /api/series           ?from=&to=&bucket= -> violation buckets
  GET  /api/config           current pipeline configuration view
  PUT  /api/config           partial update, atomic, read-after-write
  POST /api/calibration      4 corners (+optional side) -> homography
  GET  /api/report/latest    most recent full frame report
  GET  /                     dashboard assets, when a directory is mounted

The frame-report record schema (one JSON object per line in report files,
also returned by /api/report/latest):

  {"frame": int, "person_count": int, "violation_count": int,
   "statuses": [{"index": int, "x": float, "y": float, "color": "red"|"green"}],
   "violations": [{"i": int, "j": int, "distance": float}]}

The calibration file consumed by the CLI uses the same corner layout:
  {"corners": [[x, y], [x, y], [x, y], [x, y]], "side": 448}
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .detection import NmsConfig
from .errors import DistmonError
from .geometry import AnchorMode, CalibrationQuad, birdseye_homography
from .pipeline import PipelineConfig
from .store import EventStore
from .violation import Space, ViolationConfig, report_from_record

STATS_FPS_WINDOW = 100  # trailing events used for the live fps estimate


class ConfigHandle:
    """Thread-safe holder of the active PipelineConfig (atomic snapshot swap)."""

    def __init__(self, config: PipelineConfig | None = None):
        self._lock = threading.Lock()
        self._config = config if config is not None else PipelineConfig()

    def get(self) -> PipelineConfig:
        with self._lock:
            return self._config

    def swap(self, config: PipelineConfig) -> None:
        with self._lock:
            self._config = config


class ConfigView(BaseModel):
    model_config = ConfigDict(extra="forbid")

    threshold_t: float = Field(gt=0)
    confidence_threshold: float = Field(ge=0, le=1)
    iou_threshold: float = Field(ge=0, le=1)
    space: Space
    anchor_mode: AnchorMode
    calibration: Optional[list[list[float]]] = None
    birdseye_side: float = Field(gt=0)

    @classmethod
    def from_config(cls, cfg: PipelineConfig) -> "ConfigView":
        return cls(
            threshold_t=cfg.violation.threshold_t,
            confidence_threshold=cfg.nms.confidence_threshold,
            iou_threshold=cfg.nms.iou_threshold,
            space=cfg.violation.space,
            anchor_mode=cfg.violation.anchor_mode,
            calibration=cfg.calibration.as_pairs() if cfg.calibration else None,
            birdseye_side=cfg.birdseye_side,
        )


class ConfigUpdate(BaseModel):
    """Partial configuration update; omitted fields keep their value."""

    model_config = ConfigDict(extra="forbid")

    threshold_t: Optional[float] = Field(default=None, gt=0)
    confidence_threshold: Optional[float] = Field(default=None, ge=0, le=1)
    iou_threshold: Optional[float] = Field(default=None, ge=0, le=1)
    space: Optional[Space] = None
    anchor_mode: Optional[AnchorMode] = None
    calibration: Optional[list[list[float]]] = None
    birdseye_side: Optional[float] = Field(default=None, gt=0)

    @field_validator("calibration")
    @classmethod
    def _four_corners(cls, v):
        if v is not None and len(v) != 4:
            raise ValueError("exactly 4 corners required")
        return v


class CalibrationRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    corners: list[list[float]]
    side: Optional[float] = Field(default=None, gt=0)

    @field_validator("corners")
    @classmethod
    def _four_corners(cls, v):
        if len(v) != 4 or any(len(c) != 2 for c in v):
            raise ValueError("exactly 4 corners required, each as [x, y]")
        return v


class CalibrationResponse(BaseModel):
    homography: list[list[float]]
    config: ConfigView


class BucketView(BaseModel):
    bucket_start: int
    violation_sum: int
    frame_count: int
    max_violations: int


class SeriesResponse(BaseModel):
    buckets: list[BucketView]


class LatestFrame(BaseModel):
    frame_index: int
    person_count: int
    violation_count: int


class StatsResponse(BaseModel):
    latest: Optional[LatestFrame]
    total_violations: int
    fps: float


def _merged_config(current: PipelineConfig, update: ConfigUpdate) -> PipelineConfig:
    fields = update.model_dump(exclude_unset=True)
    violation = ViolationConfig(
        threshold_t=fields.get("threshold_t", current.violation.threshold_t),
        space=fields.get("space", current.violation.space),
        anchor_mode=fields.get("anchor_mode", current.violation.anchor_mode),
    )
    nms = NmsConfig(
        confidence_threshold=fields.get("confidence_threshold", current.nms.confidence_threshold),
        iou_threshold=fields.get("iou_threshold", current.nms.iou_threshold),
    )
    if "calibration" in fields:
        corners = fields["calibration"]
        calibration = CalibrationQuad.from_pairs(corners) if corners is not None else None
    else:
        calibration = current.calibration
    return PipelineConfig(
        nms=nms,
        violation=violation,
        calibration=calibration,
        birdseye_side=fields.get("birdseye_side", current.birdseye_side),
    )


def _live_fps(events) -> float:
    recent = events[-STATS_FPS_WINDOW:]
    if len(recent) < 2:
        return 0.0
    span_ms = recent[-1].timestamp - recent[0].timestamp
    if span_ms <= 0:
        return 0.0
    return (len(recent) - 1) * 1000.0 / span_ms


def create_app(
    store: EventStore,
    config_handle: ConfigHandle | None = None,
    assets_dir: str | Path | None = None,
    reports_path: str | Path | None = None,
) -> FastAPI:
    """Build the service; all state lives in the store, config handle, and report file."""
    handle = config_handle if config_handle is not None else ConfigHandle()
    app = FastAPI(title="distmon risk-management service")

    @app.exception_handler(DistmonError)
    async def _domain_error(_request: Request, exc: DistmonError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/api/stats", response_model=StatsResponse)
    def get_stats():
        events = store.read_all()
        latest = None
        if events:
            last = events[-1]
            latest = LatestFrame(
                frame_index=last.frame_index,
                person_count=last.person_count,
                violation_count=last.violation_count,
            )
        return StatsResponse(
            latest=latest,
            total_violations=sum(e.violation_count for e in events),
            fps=_live_fps(events),
        )

    @app.get("/api/series", response_model=SeriesResponse)
    def get_series(
        from_ms: int = Query(alias="from"),
        to_ms: int = Query(alias="to"),
        bucket: int = Query(),
        run_id: Optional[str] = Query(default=None),
    ):
        buckets = store.aggregate_series(from_ms, to_ms, bucket, run_id)
        return SeriesResponse(
            buckets=[
                BucketView(
                    bucket_start=b.bucket_start,
                    violation_sum=b.violation_sum,
                    frame_count=b.frame_count,
                    max_violations=b.max_violations,
                )
                for b in buckets
            ]
        )

    @app.get("/api/config", response_model=ConfigView)
    def get_config():
        return ConfigView.from_config(handle.get())

    @app.put("/api/config", response_model=ConfigView)
    def put_config(update: ConfigUpdate):
        merged = _merged_config(handle.get(), update)  # DistmonError -> 422, no mutation
        handle.swap(merged)
        return ConfigView.from_config(merged)

    @app.post("/api/calibration", response_model=CalibrationResponse)
    def post_calibration(request: CalibrationRequest):
        quad = CalibrationQuad.from_pairs(request.corners)
        current = handle.get()
        side = request.side if request.side is not None else current.birdseye_side
        homography = birdseye_homography(quad, side)
        merged = PipelineConfig(
            nms=current.nms,
            violation=ViolationConfig(
                threshold_t=current.violation.threshold_t,
                space=Space.BIRDSEYE,
                anchor_mode=current.violation.anchor_mode,
            ),
            calibration=quad,
            birdseye_side=side,
        )
        handle.swap(merged)
        return CalibrationResponse(
            homography=[list(row) for row in homography.m],
            config=ConfigView.from_config(merged),
        )

    @app.get("/api/report/latest")
    def get_latest_report():
        if reports_path is None:
            raise HTTPException(status_code=404, detail="no report stream configured")
        path = Path(reports_path)
        if not path.exists():
            raise HTTPException(status_code=404, detail="no report available")
        last_line = None
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    last_line = line
        if last_line is None:
            raise HTTPException(status_code=404, detail="no report available")
        record = json.loads(last_line)
        report_from_record(record)  # validate before serving
        return record

    if assets_dir is not None and Path(assets_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(assets_dir), html=True), name="dashboard")

    return app


def serve_api(
    store: EventStore,
    config_handle: ConfigHandle | None = None,
    assets_dir: str | Path | None = None,
    reports_path: str | Path | None = None,
    host: str = "127.0.0.1",
    port: int = 8000,
) -> None:
    """Run the service until interrupted."""
    import uvicorn

    app = create_app(store, config_handle, assets_dir, reports_path)
    uvicorn.run(app, host=host, port=port, log_level="info")
