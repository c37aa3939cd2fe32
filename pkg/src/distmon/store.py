"""Append-only violation-event log with time-series queries.

The store file starts with a schema header line, then one JSON event per
line. Appends are atomic at record granularity (single write + flush),
so readers never observe torn records; an unterminated trailing line from
an interrupted write is ignored on read. Single writer, any number of
readers; every query re-reads the file so readers always see acknowledged
events.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import BadRangeError, InvalidEventError, StoreError

SCHEMA = "violation-events/1"
MAX_SERIES_BUCKETS = 100_000  # refuse absurd range/width combinations
_HEADER_LINE = json.dumps({"schema": SCHEMA})
_EVENT_KEYS = frozenset(("timestamp", "frame_index", "violation_count", "person_count", "run_id"))


@dataclass(frozen=True, slots=True)
class ViolationEvent:
    """Per-frame violation telemetry as persisted for the dashboard."""

    timestamp: int  # milliseconds since epoch
    frame_index: int
    violation_count: int
    person_count: int
    run_id: str

    def __post_init__(self):
        for name in ("timestamp", "frame_index", "violation_count", "person_count"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise InvalidEventError(f"{name} must be an integer, got {v!r}")
        if self.frame_index < 0 or self.violation_count < 0 or self.person_count < 0:
            raise InvalidEventError("frame_index and counts must be >= 0")
        max_pairs = self.person_count * (self.person_count - 1) // 2
        if self.violation_count > max_pairs:
            raise InvalidEventError(
                f"violation_count {self.violation_count} exceeds the "
                f"{max_pairs} possible pairs among {self.person_count} persons"
            )
        if not isinstance(self.run_id, str):
            raise InvalidEventError(f"run_id must be a string, got {self.run_id!r}")


@dataclass(frozen=True, slots=True)
class SeriesBucket:
    bucket_start: int  # milliseconds
    violation_sum: int
    frame_count: int
    max_violations: int


def _event_from_record(obj: object, line_number: int) -> ViolationEvent:
    if not isinstance(obj, dict) or set(obj) != _EVENT_KEYS:
        raise StoreError(f"line {line_number}: event fields must be exactly {sorted(_EVENT_KEYS)}")
    try:
        return ViolationEvent(**obj)
    except (InvalidEventError, TypeError) as exc:
        raise StoreError(f"line {line_number}: {exc}") from exc


class EventStore:
    """Durable append-only log of ViolationEvents backed by a single file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._last_ts: dict[str, int] = {}
        if self.path.exists() and self.path.stat().st_size > 0:
            for e in self.read_all():
                self._last_ts[e.run_id] = e.timestamp
            self._fh = open(self.path, "a", encoding="utf-8")
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "w", encoding="utf-8")
            self._fh.write(_HEADER_LINE + "\n")
            self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "EventStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def sync(self) -> None:
        """Force written events to stable storage (fsync)."""
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def append(self, e: ViolationEvent) -> None:
        """Validate and persist one event; it is readable in append order on return."""
        last = self._last_ts.get(e.run_id)
        if last is not None and e.timestamp < last:
            raise InvalidEventError(
                f"timestamp {e.timestamp} precedes {last} for run {e.run_id!r}; "
                "timestamps must be non-decreasing within a run"
            )
        line = json.dumps(
            {
                "timestamp": e.timestamp,
                "frame_index": e.frame_index,
                "violation_count": e.violation_count,
                "person_count": e.person_count,
                "run_id": e.run_id,
            }
        )
        self._fh.write(line + "\n")
        self._fh.flush()
        self._last_ts[e.run_id] = e.timestamp

    def read_all(self) -> list[ViolationEvent]:
        """All acknowledged events in append order."""
        try:
            raw = self.path.read_text(encoding="utf-8")
        except OSError as exc:
            raise StoreError(f"cannot read store file {self.path}: {exc}") from exc
        if not raw:
            raise StoreError(f"store file {self.path} is empty (missing schema header)")
        complete, sep, torn = raw.rpartition("\n")
        del torn  # an unterminated trailing line is a torn write; skip it
        if not sep:
            raise StoreError(f"store file {self.path} has no complete header line")
        lines = complete.split("\n")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise StoreError(f"invalid store header: {exc}") from exc
        if header != {"schema": SCHEMA}:
            raise StoreError(f"unsupported store schema: {header!r}")
        events = []
        for line_number, line in enumerate(lines[1:], start=2):
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StoreError(f"line {line_number}: invalid JSON: {exc}") from exc
            events.append(_event_from_record(obj, line_number))
        return events

    def query_range(
        self, from_ms: int, to_ms: int, run_id: str | None = None
    ) -> list[ViolationEvent]:
        """Events with from_ms <= timestamp < to_ms, append order preserved."""
        if from_ms > to_ms:
            raise BadRangeError(f"bad range: from ({from_ms}) > to ({to_ms})")
        return [
            e
            for e in self.read_all()
            if from_ms <= e.timestamp < to_ms and (run_id is None or e.run_id == run_id)
        ]

    def aggregate_series(
        self, from_ms: int, to_ms: int, bucket_width: int, run_id: str | None = None
    ) -> list[SeriesBucket]:
        """Contiguous buckets covering [from_ms, to_ms); empty buckets carry zeros."""
        if bucket_width <= 0:
            raise BadRangeError(f"bucket width must be positive, got {bucket_width}")
        n_buckets = -((from_ms - to_ms) // bucket_width)  # ceil((to - from) / width)
        if n_buckets > MAX_SERIES_BUCKETS:
            raise BadRangeError(
                f"range/width yields {n_buckets} buckets, above the {MAX_SERIES_BUCKETS} limit"
            )
        events = self.query_range(from_ms, to_ms, run_id)
        sums = [0] * n_buckets
        counts = [0] * n_buckets
        maxima = [0] * n_buckets
        for e in events:
            k = (e.timestamp - from_ms) // bucket_width
            sums[k] += e.violation_count
            counts[k] += 1
            if e.violation_count > maxima[k]:
                maxima[k] = e.violation_count
        return [
            SeriesBucket(from_ms + k * bucket_width, sums[k], counts[k], maxima[k])
            for k in range(n_buckets)
        ]
