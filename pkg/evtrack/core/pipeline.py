"""Tracking pipeline for evtrack.

This module provides the single stream-order driver for the workflow:
keyframe → detect → (per event) SAE update → match → track.

The ``track``, ``bench`` and ``detect`` commands all run through this
pipeline, so behaviour is identical across them.
"""

from __future__ import annotations

import time
from collections.abc import Callable, Iterable, Iterator
from contextlib import AbstractContextManager, contextmanager, nullcontext
from dataclasses import dataclass, field

from ..config import PipelineConfig
from ..errors import EvtrackError
from ..event_core import SAE, Event, Keyframe
from ..harris import FrameCorner, detect_corners
from ..life_tracker import LifeTracker, TrackedCorner, TrackerStats, UpdateRecord
from ..logger import StreamProgressLogger, get_logger
from ..matching import CornerMatcher, EventCorner
from .events import EventBus, PipelineEventType

logger = get_logger(__name__)

UNITS = ("harris", "matching", "fit")


class UnitTimer:
    """Wall-clock samples per processing unit, in nanoseconds.

    Uses the monotonic ``perf_counter_ns`` clock. Disabled timers record
    nothing (used for warm-up).
    """

    def __init__(self) -> None:
        self.samples: dict[str, list[int]] = {unit: [] for unit in UNITS}
        self.enabled = True

    @contextmanager
    def measure(self, unit: str) -> Iterator[None]:
        if not self.enabled:
            yield
            return
        start = time.perf_counter_ns()
        try:
            yield
        finally:
            self.samples.setdefault(unit, []).append(time.perf_counter_ns() - start)

    def reset(self) -> None:
        for values in self.samples.values():
            values.clear()


@dataclass
class PipelineResult:
    """Result of a pipeline run."""

    success: bool = True
    error: str | None = None
    exception: EvtrackError | None = None
    records: list[UpdateRecord] = field(default_factory=list)
    event_corners: list[EventCorner] = field(default_factory=list)
    frame_corners: list[FrameCorner] = field(default_factory=list)
    events_processed: int = 0
    keyframes_processed: int = 0
    events_checked: int = 0
    tracks_created: int = 0
    updates_emitted: int = 0
    last_t: int | None = None
    stats: TrackerStats = field(default_factory=TrackerStats)


class TrackingPipeline:
    """Single source of truth for the detect → match → track workflow.

    Example usage::

        pipeline = TrackingPipeline(PipelineConfig.load())
        result = pipeline.run(open_recording("recordings/square"))
        write_trajectories(result.records, "tracks.csv")
    """

    def __init__(
        self,
        config: PipelineConfig | None = None,
        event_bus: EventBus | None = None,
        timer: UnitTimer | None = None,
        keep_records: bool = True,
    ):
        """Initialize the pipeline.

        Args:
            config: Pipeline configuration (uses defaults if None)
            event_bus: Optional EventBus receiving run and track events
            timer: Optional per-unit timer (benchmark instrumentation)
            keep_records: Collect update records in the result
        """
        self.config = config or PipelineConfig()
        self.event_bus = event_bus
        self.timer = timer
        self.keep_records = keep_records
        self.reset()

    def reset(self) -> None:
        """Fresh SAE, matcher and tracker (same configuration)."""
        cfg = self.config
        self.sae = SAE(cfg.sensor)
        self.matcher = CornerMatcher(cfg.match, cfg.harris.k)
        self.tracker = LifeTracker(
            cfg.sensor, cfg.track, cfg.support, cfg.rht, on_transition=self._on_transition
        )
        if self.timer is not None:
            timer = self.timer
            self.tracker.fit_timer = lambda: timer.measure("fit")
        self.result = PipelineResult()
        self._progress = StreamProgressLogger(logger)

    def _emit(self, event_type: PipelineEventType, **data: object) -> None:
        if self.event_bus:
            self.event_bus.emit(event_type, **data)

    def _measure(self, unit: str) -> AbstractContextManager[None]:
        return self.timer.measure(unit) if self.timer is not None else nullcontext()

    def _on_transition(self, kind: str, track: TrackedCorner) -> None:
        self._emit(PipelineEventType(kind), track_id=track.id, t=track.last_event_t, track=track)

    def process_keyframe(self, kf: Keyframe) -> list[FrameCorner]:
        """Detect corners on a keyframe and re-anchor the tracker.

        Corners whose pixel fired since the previous keyframe are matched on
        that event at once; the resulting activations are returned through
        the same update path as event-driven ones.
        """
        with self._measure("harris"):
            corners = detect_corners(kf, self.config.harris)
        previous_t = self.matcher.keyframe_t
        self.matcher.reset(corners, kf.t)
        self.tracker.on_keyframe(corners, kf.t)
        self.result.keyframes_processed += 1
        self.result.frame_corners.extend(corners)
        self._emit(PipelineEventType.KEYFRAME_PROCESSED, t=kf.t, corners=corners)

        if previous_t is not None:
            records: list[UpdateRecord] = []
            for ec in self.matcher.match_recent(self.sae, previous_t):
                records += self._on_event_corner(ec)
            self._deliver(records)
        return corners

    def process_event(self, e: Event) -> list[UpdateRecord]:
        """Apply one event: SAE update, matching, then tracking."""
        self.sae.update(e)
        with self._measure("matching"):
            ec = self.matcher.match_event(e, self.sae)

        records = self._on_event_corner(ec) if ec is not None else []
        records += self.tracker.on_event(e, self.sae, skip={r.track_id for r in records})
        self._deliver(records)
        self.result.events_processed += 1
        return records

    def _on_event_corner(self, ec: EventCorner) -> list[UpdateRecord]:
        self.result.event_corners.append(ec)
        self._emit(PipelineEventType.EVENT_CORNER_MATCHED, t=ec.t, event_corner=ec)
        return self.tracker.on_event_corner(ec, self.sae)

    def _deliver(self, records: list[UpdateRecord]) -> None:
        for record in records:
            self._emit(
                PipelineEventType.TRACK_UPDATED, track_id=record.track_id, t=record.t, record=record
            )
        if self.keep_records:
            self.result.records.extend(records)

    def run(
        self,
        stream: Iterable[Event | Keyframe],
        progress: Callable[[int], object] | None = None,
    ) -> PipelineResult:
        """Drive a merged, time-ordered stream through the pipeline.

        Input errors raised while reading the stream end the run; they are
        reported in the result rather than raised.

        Args:
            stream: Keyframes and events in non-decreasing time order
            progress: Optional callback receiving the number of items consumed

        Returns:
            PipelineResult with records, event-corners and counters
        """
        result = self.result
        self._emit(PipelineEventType.RUN_STARTED)
        try:
            for item in stream:
                if isinstance(item, Keyframe):
                    self.process_keyframe(item)
                else:
                    self.process_event(item)
                result.last_t = item.t
                self._progress.tick(
                    item.t,
                    events=result.events_processed,
                    tracks=len(self.tracker.live_tracks()),
                    updates=self.tracker.stats.updates_emitted,
                )
                if progress is not None:
                    progress(1)
        except EvtrackError as e:
            logger.error("Run aborted: %s", e.message)
            result.success = False
            result.error = str(e)
            result.exception = e

        if result.last_t is not None:
            self.tracker.finish(result.last_t)
        self._finalize()
        self._emit(PipelineEventType.RUN_COMPLETED, result=result)
        logger.info(
            "Processed %d events and %d keyframes: %d tracks, %d updates",
            result.events_processed,
            result.keyframes_processed,
            result.tracks_created,
            result.updates_emitted,
        )
        return result

    def _finalize(self) -> None:
        stats = self.tracker.stats
        self.result.stats = stats
        self.result.tracks_created = stats.tracks_created
        self.result.updates_emitted = stats.updates_emitted
        self.result.events_checked = self.matcher.events_checked
