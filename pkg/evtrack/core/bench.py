"""Benchmark harness: per-unit latencies and update-rate accounting.

The recording is replayed twice. A warm-up pass over the first
``bench.warmup_events`` events runs untimed, then a fresh pipeline replays
the full recording with the unit timer enabled:

- harris: per keyframe
- matching: per event (every event goes through the matching unit)
- fit: per plane fit + lifetime computation
"""

from __future__ import annotations

import csv
import io
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..config import PipelineConfig
from ..dataset_io import open_recording
from ..event_core import Event, Keyframe
from ..logger import get_logger
from .pipeline import UNITS, PipelineResult, TrackingPipeline, UnitTimer

logger = get_logger(__name__)


@dataclass(frozen=True)
class LatencyStats:
    """Latency summary of one unit in microseconds (None without samples)."""

    count: int
    mean_us: float | None
    median_us: float | None
    p99_us: float | None

    @classmethod
    def from_ns(cls, samples: Sequence[int]) -> LatencyStats:
        if not samples:
            return cls(count=0, mean_us=None, median_us=None, p99_us=None)
        us = np.asarray(samples, dtype=np.float64) / 1000.0
        return cls(
            count=int(us.size),
            mean_us=float(us.mean()),
            median_us=float(np.median(us)),
            p99_us=float(np.percentile(us, 99)),
        )


def _sig3(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.3g}"


@dataclass
class BenchReport:
    """Benchmark results.

    Attributes:
        latencies: Per-unit latency summaries (harris, matching, fit)
        events_processed: Events replayed in the timed pass
        keyframes_processed: Keyframes replayed in the timed pass
        events_checked: Events that reached binary-patch scoring
        stream_duration_s: Span of stream time covered by the recording
        updates_emitted: Update records in the timed pass
        tracks_created: Tracks opened in the timed pass
        updates_per_interval: Updates per active corner per keyframe interval
        max_frame_break_px: Largest keyframe-to-keyframe jump of a continued track
        max_event_step_px: Largest position step between two asynchronous updates
        config_text: Configuration used
    """

    latencies: dict[str, LatencyStats] = field(default_factory=dict)
    events_processed: int = 0
    keyframes_processed: int = 0
    events_checked: int = 0
    stream_duration_s: float = 0.0
    updates_emitted: int = 0
    tracks_created: int = 0
    updates_per_interval: list[int] = field(default_factory=list)
    max_frame_break_px: float = 0.0
    max_event_step_px: float = 0.0
    config_text: str = ""

    @property
    def checked_per_second(self) -> float | None:
        if self.stream_duration_s <= 0:
            return None
        return self.events_checked / self.stream_duration_s

    @property
    def updates_per_second_per_track(self) -> float | None:
        if self.stream_duration_s <= 0 or self.tracks_created == 0:
            return None
        return self.updates_emitted / self.tracks_created / self.stream_duration_s

    @property
    def median_updates_per_interval(self) -> float | None:
        if not self.updates_per_interval:
            return None
        return float(np.median(self.updates_per_interval))

    @property
    def max_updates_per_interval(self) -> int | None:
        return max(self.updates_per_interval, default=None)

    def to_text(self) -> str:
        """Human-readable report."""
        lines = ["Unit latencies (µs)", f"  {'unit':<10}{'count':>10}{'mean':>10}{'median':>10}{'p99':>10}"]
        for unit in UNITS:
            s = self.latencies.get(unit, LatencyStats.from_ns([]))
            lines.append(
                f"  {unit:<10}{s.count:>10}{_sig3(s.mean_us):>10}"
                f"{_sig3(s.median_us):>10}{_sig3(s.p99_us):>10}"
            )
        lines += [
            "",
            f"Events processed:            {self.events_processed}",
            f"Keyframes processed:         {self.keyframes_processed}",
            f"Events checked by matching:  {self.events_checked} "
            f"({_sig3(self.checked_per_second)} /s)",
            f"Tracks created:              {self.tracks_created}",
            f"Updates emitted:             {self.updates_emitted} "
            f"({_sig3(self.updates_per_second_per_track)} /s per track)",
            f"Updates per corner per keyframe interval: median "
            f"{_sig3(self.median_updates_per_interval)}, max "
            f"{self.max_updates_per_interval if self.max_updates_per_interval is not None else 'n/a'}",
            f"Frame-only max break:        {self.max_frame_break_px:.3g} px",
            f"Event-based max step:        {self.max_event_step_px:.3g} px",
        ]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        """Per-unit latency table as CSV."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["unit", "count", "mean_us", "median_us", "p99_us"])
        for unit in UNITS:
            s = self.latencies.get(unit, LatencyStats.from_ns([]))
            writer.writerow([unit, s.count, _sig3(s.mean_us), _sig3(s.median_us), _sig3(s.p99_us)])
        return buf.getvalue()


def _warm_up(config: PipelineConfig, items: Sequence[Event | Keyframe]) -> None:
    limit = config.bench.warmup_events
    if limit <= 0:
        return
    pipeline = TrackingPipeline(config, keep_records=False)
    seen = 0
    for item in items:
        if isinstance(item, Keyframe):
            pipeline.process_keyframe(item)
        else:
            pipeline.process_event(item)
            seen += 1
            if seen >= limit:
                break


def bench_stream(
    config: PipelineConfig,
    items: Sequence[Event | Keyframe],
    progress: Callable[[int], object] | None = None,
) -> tuple[BenchReport, PipelineResult]:
    """Benchmark an in-memory stream."""
    _warm_up(config, items)

    timer = UnitTimer()
    pipeline = TrackingPipeline(config, timer=timer, keep_records=False)
    result = pipeline.run(items, progress=progress)

    first_t = items[0].t if items else 0
    report = BenchReport(
        latencies={unit: LatencyStats.from_ns(timer.samples.get(unit, [])) for unit in UNITS},
        events_processed=result.events_processed,
        keyframes_processed=result.keyframes_processed,
        events_checked=result.events_checked,
        stream_duration_s=((result.last_t or first_t) - first_t) / 1e6,
        updates_emitted=result.updates_emitted,
        tracks_created=result.tracks_created,
        updates_per_interval=list(result.stats.updates_per_interval),
        max_frame_break_px=result.stats.max_frame_break,
        max_event_step_px=result.stats.max_event_step,
        config_text=config.to_text(),
    )
    return report, result


def run_bench(
    config: PipelineConfig,
    input_dir: str | Path,
    progress: Callable[[int], object] | None = None,
) -> BenchReport:
    """Benchmark a recording directory.

    Raises:
        EvtrackError: On input errors while loading the recording
    """
    items = list(open_recording(input_dir, config.sensor, config.io.png))
    logger.info("Loaded %d stream items from %s", len(items), input_dir)
    report, result = bench_stream(config, items, progress)
    if result.exception is not None:
        raise result.exception
    return report
