"""Core orchestration for evtrack.

This package contains the tracking pipeline, the event bus, the benchmark
harness and the synthetic scene presets shared by every command.
"""

from .bench import BenchReport, LatencyStats, bench_stream, run_bench
from .events import EventBus, EventHandler, PipelineEvent, PipelineEventType
from .pipeline import PipelineResult, TrackingPipeline, UnitTimer
from .profiles import (
    BUILTIN_PRESETS,
    ScenePreset,
    get_preset,
    get_preset_names,
    list_presets,
    load_scene_file,
    resolve_scene,
)

__all__ = [
    # Pipeline
    "TrackingPipeline",
    "PipelineResult",
    "UnitTimer",
    # Events
    "PipelineEvent",
    "EventBus",
    "EventHandler",
    "PipelineEventType",
    # Bench
    "BenchReport",
    "LatencyStats",
    "bench_stream",
    "run_bench",
    # Presets
    "ScenePreset",
    "BUILTIN_PRESETS",
    "get_preset",
    "get_preset_names",
    "list_presets",
    "load_scene_file",
    "resolve_scene",
]
