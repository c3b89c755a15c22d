# Configuration
from .config import BenchConfig, IoConfig, PipelineConfig, parse_config_text

# Pipeline, event bus, benchmark and scene presets
from .core import (
    BUILTIN_PRESETS,
    BenchReport,
    EventBus,
    LatencyStats,
    PipelineEvent,
    PipelineEventType,
    PipelineResult,
    ScenePreset,
    TrackingPipeline,
    UnitTimer,
    bench_stream,
    get_preset,
    get_preset_names,
    list_presets,
    load_scene_file,
    resolve_scene,
    run_bench,
)

# Recording I/O
from .dataset_io import (
    GroundTruth,
    RecordingHeader,
    merge_streams,
    open_recording,
    read_events,
    read_frames,
    read_ground_truth,
    read_header,
    require_recording,
    read_trajectories,
    seconds_to_us,
    us_to_seconds,
    write_event_corners,
    write_events,
    write_frames,
    write_ground_truth,
    write_trajectories,
)

# Custom errors
from .errors import (
    BorderViolationError,
    ConfigurationError,
    DegenerateTripleError,
    EvtrackError,
    FitError,
    ImageTooSmallError,
    InsufficientSupportError,
    NoConsensusError,
    OrderError,
    OutOfBoundsError,
    ParseError,
    RecordingNotFoundError,
    StationarySurfaceError,
    UnsupportedImageFormatError,
    exit_code_for,
    format_error_for_user,
)

# Event primitives and the surface of active events
from .event_core import (
    SAE,
    BinaryPatch,
    Event,
    Keyframe,
    LocalPatch,
    SensorGeometry,
    binarize_patch,
    extract_patch,
    sae_update,
)
from .evtrack import main

# Keyframe corner detection
from .harris import FrameCorner, HarrisConfig, detect_corners, harris_response, harris_score

# Lifetime tracking
from .life_tracker import (
    LifeTracker,
    TrackConfig,
    TrackedCorner,
    TrackState,
    UpdateRecord,
    Velocity,
    lifetime,
    velocity,
)
from .logger import get_logger, setup_logging

# Event-corner matching
from .matching import CornerMatcher, EventCorner, MatchConfig, score_binary_patch

# Local plane fitting
from .plane_rht import (
    PlaneParams,
    RhtConfig,
    SupportConfig,
    SupportPoints,
    collect_support,
    refine_plane,
    rht_fit,
)

# Synthetic recordings
from .synthetic import (
    ShapeSpec,
    SynthConfig,
    SyntheticRecording,
    check_events,
    generate_events,
    synth_scene,
    write_recording,
)

__version__ = "0.3.0"

__all__ = [
    "__version__",
    "main",
    # Events and SAE
    "Event",
    "Keyframe",
    "SensorGeometry",
    "SAE",
    "LocalPatch",
    "BinaryPatch",
    "sae_update",
    "extract_patch",
    "binarize_patch",
    # Detection and matching
    "HarrisConfig",
    "FrameCorner",
    "detect_corners",
    "harris_response",
    "harris_score",
    "MatchConfig",
    "EventCorner",
    "CornerMatcher",
    "score_binary_patch",
    # Plane fitting
    "SupportConfig",
    "RhtConfig",
    "SupportPoints",
    "PlaneParams",
    "collect_support",
    "refine_plane",
    "rht_fit",
    # Tracking
    "TrackConfig",
    "TrackState",
    "TrackedCorner",
    "Velocity",
    "UpdateRecord",
    "LifeTracker",
    "velocity",
    "lifetime",
    # Configuration
    "PipelineConfig",
    "IoConfig",
    "BenchConfig",
    "parse_config_text",
    # Pipeline
    "TrackingPipeline",
    "PipelineResult",
    "UnitTimer",
    "EventBus",
    "PipelineEvent",
    "PipelineEventType",
    "BenchReport",
    "LatencyStats",
    "bench_stream",
    "run_bench",
    # Scenes
    "ScenePreset",
    "BUILTIN_PRESETS",
    "get_preset",
    "get_preset_names",
    "list_presets",
    "load_scene_file",
    "resolve_scene",
    "ShapeSpec",
    "SynthConfig",
    "SyntheticRecording",
    "generate_events",
    "synth_scene",
    "write_recording",
    "check_events",
    # I/O
    "RecordingHeader",
    "GroundTruth",
    "seconds_to_us",
    "us_to_seconds",
    "read_events",
    "write_events",
    "read_frames",
    "write_frames",
    "read_header",
    "require_recording",
    "merge_streams",
    "open_recording",
    "read_trajectories",
    "write_trajectories",
    "write_event_corners",
    "read_ground_truth",
    "write_ground_truth",
    # Logging
    "get_logger",
    "setup_logging",
    # Errors
    "EvtrackError",
    "RecordingNotFoundError",
    "ParseError",
    "OrderError",
    "UnsupportedImageFormatError",
    "OutOfBoundsError",
    "BorderViolationError",
    "ImageTooSmallError",
    "ConfigurationError",
    "FitError",
    "InsufficientSupportError",
    "DegenerateTripleError",
    "NoConsensusError",
    "StationarySurfaceError",
    "format_error_for_user",
    "exit_code_for",
]
