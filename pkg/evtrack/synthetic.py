"""Synthetic event-camera recordings with analytic ground truth.

Scenes are axis-aligned rectangles (optionally checker-textured) moving at
constant velocity over a uniform background. Pixel (i, j) samples the scene
at its centre (i + 0.5, j + 0.5), so a rectangle whose left edge sits at
x0 covers columns x0 .. x0 + width - 1 for integer x0. Ground-truth corners
are reported on the outermost covered pixels, (x0, y0) for the top-left and
(x0 + width - 1, y0) for the top-right corner at t=0, which is where the
Harris response of a corner peaks.

Two event models are available:

``crossing``
    One event per boundary crossing of a pixel centre whose log-intensity
    change reaches the contrast threshold, stamped with the exact crossing
    time.
``ramp``
    A pixel of unit width is swept by the edge over ``1 / |v|`` seconds and
    its intensity ramps linearly; one event is emitted each time the log
    intensity passes another multiple of the contrast threshold.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np

from .dataset_io import (
    EVENTS_FILE,
    GROUND_TRUTH_FILE,
    SCENE_FILE,
    GroundTruth,
    GroundTruthSample,
    write_events,
    write_frames,
    write_ground_truth,
    write_scene,
)
from .errors import ConfigurationError
from .event_core import OFF, ON, Event, Keyframe, SensorGeometry
from .logger import get_logger

logger = get_logger(__name__)

EVENT_MODELS = ("crossing", "ramp")

# Intensity is sampled this far before and after a crossing, in seconds.
_SAMPLE_OFFSET_S = 1e-8


@dataclass(frozen=True)
class ShapeSpec:
    """A moving axis-aligned rectangle.

    Attributes:
        x0: Left edge at t=0 (continuous sensor coordinates)
        y0: Top edge at t=0
        width: Extent along x in pixels
        height: Extent along y in pixels
        vx: Velocity along x in px/s
        vy: Velocity along y in px/s
        intensity: Gray level of the rectangle (0-255)
        texture_cell: Checker cell size in pixels (0 disables the texture)
        texture_intensity: Gray level of the odd checker cells
    """

    x0: float
    y0: float
    width: float
    height: float
    vx: float = 0.0
    vy: float = 0.0
    intensity: float = 200.0
    texture_cell: int = 0
    texture_intensity: float | None = None

    def origin_at(self, t: float) -> tuple[float, float]:
        return self.x0 + self.vx * t, self.y0 + self.vy * t

    def corners_at(self, t: float) -> list[tuple[float, float]]:
        """Corner pixels (TL, TR, BL, BR), continuous in time.

        Each corner is the centre of the outermost pixel the rectangle covers
        at that corner, interpolated between pixel steps.
        """
        x, y = self.origin_at(t)
        right, bottom = x + self.width - 1, y + self.height - 1
        return [(x, y), (right, y), (x, bottom), (right, bottom)]

    @property
    def textured(self) -> bool:
        return self.texture_cell > 0 and self.texture_intensity is not None

    def lines(self, extent: float) -> np.ndarray:
        """Local coordinates of intensity boundaries along one axis."""
        if not self.textured:
            return np.array([0.0, extent])
        inner = np.arange(self.texture_cell, extent, self.texture_cell, dtype=np.float64)
        return np.concatenate([[0.0], inner, [extent]])

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ShapeSpec:
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigurationError(f"Invalid shape {data}: {e}", "synth.scene") from e


@dataclass
class SynthConfig:
    """Configuration for the synthetic scene generator.

    Attributes:
        preset: Built-in scene name (see ``evtrack.core.profiles``)
        duration_s: Recording length in seconds (None: the scene's own)
        frame_rate: Keyframe rate in Hz
        contrast_threshold: Log-intensity change per event
        event_model: "crossing" or "ramp" (None: the scene's own)
        background: Background gray level
        jitter_us: Uniform timestamp jitter half-width (0 disables)
        seed: Seed of the jitter RNG
        gt_rate_hz: Ground-truth sampling rate
        scene: Optional JSON scene file replacing the preset
    """

    preset: str = "square"
    duration_s: float | None = None
    frame_rate: float = 24.0
    contrast_threshold: float = 0.15
    event_model: str | None = None
    background: float = 20.0
    jitter_us: int = 0
    seed: int = 7
    gt_rate_hz: float = 1000.0
    scene: str | None = None

    def with_defaults(self, duration_s: float = 1.0, event_model: str = "crossing") -> SynthConfig:
        """Copy with unset scene-dependent fields filled in."""
        return replace(
            self,
            duration_s=self.duration_s if self.duration_s is not None else duration_s,
            event_model=self.event_model or event_model,
        )


@dataclass
class SyntheticRecording:
    """Generator output."""

    events: list[Event]
    keyframes: list[Keyframe]
    ground_truth: GroundTruth
    shapes: list[ShapeSpec]
    config: SynthConfig | None = None


def scene_intensity(
    shapes: list[ShapeSpec],
    background: float,
    px: np.ndarray,
    py: np.ndarray,
    t: np.ndarray | float,
) -> np.ndarray:
    """Scene gray level at continuous points (px, py) and times t (seconds)."""
    px, py, t = np.broadcast_arrays(
        np.asarray(px, dtype=np.float64),
        np.asarray(py, dtype=np.float64),
        np.asarray(t, dtype=np.float64),
    )
    out = np.full(px.shape, float(background))
    for s in shapes:
        u = px - (s.x0 + s.vx * t)
        v = py - (s.y0 + s.vy * t)
        inside = (u >= 0) & (u < s.width) & (v >= 0) & (v < s.height)
        value = np.full(px.shape, float(s.intensity))
        if s.textured:
            odd = (np.floor(u / s.texture_cell) + np.floor(v / s.texture_cell)) % 2 == 1
            value = np.where(odd, float(s.texture_intensity), value)  # type: ignore[arg-type]
        out = np.where(inside, value, out)
    return out


def render_frame(
    shapes: list[ShapeSpec], t: int, sensor: SensorGeometry, background: float = 20.0
) -> Keyframe:
    """Render the scene at time t (µs) as an 8-bit keyframe."""
    ys, xs = np.mgrid[0 : sensor.height, 0 : sensor.width]
    img = scene_intensity(shapes, background, xs + 0.5, ys + 0.5, t / 1e6)
    return Keyframe(t=t, pixels=np.clip(np.rint(img), 0, 255).astype(np.uint8))


def _axis_interval(
    a0: float, aw: float, av: float, b0: float, bw: float, bv: float, duration: float
) -> tuple[float, float] | None:
    """Times in [0, duration] where two moving 1-D intervals overlap."""
    # overlap <=> -aw < r(t) < bw with r(t) = (a0 - b0) + (av - bv) t
    r0, rv = a0 - b0, av - bv
    if rv == 0:
        return (0.0, duration) if -aw < r0 < bw else None
    t1, t2 = (-aw - r0) / rv, (bw - r0) / rv
    lo, hi = max(min(t1, t2), 0.0), min(max(t1, t2), duration)
    return (lo, hi) if lo < hi else None


def validate_scene(shapes: list[ShapeSpec], sensor: SensorGeometry, duration: float) -> None:
    """Check shapes stay on the sensor and never overlap during the recording.

    Raises:
        ConfigurationError: On any violation
    """
    for i, s in enumerate(shapes):
        if s.width <= 0 or s.height <= 0:
            raise ConfigurationError(f"Shape {i} must have a positive size", "synth.scene")
        for t in (0.0, duration):
            x, y = s.origin_at(t)
            if x < 0 or y < 0 or x + s.width > sensor.width or y + s.height > sensor.height:
                raise ConfigurationError(
                    f"Shape {i} leaves the {sensor.width}x{sensor.height} sensor at t={t:g} s",
                    "synth.scene",
                )
    for i, a in enumerate(shapes):
        for j in range(i + 1, len(shapes)):
            b = shapes[j]
            ix = _axis_interval(a.x0, a.width, a.vx, b.x0, b.width, b.vx, duration)
            iy = _axis_interval(a.y0, a.height, a.vy, b.y0, b.height, b.vy, duration)
            if ix and iy and max(ix[0], iy[0]) < min(ix[1], iy[1]):
                raise ConfigurationError(f"Shapes {i} and {j} overlap", "synth.scene")


def _line_crossings(
    n_along: int,
    n_across: int,
    origin: float,
    speed: float,
    lines: np.ndarray,
    other_origin: float,
    other_speed: float,
    other_extent: float,
    duration: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pixel-centre crossings of moving boundary segments along one axis.

    Returns (along_idx, across_idx, t) for every pixel centre that a segment
    ``u = line`` passes in (0, duration].
    """
    centres = np.arange(n_along) + 0.5
    t = (centres[:, None] - origin - lines[None, :]) / speed
    ai, li = np.nonzero((t > 0) & (t <= duration))
    tt = t[ai, li]
    start = other_origin + other_speed * tt
    lo = np.clip(np.ceil(start - 0.5).astype(np.int64), 0, n_across)
    hi = np.clip(np.ceil(start + other_extent - 0.5).astype(np.int64), 0, n_across)
    counts = np.maximum(hi - lo, 0)
    total = int(counts.sum())
    offsets = np.repeat(np.cumsum(counts) - counts, counts)
    across = np.repeat(lo, counts) + (np.arange(total) - offsets)
    return np.repeat(ai, counts), across, np.repeat(tt, counts)


def _candidate_crossings(
    shapes: list[ShapeSpec], sensor: SensorGeometry, duration: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    xs, ys, ts, speeds = [], [], [], []
    for s in shapes:
        if s.vx != 0:
            a, b, t = _line_crossings(
                sensor.width, sensor.height, s.x0, s.vx, s.lines(s.width),
                s.y0, s.vy, s.height, duration,
            )
            xs.append(a)
            ys.append(b)
            ts.append(t)
            speeds.append(np.full(t.shape, abs(s.vx)))
        if s.vy != 0:
            a, b, t = _line_crossings(
                sensor.height, sensor.width, s.y0, s.vy, s.lines(s.height),
                s.x0, s.vx, s.width, duration,
            )
            xs.append(b)
            ys.append(a)
            ts.append(t)
            speeds.append(np.full(t.shape, abs(s.vy)))
    if not ts:
        empty = np.zeros(0)
        return empty.astype(np.int64), empty.astype(np.int64), empty, empty

    x = np.concatenate(xs)
    y = np.concatenate(ys)
    t = np.concatenate(ts)
    speed = np.concatenate(speeds)

    # Crossings of one pixel closer than twice the sample offset are a single change.
    order = np.lexsort((t, y, x))
    x, y, t, speed = x[order], y[order], t[order], speed[order]
    same_pixel = (x[1:] == x[:-1]) & (y[1:] == y[:-1])
    keep = np.ones(t.shape, dtype=bool)
    keep[1:] = ~(same_pixel & (t[1:] - t[:-1] < 2 * _SAMPLE_OFFSET_S))
    return x[keep], y[keep], t[keep], speed[keep]


def _log(i: np.ndarray) -> np.ndarray:
    return np.log(i + 1.0)


def generate_events(
    shapes: list[ShapeSpec],
    sensor: SensorGeometry,
    cfg: SynthConfig,
) -> list[Event]:
    """Events of a moving-rectangle scene, sorted by (t, y, x)."""
    cfg = cfg.with_defaults()
    if cfg.event_model not in EVENT_MODELS:
        raise ConfigurationError(
            f"Unknown event model {cfg.event_model!r} (choose from {', '.join(EVENT_MODELS)})",
            "synth.event_model",
        )
    duration = float(cfg.duration_s or 0.0)
    x, y, t, speed = _candidate_crossings(shapes, sensor, duration)
    cx, cy = x + 0.5, y + 0.5
    before = scene_intensity(shapes, cfg.background, cx, cy, t - _SAMPLE_OFFSET_S)
    after = scene_intensity(shapes, cfg.background, cx, cy, t + _SAMPLE_OFFSET_S)
    delta = _log(after) - _log(before)
    c = cfg.contrast_threshold

    if cfg.event_model == "crossing":
        fire = np.abs(delta) >= c - 1e-12
        ex, ey, et = x[fire], y[fire], t[fire]
        ep = np.where(delta[fire] > 0, ON, OFF)
    else:
        n = np.floor(np.abs(delta) / c + 1e-9).astype(np.int64)
        idx = np.repeat(np.arange(t.size), n)
        k = np.arange(int(n.sum())) - np.repeat(np.cumsum(n) - n, n) + 1
        sign = np.sign(delta[idx])
        level = _log(before[idx]) + sign * k * c
        s = (np.exp(level) - 1.0 - before[idx]) / (after[idx] - before[idx])
        et = t[idx] + (s - 0.5) / speed[idx]
        ex, ey = x[idx], y[idx]
        ep = np.where(sign > 0, ON, OFF)
        inside = (et >= 0) & (et <= duration)
        ex, ey, et, ep = ex[inside], ey[inside], et[inside], ep[inside]

    t_us = np.rint(et * 1e6).astype(np.int64)
    if cfg.jitter_us > 0:
        rng = np.random.default_rng(cfg.seed)
        t_us = t_us + rng.integers(-cfg.jitter_us, cfg.jitter_us + 1, size=t_us.size)
        t_us = np.clip(t_us, 0, int(round(duration * 1e6)))

    order = np.lexsort((ep, ex, ey, t_us))
    return [
        Event(x=int(ex[i]), y=int(ey[i]), t=int(t_us[i]), pol=int(ep[i])) for i in order
    ]


def keyframe_times(duration: float, frame_rate: float) -> list[int]:
    """Keyframe timestamps (µs) at k / frame_rate for every t < duration."""
    n = math.ceil(duration * frame_rate - 1e-9) if duration > 0 else 0
    return [int(round(k * 1e6 / frame_rate)) for k in range(n)]


def ground_truth(shapes: list[ShapeSpec], duration: float, rate_hz: float) -> GroundTruth:
    """Analytic corner trajectories sampled at ``rate_hz``; corner id = 4*shape + k."""
    gt = GroundTruth(velocities={i: (s.vx, s.vy) for i, s in enumerate(shapes)})
    if duration <= 0:
        return gt
    n = int(math.floor(duration * rate_hz + 1e-9))
    for step in range(n + 1):
        t_us = int(round(step * 1e6 / rate_hz))
        for i, s in enumerate(shapes):
            for k, (cx, cy) in enumerate(s.corners_at(t_us / 1e6)):
                gt.samples.append(GroundTruthSample(corner_id=4 * i + k, shape=i, t=t_us, x=cx, y=cy))
    return gt


def synth_scene(
    shapes: list[ShapeSpec],
    cfg: SynthConfig | None = None,
    sensor: SensorGeometry | None = None,
) -> SyntheticRecording:
    """Generate events, keyframes and ground truth for a scene.

    Raises:
        ConfigurationError: If the scene is invalid
    """
    cfg = (cfg or SynthConfig()).with_defaults()
    sensor = sensor or SensorGeometry()
    duration = float(cfg.duration_s or 0.0)
    if duration < 0:
        raise ConfigurationError("duration must be non-negative", "synth.duration_s")
    validate_scene(shapes, sensor, duration)

    events = generate_events(shapes, sensor, cfg)
    keyframes = [
        render_frame(shapes, t, sensor, cfg.background)
        for t in keyframe_times(duration, cfg.frame_rate)
    ]
    gt = ground_truth(shapes, duration, cfg.gt_rate_hz)
    logger.info(
        "Synthesized %d events, %d keyframes, %d shapes", len(events), len(keyframes), len(shapes)
    )
    return SyntheticRecording(
        events=events, keyframes=keyframes, ground_truth=gt, shapes=shapes, config=cfg
    )


def write_recording(
    rec: SyntheticRecording, out_dir: str | Path, cfg: SynthConfig | None = None
) -> Path:
    """Write a synthetic recording in the dataset layout."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_events(rec.events, out_dir / EVENTS_FILE)
    write_frames(rec.keyframes, out_dir)
    write_ground_truth(rec.ground_truth, out_dir / GROUND_TRUTH_FILE)
    scene = {
        "config": asdict(cfg or rec.config or SynthConfig()),
        "shapes": [asdict(s) for s in rec.shapes],
    }
    write_scene(scene, out_dir / SCENE_FILE)
    return out_dir


def check_events(
    events: list[Event],
    shapes: list[ShapeSpec],
    sensor: SensorGeometry,
    cfg: SynthConfig,
) -> int:
    """Count mismatches between events and a brute-force scene replay.

    Valid for the ``crossing`` model without jitter. An event is wrong when
    the pixel's intensity around its timestamp does not change by at least
    the contrast threshold in the event's direction. A crossing is missing
    when the scene, sampled on a fine time grid, changes by at least the
    threshold at a pixel with no event in or next to that grid step.
    """
    cfg = cfg.with_defaults()
    duration = float(cfg.duration_s or 0.0)
    c = cfg.contrast_threshold
    mismatches = 0

    if events:
        ex = np.array([e.x for e in events]) + 0.5
        ey = np.array([e.y for e in events]) + 0.5
        et = np.array([e.t for e in events]) / 1e6
        ep = np.array([e.pol for e in events])
        before = scene_intensity(shapes, cfg.background, ex, ey, et - 1e-6)
        after = scene_intensity(shapes, cfg.background, ex, ey, et + 1e-6)
        delta = _log(after) - _log(before)
        mismatches += int(np.count_nonzero((np.abs(delta) < c - 1e-12) | (np.sign(delta) != ep)))

    max_speed = max((max(abs(s.vx), abs(s.vy)) for s in shapes), default=0.0)
    if max_speed == 0 or duration <= 0:
        return mismatches

    step = min(1e-3, 0.25 / max_speed)
    n_steps = int(math.ceil(duration / step))
    seen = {(e.x, e.y, int(e.t / 1e6 // step)) for e in events}
    ys, xs = np.mgrid[0 : sensor.height, 0 : sensor.width]
    prev = _log(scene_intensity(shapes, cfg.background, xs + 0.5, ys + 0.5, 0.0))
    for k in range(n_steps):
        t_next = min((k + 1) * step, duration)
        cur = _log(scene_intensity(shapes, cfg.background, xs + 0.5, ys + 0.5, t_next))
        changed_y, changed_x = np.nonzero(np.abs(cur - prev) >= c - 1e-12)
        for x, y in zip(changed_x.tolist(), changed_y.tolist(), strict=True):
            if not any((x, y, k + d) in seen for d in (-1, 0, 1)):
                mismatches += 1
        prev = cur
    return mismatches
