"""Reading and writing recordings, trajectories and ground truth.

A recording directory follows the public event-camera dataset layout::

    events.txt        "<t_seconds> <x> <y> <p>" per line, p in {0, 1}
    images.txt        "<t_seconds> <image_path>" per line, paths relative
                      to the directory
    frames/*.pgm      8-bit grayscale frames (P5); PNG is also accepted
    ground_truth.csv  synthetic recordings only
    scene.json        synthetic recordings only (generator config echo)

Timestamps are converted to integer microseconds on read and written back
as ``<seconds>.<microseconds>000`` so a written file reads back identically.
"""

from __future__ import annotations

import csv
import heapq
import json
import math
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal, InvalidOperation
from pathlib import Path
from typing import Any

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    OrderError,
    ParseError,
    RecordingNotFoundError,
    UnsupportedImageFormatError,
)
from .event_core import OFF, ON, Event, Keyframe, SensorGeometry
from .life_tracker import UpdateRecord
from .logger import get_logger
from .matching import EventCorner

logger = get_logger(__name__)

EVENTS_FILE = "events.txt"
FRAMES_INDEX = "images.txt"
FRAMES_DIR = "frames"
GROUND_TRUTH_FILE = "ground_truth.csv"
SCENE_FILE = "scene.json"

TRAJECTORY_HEADER = ["track_id", "t_us", "x", "y", "vx", "vy", "lifetime_s"]
EVENT_CORNER_HEADER = ["t_us", "x", "y", "pol", "score", "keyframe_t_us"]
GROUND_TRUTH_HEADER = ["corner_id", "shape", "t_us", "x", "y"]

# Pillow reports PGM/PPM files as "PPM".
_PGM_FORMATS = {"PPM"}
_PNG_FORMATS = {"PNG"}


@dataclass(frozen=True)
class RecordingHeader:
    """Summary of a recording directory."""

    width: int
    height: int
    event_count: int
    frame_count: int


@dataclass(frozen=True)
class GroundTruthSample:
    """True position of one synthetic corner at one instant."""

    corner_id: int
    shape: int
    t: int
    x: float
    y: float


@dataclass
class GroundTruth:
    """Analytic corner trajectories of a synthetic scene.

    Attributes:
        samples: Samples ordered by (t, corner_id)
        velocities: (vx, vy) in px/s per shape index
    """

    samples: list[GroundTruthSample] = field(default_factory=list)
    velocities: dict[int, tuple[float, float]] = field(default_factory=dict)

    def trajectory(self, corner_id: int) -> list[GroundTruthSample]:
        return [s for s in self.samples if s.corner_id == corner_id]

    def corner_ids(self) -> list[int]:
        return sorted({s.corner_id for s in self.samples})

    def position_at(self, corner_id: int, t: int) -> tuple[float, float]:
        """Linear interpolation of a corner trajectory at time t (µs)."""
        traj = self.trajectory(corner_id)
        if not traj:
            raise KeyError(corner_id)
        ts = np.array([s.t for s in traj], dtype=np.float64)
        x = float(np.interp(t, ts, [s.x for s in traj]))
        y = float(np.interp(t, ts, [s.y for s in traj]))
        return x, y


# Timestamps


def seconds_to_us(text: str) -> int:
    """Convert a decimal-seconds string to integer microseconds (rounded).

    Plain ``123.456789`` forms are converted digit-wise, other notations
    go through :class:`decimal.Decimal`. Both are exact.

    Raises:
        ValueError: If ``text`` is not a non-negative decimal number
    """
    whole, dot, frac = text.partition(".")
    if whole.isdigit() and (not dot or frac.isdigit() or frac == ""):
        frac = frac.ljust(7, "0")
        us = int(whole) * 1_000_000 + int(frac[:6])
        if int(frac[6]) >= 5:
            us += 1
        return us
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise ValueError(f"not a number: {text!r}") from None
    if not value.is_finite() or value < 0:
        raise ValueError(f"timestamp must be a non-negative number: {text!r}")
    return int((value * 1_000_000).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def us_to_seconds(t: int) -> str:
    """Inverse of :func:`seconds_to_us` for integer microseconds."""
    return f"{t // 1_000_000}.{t % 1_000_000:06d}000"


# Events


def read_events(path: str | Path, sensor: SensorGeometry | None = None) -> Iterator[Event]:
    """Stream events from an ``events.txt`` file.

    Args:
        path: Event file ("t x y p" per line)
        sensor: Geometry used for the coordinate bounds check

    Yields:
        Events in file order with t in µs and polarity in {+1, -1}

    Raises:
        RecordingNotFoundError: If the file does not exist
        ParseError: On a malformed line (carries the 1-based line number)
        OrderError: If a timestamp is smaller than its predecessor
    """
    path = Path(path)
    sensor = sensor or SensorGeometry()
    if not path.is_file():
        raise RecordingNotFoundError(str(path), "event file")

    t_prev = -1
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 4:
                raise ParseError(str(path), line_no, f"expected 4 fields, got {len(fields)}")
            try:
                t = seconds_to_us(fields[0])
                x, y, p = int(fields[1]), int(fields[2]), int(fields[3])
            except ValueError as e:
                raise ParseError(str(path), line_no, str(e)) from e
            if p not in (0, 1):
                raise ParseError(str(path), line_no, f"polarity must be 0 or 1, got {p}")
            if not sensor.contains(x, y):
                raise ParseError(
                    str(path),
                    line_no,
                    f"pixel ({x}, {y}) outside the {sensor.width}x{sensor.height} sensor",
                )
            if t < t_prev:
                raise OrderError(str(path), line_no, t_prev, t)
            t_prev = t
            yield Event(x=x, y=y, t=t, pol=ON if p == 1 else OFF)


def write_events(events: Iterable[Event], path: str | Path) -> int:
    """Write events in the ``events.txt`` format; returns the event count."""
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for e in events:
            f.write(f"{us_to_seconds(e.t)} {e.x} {e.y} {1 if e.pol == ON else 0}\n")
            count += 1
    return count


# Frames


def _load_image(path: Path, sensor: SensorGeometry, allow_png: bool) -> np.ndarray:
    if not path.is_file():
        raise RecordingNotFoundError(str(path), "frame image")
    try:
        with Image.open(path) as img:
            fmt = img.format
            mode = img.mode
            size = img.size
            pixels = np.asarray(img, dtype=np.uint8).copy() if mode == "L" else None
    except UnidentifiedImageError as e:
        raise UnsupportedImageFormatError(str(path), "not a readable image") from e

    allowed = _PGM_FORMATS | (_PNG_FORMATS if allow_png else set())
    if fmt not in allowed:
        raise UnsupportedImageFormatError(str(path), f"format {fmt} is not enabled")
    if mode != "L" or pixels is None:
        raise UnsupportedImageFormatError(str(path), f"expected 8-bit grayscale, got mode {mode}")
    if size != (sensor.width, sensor.height):
        raise UnsupportedImageFormatError(
            str(path),
            f"image is {size[0]}x{size[1]}, recording is {sensor.width}x{sensor.height}",
        )
    return pixels


def read_frames(
    index_path: str | Path,
    sensor: SensorGeometry | None = None,
    allow_png: bool = True,
) -> Iterator[Keyframe]:
    """Stream keyframes listed in an ``images.txt`` index.

    Image paths are resolved relative to the index's directory.

    Raises:
        RecordingNotFoundError: If the index or an image is missing
        ParseError: On a malformed index line
        OrderError: If frame timestamps regress
        UnsupportedImageFormatError: Wrong format, mode or dimensions
    """
    index_path = Path(index_path)
    sensor = sensor or SensorGeometry()
    if not index_path.is_file():
        raise RecordingNotFoundError(str(index_path), "frame index")

    base = index_path.parent
    t_prev = -1
    with open(index_path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            fields = line.split(maxsplit=1)
            if not fields:
                continue
            if len(fields) != 2:
                raise ParseError(str(index_path), line_no, "expected '<t_seconds> <image_path>'")
            try:
                t = seconds_to_us(fields[0])
            except ValueError as e:
                raise ParseError(str(index_path), line_no, str(e)) from e
            if t < t_prev:
                raise OrderError(str(index_path), line_no, t_prev, t)
            t_prev = t
            pixels = _load_image(base / fields[1].strip(), sensor, allow_png)
            yield Keyframe(t=t, pixels=pixels)


def write_frames(keyframes: Iterable[Keyframe], out_dir: str | Path) -> int:
    """Write keyframes as P5 PGM files plus an ``images.txt`` index."""
    out_dir = Path(out_dir)
    frames_dir = out_dir / FRAMES_DIR
    frames_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(out_dir / FRAMES_INDEX, "w", encoding="utf-8") as index:
        for i, kf in enumerate(keyframes):
            rel = f"{FRAMES_DIR}/frame_{i:08d}.pgm"
            Image.fromarray(np.asarray(kf.pixels, dtype=np.uint8)).save(out_dir / rel)
            index.write(f"{us_to_seconds(kf.t)} {rel}\n")
            count += 1
    return count


# Recordings


def _count_lines(path: Path) -> int:
    if not path.is_file():
        return 0
    with open(path, encoding="utf-8") as f:
        return sum(1 for line in f if line.strip())


def require_recording(input_dir: str | Path) -> Path:
    """Check a recording directory and its event file exist; returns the event file.

    Raises:
        RecordingNotFoundError: If the directory or its event file is missing
    """
    input_dir = Path(input_dir)
    if not input_dir.is_dir():
        raise RecordingNotFoundError(str(input_dir), "recording directory")
    events = input_dir / EVENTS_FILE
    if not events.is_file():
        raise RecordingNotFoundError(str(events), "event file")
    return events


def read_header(input_dir: str | Path, sensor: SensorGeometry | None = None) -> RecordingHeader:
    """Summarise a recording directory (line counts, sensor geometry).

    Reads the whole event file once to count it.

    Raises:
        RecordingNotFoundError: If the directory or its event file is missing
    """
    events = require_recording(input_dir)
    sensor = sensor or SensorGeometry()
    return RecordingHeader(
        width=sensor.width,
        height=sensor.height,
        event_count=_count_lines(events),
        frame_count=_count_lines(Path(input_dir) / FRAMES_INDEX),
    )


def merge_streams(
    events: Iterable[Event], frames: Iterable[Keyframe]
) -> Iterator[Event | Keyframe]:
    """Merge two ordered streams into one non-decreasing stream.

    At equal timestamps keyframes come before events; within each input the
    original order is kept.
    """
    tagged_frames = ((kf.t, 0, kf) for kf in frames)
    tagged_events = ((e.t, 1, e) for e in events)
    for _, _, item in heapq.merge(tagged_frames, tagged_events, key=lambda item: item[:2]):
        yield item


def open_recording(
    input_dir: str | Path, sensor: SensorGeometry | None = None, allow_png: bool = True
) -> Iterator[Event | Keyframe]:
    """Merged event and keyframe stream of a recording directory.

    A missing ``images.txt`` means no keyframes (and so no tracking). The
    event file is read lazily, in a single pass.
    """
    input_dir = Path(input_dir)
    events = read_events(require_recording(input_dir), sensor)
    index = input_dir / FRAMES_INDEX
    frames: Iterable[Keyframe] = (
        read_frames(index, sensor, allow_png) if index.is_file() else iter(())
    )
    if not index.is_file():
        logger.warning("No %s in %s; no keyframes will be processed", FRAMES_INDEX, input_dir)
    return merge_streams(events, frames)


# CSV outputs


def _fmt(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.6f}"


def write_trajectories(records: Iterable[UpdateRecord], path: str | Path) -> int:
    """Write update records as trajectory CSV; returns the row count."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for r in records:
            writer.writerow(
                [r.track_id, r.t, _fmt(r.x), _fmt(r.y), _fmt(r.vx), _fmt(r.vy), _fmt(r.lifetime_s)]
            )
            count += 1
    return count


def read_trajectories(path: str | Path) -> list[UpdateRecord]:
    """Parse a trajectory CSV written by :func:`write_trajectories`."""
    path = Path(path)
    if not path.is_file():
        raise RecordingNotFoundError(str(path), "trajectory file")
    records = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != TRAJECTORY_HEADER:
            raise ParseError(str(path), 1, f"unexpected header {reader.fieldnames}")
        for line_no, row in enumerate(reader, start=2):
            try:
                records.append(
                    UpdateRecord(
                        track_id=int(row["track_id"]),
                        t=int(row["t_us"]),
                        x=float(row["x"]),
                        y=float(row["y"]),
                        vx=float(row["vx"]),
                        vy=float(row["vy"]),
                        lifetime_s=float(row["lifetime_s"]),
                    )
                )
            except (TypeError, ValueError) as e:
                raise ParseError(str(path), line_no, str(e)) from e
    return records


def write_event_corners(corners: Iterable[EventCorner], path: str | Path) -> int:
    """Write matched event-corners as CSV; returns the row count."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(EVENT_CORNER_HEADER)
        for ec in corners:
            writer.writerow(
                [ec.t, ec.x, ec.y, ec.pol, _fmt(ec.score), ec.source_corner.keyframe_t]
            )
            count += 1
    return count


def write_ground_truth(gt: GroundTruth, path: str | Path) -> int:
    """Write ground-truth corner samples as CSV; returns the row count."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(GROUND_TRUTH_HEADER)
        for s in gt.samples:
            writer.writerow([s.corner_id, s.shape, s.t, _fmt(s.x), _fmt(s.y)])
    return len(gt.samples)


def read_ground_truth(path: str | Path) -> GroundTruth:
    """Parse a ground-truth CSV (velocities are not stored and stay empty)."""
    path = Path(path)
    if not path.is_file():
        raise RecordingNotFoundError(str(path), "ground truth file")
    gt = GroundTruth()
    with open(path, encoding="utf-8", newline="") as f:
        for line_no, row in enumerate(csv.DictReader(f), start=2):
            try:
                gt.samples.append(
                    GroundTruthSample(
                        corner_id=int(row["corner_id"]),
                        shape=int(row["shape"]),
                        t=int(row["t_us"]),
                        x=float(row["x"]),
                        y=float(row["y"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as e:
                raise ParseError(str(path), line_no, str(e)) from e
    return gt


def write_scene(scene: dict[str, Any], path: str | Path) -> None:
    """Echo the generator configuration next to a synthetic recording."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(scene, f, indent=2, sort_keys=True)
        f.write("\n")
