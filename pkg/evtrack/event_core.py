"""Core data model: events, keyframes, the surface of active events.

The surface of active events (SAE) keeps, per pixel and per polarity, the
timestamp of the most recent event. Local windows of the SAE are the
spatio-temporal context of both the matching unit (7x7, binarized) and the
plane fit of the tracker (5x5).

Timestamps are integer microseconds everywhere in this module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BorderViolationError, OutOfBoundsError

# Pixels closer than this to any border are never corner candidates. Covers the
# 7x7 matching window and the 5x5 tracking window.
CORNER_MARGIN = 4

MATCH_RADIUS = 3
TRACK_RADIUS = 2

ON = 1
OFF = -1
_POLARITY_INDEX = {ON: 0, OFF: 1}


def polarity_index(pol: int) -> int:
    """Map a polarity (+1/-1) to its SAE plane index."""
    try:
        return _POLARITY_INDEX[pol]
    except KeyError:
        raise ValueError(f"Polarity must be +1 or -1, got {pol!r}") from None


@dataclass(frozen=True)
class SensorGeometry:
    """Pixel geometry of the sensor (DAVIS240 by default)."""

    width: int = 240
    height: int = 180

    def contains(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def fits_window(self, x: int, y: int, radius: int) -> bool:
        """True if the (2r+1)^2 window centred on (x, y) stays on the sensor."""
        return radius <= x < self.width - radius and radius <= y < self.height - radius

    def is_corner_candidate(self, x: int, y: int) -> bool:
        """Border policy for frame-corners."""
        return self.fits_window(x, y, CORNER_MARGIN)


@dataclass(frozen=True, slots=True)
class Event:
    """One asynchronous brightness-change sample.

    Attributes:
        x: Pixel column
        y: Pixel row
        t: Timestamp in microseconds
        pol: Polarity, +1 (brighter) or -1 (darker)
    """

    x: int
    y: int
    t: int
    pol: int


@dataclass(frozen=True)
class Keyframe:
    """A grayscale intensity frame used to (re)detect corners.

    Attributes:
        t: Timestamp in microseconds
        pixels: uint8 array of shape (height, width), row-major
    """

    t: int
    pixels: np.ndarray

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])


@dataclass
class LocalPatch:
    """A (2r+1)x(2r+1) window of one SAE polarity plane."""

    center: tuple[int, int]
    radius: int
    timestamps: np.ndarray
    valid: np.ndarray

    @property
    def side(self) -> int:
        return 2 * self.radius + 1


@dataclass
class BinaryPatch:
    """A LocalPatch reduced to the N most recent neighbours plus the centre."""

    bits: np.ndarray

    @property
    def n_ones(self) -> int:
        return int(self.bits.sum())


class SAE:
    """Surface of active events, one timestamp plane per polarity.

    "Never fired" is tracked by a separate validity mask, so a genuine event at
    t=0 is distinguishable from an untouched pixel.

    Single writer: updates must be applied in stream order. Readers that need
    a stable view across updates should take a :meth:`snapshot`.
    """

    def __init__(self, sensor: SensorGeometry | None = None):
        self.sensor = sensor or SensorGeometry()
        shape = (2, self.sensor.height, self.sensor.width)
        self.timestamps = np.zeros(shape, dtype=np.int64)
        self.valid = np.zeros(shape, dtype=bool)

    def update(self, e: Event) -> None:
        """Store e.t at (e.x, e.y, e.pol) unless a newer timestamp is already there."""
        if not self.sensor.contains(e.x, e.y):
            raise OutOfBoundsError(e.x, e.y, self.sensor.width, self.sensor.height)
        p = polarity_index(e.pol)
        if not self.valid[p, e.y, e.x] or e.t > self.timestamps[p, e.y, e.x]:
            self.timestamps[p, e.y, e.x] = e.t
            self.valid[p, e.y, e.x] = True

    def get(self, x: int, y: int, pol: int) -> int | None:
        p = polarity_index(pol)
        if not self.valid[p, y, x]:
            return None
        return int(self.timestamps[p, y, x])

    def latest(self, x: int, y: int) -> int | None:
        """Most recent timestamp at (x, y) over both polarities."""
        on, off = self.get(x, y, ON), self.get(x, y, OFF)
        if on is None:
            return off
        if off is None:
            return on
        return max(on, off)

    def latest_window(self, x: int, y: int, radius: int) -> tuple[np.ndarray, np.ndarray]:
        """Both-polarity latest timestamps and validity over a square window.

        The caller is responsible for the window fitting on the sensor.
        """
        ys = slice(y - radius, y + radius + 1)
        xs = slice(x - radius, x + radius + 1)
        ts = self.timestamps[:, ys, xs]
        ok = self.valid[:, ys, xs]
        # Invalid cells must not win the max.
        masked = np.where(ok, ts, np.iinfo(np.int64).min)
        return masked.max(axis=0), ok.any(axis=0)

    def snapshot(self) -> SAE:
        copy = SAE(self.sensor)
        copy.timestamps = self.timestamps.copy()
        copy.valid = self.valid.copy()
        return copy

    def clear(self) -> None:
        self.timestamps.fill(0)
        self.valid.fill(False)


def sae_update(sae: SAE, e: Event) -> SAE:
    """Apply one event to the SAE and return it (mutated in place)."""
    sae.update(e)
    return sae


def extract_patch(sae: SAE, center: tuple[int, int], radius: int, pol: int) -> LocalPatch:
    """Copy the (2r+1)^2 window of one polarity plane around ``center``.

    Raises:
        BorderViolationError: If the window would leave the sensor
    """
    x, y = center
    if not sae.sensor.fits_window(x, y, radius):
        raise BorderViolationError(center, radius)
    p = polarity_index(pol)
    ys = slice(y - radius, y + radius + 1)
    xs = slice(x - radius, x + radius + 1)
    return LocalPatch(
        center=(x, y),
        radius=radius,
        timestamps=sae.timestamps[p, ys, xs].copy(),
        valid=sae.valid[p, ys, xs].copy(),
    )


def binarize_patch(patch: LocalPatch, n_recent: int) -> BinaryPatch:
    """Keep the ``n_recent`` most recent valid neighbours plus the centre.

    Ties on timestamp go to the earlier cell in row-major order. With fewer
    than ``n_recent`` valid neighbours every valid neighbour is kept.
    """
    side = patch.side
    ts = patch.timestamps.ravel()
    valid = patch.valid.ravel()
    center = patch.radius * side + patch.radius

    candidates = np.flatnonzero(valid)
    candidates = candidates[candidates != center]
    # lexsort: last key is primary -> newest first, then row-major index.
    order = np.lexsort((candidates, -ts[candidates]))
    chosen = candidates[order[:n_recent]]

    bits = np.zeros(side * side, dtype=np.uint8)
    bits[chosen] = 1
    if valid[center]:
        bits[center] = 1
    return BinaryPatch(bits=bits.reshape(side, side))
