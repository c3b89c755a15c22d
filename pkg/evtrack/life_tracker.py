"""Asynchronous life-tracking of corners between keyframes.

Every event that lands inside the 5x5 window of an active track triggers a
plane fit on its SAE neighbourhood. The plane's normal gives the corner
velocity, the velocity gives the lifetime (time to move one pixel), and the
track's sub-pixel position is advanced by ``velocity * dt`` since the last
update. Keyframes re-anchor tracks to fresh Harris detections.

Track states:

    PENDING --fit ok--> ACTIVE --silence / repeated fit failures--> STALE
       ^                   |                                           |
       +----- keyframe ----+------------- keyframe (continued) --------+
    any state --unmatched at keyframe / leaves the sensor--> LOST
"""

from __future__ import annotations

import math
from collections.abc import Callable
from contextlib import AbstractContextManager, nullcontext
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import BorderViolationError, FitError, StationarySurfaceError
from .event_core import SAE, TRACK_RADIUS, Event, SensorGeometry
from .harris import FrameCorner
from .logger import get_logger
from .matching import EventCorner
from .plane_rht import PlaneParams, RhtConfig, SupportConfig, collect_support, rht_fit

logger = get_logger(__name__)

REFIT_POLICIES = ("event", "lifetime")


class TrackState(Enum):
    """Lifecycle state of a tracked corner."""

    PENDING = "pending"
    ACTIVE = "active"
    STALE = "stale"
    LOST = "lost"


@dataclass
class TrackConfig:
    """Configuration for the life tracker.

    Attributes:
        kappa: A track goes stale after kappa * lifetime without an update
        r_assoc: Keyframe association radius in pixels
        max_failures: Consecutive failed fits before a track goes stale
        sweep_us: Minimum stream time between two staleness sweeps
        refit: "event" refits on every in-window event, "lifetime" only once
            the current lifetime has elapsed since the last fit
    """

    kappa: float = 3.0
    r_assoc: float = 3.0
    max_failures: int = 2
    sweep_us: int = 1000
    refit: str = "event"


@dataclass(frozen=True)
class Velocity:
    """Image-plane velocity in pixels per second."""

    vx: float
    vy: float

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)

    @property
    def direction(self) -> float:
        """Direction angle in radians."""
        return math.atan2(self.vy, self.vx)


@dataclass(frozen=True)
class UpdateRecord:
    """One asynchronous position update of a track (a trajectory CSV row)."""

    track_id: int
    t: int
    x: float
    y: float
    vx: float
    vy: float
    lifetime_s: float


@dataclass
class TrackedCorner:
    """State of one tracked corner.

    Attributes:
        id: Track identifier
        x: Sub-pixel column
        y: Sub-pixel row
        vel: Current velocity estimate (None until the first successful fit)
        lifetime: Current lifetime in seconds
        last_event_t: Time (microseconds) the position refers to: the last update,
            or the anchoring keyframe while PENDING
        state: Lifecycle state
        updates_since_keyframe: Updates emitted since the last keyframe
        source_corner: Frame-corner the track is currently anchored to
        armed: True once the source corner has been matched by an event-corner
        failures: Consecutive failed fits
        last_fit_t: Timestamp of the last successful fit
        active_in_interval: The track was ACTIVE at some point since the last keyframe
    """

    id: int
    x: float
    y: float
    source_corner: FrameCorner
    last_event_t: int
    vel: Velocity | None = None
    lifetime: float | None = None
    state: TrackState = TrackState.PENDING
    updates_since_keyframe: int = 0
    armed: bool = False
    failures: int = 0
    last_fit_t: int | None = None
    active_in_interval: bool = False

    @property
    def pixel(self) -> tuple[int, int]:
        """Reported pixel: the rounded sub-pixel position."""
        return int(round(self.x)), int(round(self.y))

    def record(self) -> UpdateRecord:
        vel = self.vel or Velocity(0.0, 0.0)
        return UpdateRecord(
            track_id=self.id,
            t=self.last_event_t,
            x=self.x,
            y=self.y,
            vx=vel.vx,
            vy=vel.vy,
            lifetime_s=self.lifetime if self.lifetime is not None else math.inf,
        )


def velocity(plane: PlaneParams, eps: float = 1e-12) -> Velocity:
    """Velocity encoded by a plane a*x + b*y + c*t = rho.

    vx = -c*a / (a^2 + b^2), vy = -c*b / (a^2 + b^2), in px/s for x, y in px
    and t in seconds.

    Raises:
        StationarySurfaceError: If a^2 + b^2 <= eps (no spatial gradient)
    """
    spatial = plane.a * plane.a + plane.b * plane.b
    if spatial <= eps:
        raise StationarySurfaceError(spatial)
    return Velocity(vx=-plane.c * plane.a / spatial, vy=-plane.c * plane.b / spatial)


def lifetime(v: Velocity) -> float:
    """Time in seconds for the corner to move to one of its 8 neighbours."""
    dominant = max(abs(v.vx), abs(v.vy))
    if dominant <= 0.0:
        raise StationarySurfaceError(0.0)
    return 1.0 / dominant


TransitionHook = Callable[[str, TrackedCorner], None]


@dataclass
class TrackerStats:
    """Per-run accounting kept by the tracker."""

    updates_per_interval: list[int] = field(default_factory=list)
    fits_ok: int = 0
    fits_failed: int = 0
    updates_emitted: int = 0
    tracks_created: int = 0
    max_frame_break: float = 0.0
    max_event_step: float = 0.0


class LifeTracker:
    """Stream-order tracker state machine.

    The driver calls :meth:`on_keyframe` for every keyframe,
    :meth:`on_event_corner` for every new event-corner and :meth:`on_event`
    for every event (after the SAE update). Updates are returned to the
    caller in emission order.

    Example:
        >>> tracker = LifeTracker(sensor)
        >>> tracker.on_keyframe(corners, keyframe.t)
        >>> records = tracker.on_event(event, sae)
    """

    def __init__(
        self,
        sensor: SensorGeometry | None = None,
        cfg: TrackConfig | None = None,
        support: SupportConfig | None = None,
        rht: RhtConfig | None = None,
        on_transition: TransitionHook | None = None,
    ):
        self.sensor = sensor or SensorGeometry()
        self.cfg = cfg or TrackConfig()
        self.support = support or SupportConfig()
        self.rht = rht or RhtConfig()
        self.on_transition = on_transition
        self.rng = np.random.default_rng(self.rht.seed)
        self.stats = TrackerStats()

        self.tracks: dict[int, TrackedCorner] = {}
        self._by_corner: dict[FrameCorner, int] = {}
        self._window_index: dict[tuple[int, int], set[int]] = {}
        self._indexed_at: dict[int, tuple[int, int]] = {}
        self._next_id = 0
        self._next_sweep: int | None = None

        # Wraps every plane fit; the benchmark swaps in a timer.
        self.fit_timer: Callable[[], AbstractContextManager[object]] = nullcontext

    # Public API

    def live_tracks(self) -> list[TrackedCorner]:
        return [t for t in self.tracks.values() if t.state is not TrackState.LOST]

    def on_keyframe(self, corners: list[FrameCorner], t: int) -> None:
        """Re-anchor tracks to the detections of a new keyframe.

        Live tracks and detections are associated by minimum total distance
        (Hungarian assignment) gated at ``r_assoc``. Continued ACTIVE tracks
        stay ACTIVE and snap to their detection; continued STALE or PENDING
        tracks wait for a new event-corner. Unmatched tracks are lost and
        unmatched detections open new PENDING tracks.
        """
        self.expire(t)
        self._archive_interval()

        live = self.live_tracks()
        matched_tracks: set[int] = set()
        matched_corners: set[int] = set()
        if live and corners:
            tx = np.array([[tr.x, tr.y] for tr in live])
            cx = np.array([[c.x, c.y] for c in corners], dtype=np.float64)
            cost = np.linalg.norm(tx[:, None, :] - cx[None, :, :], axis=2)
            rows, cols = linear_sum_assignment(cost)
            for r, c in zip(rows, cols, strict=True):
                if cost[r, c] > self.cfg.r_assoc:
                    continue
                self._continue(live[r], corners[c], t)
                matched_tracks.add(live[r].id)
                matched_corners.add(c)

        for track in live:
            if track.id not in matched_tracks:
                self._lose(track, "unmatched at keyframe")

        self._by_corner = {
            self.tracks[tid].source_corner: tid for tid in matched_tracks
        }
        for i, corner in enumerate(corners):
            if i not in matched_corners:
                self._create(corner, t)

        self._next_sweep = t + self.cfg.sweep_us

    def on_event_corner(self, ec: EventCorner, sae: SAE) -> list[UpdateRecord]:
        """Arm the track anchored at ``ec.source_corner`` and try to activate it."""
        tid = self._by_corner.get(ec.source_corner)
        if tid is None:
            return []
        track = self.tracks[tid]
        track.armed = True
        if track.state is not TrackState.PENDING:
            return []
        record = self._try_activate(track, (ec.x, ec.y, ec.t), sae)
        return [record] if record is not None else []

    def on_event(
        self, e: Event, sae: SAE, skip: set[int] | None = None
    ) -> list[UpdateRecord]:
        """Update every ACTIVE (or armed PENDING) track whose window holds ``e``.

        ``sae`` must already contain ``e``. Tracks in ``skip`` (already updated
        by this event through :meth:`on_event_corner`) are left alone.
        """
        if self._next_sweep is not None and e.t >= self._next_sweep:
            self.expire(e.t)
            self._next_sweep = e.t + self.cfg.sweep_us

        ids = self._window_index.get((e.x, e.y))
        if not ids:
            return []

        records: list[UpdateRecord] = []
        for tid in sorted(ids):
            if skip and tid in skip:
                continue
            track = self.tracks[tid]
            if track.state is TrackState.ACTIVE:
                record = self._update(track, e, sae)
            elif track.state is TrackState.PENDING and track.armed:
                record = self._try_activate(track, (e.x, e.y, e.t), sae)
            else:
                record = None
            if record is not None:
                records.append(record)
        return records

    def expire(self, t: int) -> None:
        """Mark ACTIVE tracks silent for more than kappa * lifetime as STALE."""
        for track in self.tracks.values():
            if track.state is not TrackState.ACTIVE or track.lifetime is None:
                continue
            if t - track.last_event_t > self.cfg.kappa * track.lifetime * 1e6:
                self._stale(track, "silent")

    def finish(self, t: int) -> None:
        """Close the run at stream time ``t``.

        Expires silent tracks and archives the update counts of the interval
        after the last keyframe. Call once, after the last event.
        """
        self.expire(t)
        self._archive_interval()

    # Internals

    def _fit(self, corner: tuple[int, int, int], sae: SAE) -> tuple[Velocity, float] | None:
        try:
            pts = collect_support(sae, corner, self.support, TRACK_RADIUS)
            plane = rht_fit(
                pts,
                self.rht,
                time_scale=self.support.dt_max_s,
                rng=self.rng,
                min_points=self.support.min_points,
            )
            vel = velocity(plane)
            tau = lifetime(vel)
        except (FitError, BorderViolationError):
            self.stats.fits_failed += 1
            return None
        self.stats.fits_ok += 1
        return vel, tau

    def _timed_fit(self, corner: tuple[int, int, int], sae: SAE) -> tuple[Velocity, float] | None:
        with self.fit_timer():
            return self._fit(corner, sae)

    def _try_activate(
        self, track: TrackedCorner, corner: tuple[int, int, int], sae: SAE
    ) -> UpdateRecord | None:
        result = self._timed_fit(corner, sae)
        if result is None:
            return None
        track.vel, track.lifetime = result
        # The position was taken at the anchoring keyframe; move it to the
        # activation time. Event-corners older than the keyframe leave it as is.
        t = max(corner[2], track.last_event_t)
        dt = (t - track.last_event_t) / 1e6
        dx, dy = track.vel.vx * dt, track.vel.vy * dt
        track.x += dx
        track.y += dy
        track.state = TrackState.ACTIVE
        track.active_in_interval = True
        track.failures = 0
        track.last_fit_t = t
        track.last_event_t = t
        track.updates_since_keyframe += 1
        self._notify("track_activated", track)
        return self._emit(track, step=math.hypot(dx, dy))

    def _needs_fit(self, track: TrackedCorner, t: int) -> bool:
        if self.cfg.refit == "event" or track.lifetime is None or track.last_fit_t is None:
            return True
        return (t - track.last_fit_t) >= track.lifetime * 1e6

    def _update(self, track: TrackedCorner, e: Event, sae: SAE) -> UpdateRecord:
        if self._needs_fit(track, e.t):
            result = self._timed_fit((e.x, e.y, e.t), sae)
            if result is None:
                track.failures += 1
            else:
                track.vel, track.lifetime = result
                track.failures = 0
                track.last_fit_t = e.t

        assert track.vel is not None
        dt = (e.t - track.last_event_t) / 1e6
        dx, dy = track.vel.vx * dt, track.vel.vy * dt
        track.x += dx
        track.y += dy
        track.last_event_t = e.t
        track.updates_since_keyframe += 1
        record = self._emit(track, step=math.hypot(dx, dy))

        if track.state is TrackState.ACTIVE and track.failures >= self.cfg.max_failures:
            self._stale(track, f"{track.failures} failed fits")
        return record

    def _emit(self, track: TrackedCorner, step: float) -> UpdateRecord:
        self.stats.updates_emitted += 1
        self.stats.max_event_step = max(self.stats.max_event_step, step)
        px, py = track.pixel
        if not self.sensor.fits_window(px, py, TRACK_RADIUS):
            self._lose(track, "left the sensor")
        else:
            self._reindex(track)
        return track.record()

    def _create(self, corner: FrameCorner, t: int) -> TrackedCorner:
        track = TrackedCorner(
            id=self._next_id,
            x=float(corner.x),
            y=float(corner.y),
            source_corner=corner,
            last_event_t=t,
        )
        self._next_id += 1
        self.tracks[track.id] = track
        self._by_corner[corner] = track.id
        self._reindex(track)
        self.stats.tracks_created += 1
        self._notify("track_created", track)
        return track

    def _continue(self, track: TrackedCorner, corner: FrameCorner, t: int) -> None:
        self.stats.max_frame_break = max(
            self.stats.max_frame_break,
            math.hypot(corner.x - track.source_corner.x, corner.y - track.source_corner.y),
        )
        track.x, track.y = float(corner.x), float(corner.y)
        track.source_corner = corner
        track.armed = False
        track.failures = 0
        track.last_event_t = t
        if track.state is TrackState.ACTIVE:
            track.active_in_interval = True
        else:
            track.state = TrackState.PENDING
        self._reindex(track)

    def _stale(self, track: TrackedCorner, reason: str) -> None:
        track.state = TrackState.STALE
        logger.debug("Track %d stale (%s)", track.id, reason)
        self._notify("track_stale", track)

    def _lose(self, track: TrackedCorner, reason: str) -> None:
        track.state = TrackState.LOST
        if track.updates_since_keyframe == 0:
            track.active_in_interval = False
        self._unindex(track)
        logger.debug("Track %d lost (%s)", track.id, reason)
        self._notify("track_lost", track)

    def _archive_interval(self) -> None:
        for track in self.tracks.values():
            if track.active_in_interval:
                self.stats.updates_per_interval.append(track.updates_since_keyframe)
            track.updates_since_keyframe = 0
            track.active_in_interval = track.state is TrackState.ACTIVE

    def _reindex(self, track: TrackedCorner) -> None:
        pixel = track.pixel
        if self._indexed_at.get(track.id) == pixel:
            return
        self._unindex(track)
        px, py = pixel
        r = TRACK_RADIUS
        for y in range(py - r, py + r + 1):
            for x in range(px - r, px + r + 1):
                self._window_index.setdefault((x, y), set()).add(track.id)
        self._indexed_at[track.id] = pixel

    def _unindex(self, track: TrackedCorner) -> None:
        pixel = self._indexed_at.pop(track.id, None)
        if pixel is None:
            return
        px, py = pixel
        r = TRACK_RADIUS
        for y in range(py - r, py + r + 1):
            for x in range(px - r, px + r + 1):
                ids = self._window_index.get((x, y))
                if ids is not None:
                    ids.discard(track.id)
                    if not ids:
                        del self._window_index[(x, y)]

    def _notify(self, kind: str, track: TrackedCorner) -> None:
        if self.on_transition is not None:
            self.on_transition(kind, track)
