"""Matching unit: promote events at frame-corner pixels to event-corners.

For an incoming event at (or, with a tolerance radius, near) an unmatched
frame-corner, the 7x7 L_SAE of the event's polarity is binarized (the N most
recent neighbours plus the centre) and scored with the Harris formula. The
first event whose score clears the threshold becomes the event-corner for
that frame-corner; later events at the pixel are ignored until the next
keyframe re-detects corners. At a keyframe, a corner whose pixel already fired
since the previous keyframe is scored on that latest event right away.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .event_core import (
    MATCH_RADIUS,
    OFF,
    ON,
    SAE,
    BinaryPatch,
    Event,
    binarize_patch,
    extract_patch,
)
from .harris import FrameCorner, StructureTensor, harris_score
from .logger import get_logger

logger = get_logger(__name__)


@dataclass
class MatchConfig:
    """Configuration for the matching unit.

    Attributes:
        N: Number of most recent neighbours kept in the binary L_SAE
        threshold: Minimum binary-patch score for an event-corner
        radius: Spatial tolerance (Chebyshev, px) between event and corner
    """

    N: int = 12
    threshold: float = 1.0
    radius: int = 0


@dataclass(frozen=True)
class EventCorner:
    """The first qualifying event at a frame-corner.

    ``x``/``y`` are the source frame-corner's position.
    """

    x: int
    y: int
    t: int
    pol: int
    score: float
    source_corner: FrameCorner


def score_binary_patch(bp: BinaryPatch, k: float = 0.04) -> float:
    """Harris score of a binary patch at its centre.

    Sobel gradients of the 0/1 grid, summed over the 3x3 window around the
    centre. Only interior cells feed that window, so the border mode of the
    gradient filter never matters.
    """
    grid = bp.bits.astype(np.float64)
    ix = ndimage.sobel(grid, axis=1, mode="nearest")
    iy = ndimage.sobel(grid, axis=0, mode="nearest")
    c = grid.shape[0] // 2
    win = (slice(c - 1, c + 2), slice(c - 1, c + 2))
    tensor = StructureTensor(
        sxx=float((ix[win] * ix[win]).sum()),
        sxy=float((ix[win] * iy[win]).sum()),
        syy=float((iy[win] * iy[win]).sum()),
    )
    return float(harris_score(tensor, k))


class CornerMatcher:
    """Stateful matching unit over the active frame-corner set.

    Must be driven in stream order by the pipeline; scoring itself is pure.

    Example:
        >>> matcher = CornerMatcher(MatchConfig())
        >>> matcher.reset(corners, keyframe.t)
        >>> ec = matcher.match_event(event, sae)  # None -> discard
    """

    def __init__(self, cfg: MatchConfig | None = None, k: float = 0.04):
        self.cfg = cfg or MatchConfig()
        self.k = k
        self._by_pixel: dict[tuple[int, int], list[FrameCorner]] = {}
        self._matched: set[FrameCorner] = set()
        self._corners: list[FrameCorner] = []
        self.keyframe_t: int | None = None

        self.events_seen = 0
        self.events_checked = 0
        self.corners_matched = 0

    def reset(self, corners: list[FrameCorner], t: int) -> None:
        """Install the corners of a new keyframe and clear matched flags."""
        self._corners = list(corners)
        self._matched.clear()
        self._by_pixel.clear()
        r = self.cfg.radius
        for corner in self._corners:
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    self._by_pixel.setdefault((corner.x + dx, corner.y + dy), []).append(corner)
        self.keyframe_t = t

    def pending(self) -> list[FrameCorner]:
        """Corners of the current keyframe without an event-corner yet."""
        return [c for c in self._corners if c not in self._matched]

    def match_event(self, e: Event, sae: SAE) -> EventCorner | None:
        """Run the matching unit for one event (SAE already updated with it).

        Returns:
            The new EventCorner, or None if the event is discarded
        """
        self.events_seen += 1
        candidates = self._by_pixel.get((e.x, e.y))
        if not candidates:
            return None
        corner = next((c for c in candidates if c not in self._matched), None)
        if corner is None:
            return None
        return self._promote(corner, (e.x, e.y), e.t, e.pol, sae)

    def match_recent(self, sae: SAE, since: int) -> list[EventCorner]:
        """Promote corners whose own pixel fired after ``since``.

        A corner on the leading side of a moving edge is detected at a pixel
        that fired shortly before the keyframe and stays silent afterwards.
        Its latest event, if newer than ``since`` (the previous keyframe),
        stands in for the first event after the keyframe. Call right after
        :meth:`reset`.
        """
        found: list[EventCorner] = []
        for corner in self._corners:
            if corner in self._matched:
                continue
            recent = [
                (t, pol)
                for pol in (ON, OFF)
                if (t := sae.get(corner.x, corner.y, pol)) is not None and t > since
            ]
            if not recent:
                continue
            t, pol = max(recent)
            ec = self._promote(corner, (corner.x, corner.y), t, pol, sae)
            if ec is not None:
                found.append(ec)
        return found

    def _promote(
        self, corner: FrameCorner, pixel: tuple[int, int], t: int, pol: int, sae: SAE
    ) -> EventCorner | None:
        if not sae.sensor.fits_window(pixel[0], pixel[1], MATCH_RADIUS):
            return None

        self.events_checked += 1
        patch = extract_patch(sae, pixel, MATCH_RADIUS, pol)
        score = score_binary_patch(binarize_patch(patch, self.cfg.N), self.k)
        if score <= self.cfg.threshold:
            return None

        self._matched.add(corner)
        self.corners_matched += 1
        return EventCorner(x=corner.x, y=corner.y, t=t, pol=pol, score=score, source_corner=corner)


def match_event(
    e: Event,
    corners: list[FrameCorner],
    sae: SAE,
    cfg: MatchConfig | None = None,
    matched: set[FrameCorner] | None = None,
    k: float = 0.04,
) -> EventCorner | None:
    """Stateless form of the matching unit.

    ``matched`` holds the corners already promoted since the last keyframe;
    it is updated in place when a new event-corner is returned.
    """
    matcher = CornerMatcher(cfg, k)
    matcher.reset(corners, corners[0].keyframe_t if corners else 0)
    if matched:
        matcher._matched.update(matched)
    result = matcher.match_event(e, sae)
    if result is not None and matched is not None:
        matched.add(result.source_corner)
    return result
