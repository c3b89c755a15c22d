"""Tests for the matching unit (frame-corner -> event-corner promotion)."""

import numpy as np

from evtrack.event_core import OFF, ON, SAE, BinaryPatch, Event
from evtrack.harris import FrameCorner
from evtrack.matching import CornerMatcher, MatchConfig, match_event, score_binary_patch


def _bits(cells: list[tuple[int, int]]) -> BinaryPatch:
    bits = np.zeros((7, 7), dtype=np.uint8)
    for r, c in cells:
        bits[r, c] = 1
    return BinaryPatch(bits=bits)


def _fill_block(sae: SAE, cols: range, rows: range, t: int, pol: int = ON) -> None:
    for y in rows:
        for x in cols:
            sae.update(Event(x=x, y=y, t=t, pol=pol))


class TestScoreBinaryPatch:
    """Tests for the binary-patch Harris score."""

    def test_empty_patch_scores_zero(self):
        """No ones, no gradient, zero score."""
        assert score_binary_patch(_bits([])) == 0.0

    def test_block_corner_scores_high(self):
        """The corner of a 2x4 block of recent events is a strong corner."""
        cells = [(r, c) for r in range(3, 7) for c in (2, 3)]
        assert score_binary_patch(_bits(cells)) > 1000.0

    def test_full_patch_scores_zero(self):
        """An all-ones patch has no gradient around its centre."""
        assert score_binary_patch(BinaryPatch(bits=np.ones((7, 7), dtype=np.uint8))) == 0.0

    def test_straight_edge_scores_low(self):
        """A straight edge through the patch is not a corner."""
        cells = [(r, c) for r in range(7) for c in range(4)]
        assert score_binary_patch(_bits(cells)) < 1.0


class TestCornerMatcher:
    """Tests for the stateful CornerMatcher."""

    def _corner_sae(self, t: int = 20_000) -> SAE:
        sae = SAE()
        _fill_block(sae, range(99, 101), range(70, 74), t - 10_000)
        _fill_block(sae, range(101, 102), range(70, 74), t)
        return sae

    def test_event_away_from_corners_is_discarded(self):
        """Events not at a frame-corner pixel never reach scoring."""
        matcher = CornerMatcher()
        matcher.reset([FrameCorner(x=101, y=70, score=1.0, keyframe_t=0)], 0)
        sae = self._corner_sae()
        assert matcher.match_event(Event(x=120, y=70, t=20_000, pol=ON), sae) is None
        assert matcher.events_seen == 1
        assert matcher.events_checked == 0

    def test_corner_event_becomes_event_corner(self):
        """An event at a frame-corner with a corner-like L_SAE is promoted."""
        corner = FrameCorner(x=101, y=70, score=1.0, keyframe_t=0)
        matcher = CornerMatcher()
        matcher.reset([corner], 0)
        ec = matcher.match_event(Event(x=101, y=70, t=20_000, pol=ON), self._corner_sae())
        assert ec is not None
        assert (ec.x, ec.y, ec.t, ec.pol) == (101, 70, 20_000, ON)
        assert ec.source_corner == corner
        assert ec.score > 1.0
        assert matcher.corners_matched == 1
        assert matcher.pending() == []

    def test_only_first_event_is_promoted(self):
        """Later events at a matched corner are ignored until the next keyframe."""
        corner = FrameCorner(x=101, y=70, score=1.0, keyframe_t=0)
        matcher = CornerMatcher()
        matcher.reset([corner], 0)
        sae = self._corner_sae()
        assert matcher.match_event(Event(x=101, y=70, t=20_000, pol=ON), sae) is not None
        assert matcher.match_event(Event(x=101, y=70, t=20_001, pol=ON), sae) is None
        matcher.reset([corner], 41_667)
        assert matcher.match_event(Event(x=101, y=70, t=41_700, pol=ON), sae) is not None

    def test_low_score_is_rejected(self):
        """An event below the score threshold stays unmatched."""
        corner = FrameCorner(x=101, y=70, score=1.0, keyframe_t=0)
        matcher = CornerMatcher(MatchConfig(threshold=1e9))
        matcher.reset([corner], 0)
        assert matcher.match_event(Event(x=101, y=70, t=20_000, pol=ON), self._corner_sae()) is None
        assert matcher.events_checked == 1
        assert matcher.pending() == [corner]

    def test_polarity_plane_is_respected(self):
        """An OFF event is scored on the OFF plane only (a lone event here)."""
        corner = FrameCorner(x=101, y=70, score=1.0, keyframe_t=0)
        matcher = CornerMatcher(MatchConfig(threshold=500.0))
        matcher.reset([corner], 0)
        sae = self._corner_sae()
        sae.update(Event(x=101, y=70, t=20_000, pol=OFF))
        assert matcher.match_event(Event(x=101, y=70, t=20_000, pol=OFF), sae) is None
        assert matcher.match_event(Event(x=101, y=70, t=20_000, pol=ON), sae) is not None

    def test_radius_tolerance(self):
        """With radius 1 an event next to the corner pixel can match it."""
        corner = FrameCorner(x=100, y=70, score=1.0, keyframe_t=0)
        strict = CornerMatcher(MatchConfig(radius=0))
        strict.reset([corner], 0)
        loose = CornerMatcher(MatchConfig(radius=1))
        loose.reset([corner], 0)
        sae = self._corner_sae()
        e = Event(x=101, y=70, t=20_000, pol=ON)
        assert strict.match_event(e, sae) is None
        ec = loose.match_event(e, sae)
        assert ec is not None
        assert (ec.x, ec.y) == (100, 70)

    def test_window_off_sensor_is_discarded(self):
        """Corners too close to the border for the 7x7 window never match."""
        corner = FrameCorner(x=1, y=1, score=1.0, keyframe_t=0)
        matcher = CornerMatcher()
        matcher.reset([corner], 0)
        sae = SAE()
        sae.update(Event(x=1, y=1, t=5, pol=ON))
        assert matcher.match_event(Event(x=1, y=1, t=5, pol=ON), sae) is None
        assert matcher.events_checked == 0

    def test_events_outside_the_radius_never_match(self, rng):
        """An event-corner always comes from an event within the radius of its corner."""
        corners = [
            FrameCorner(x=int(x), y=int(y), score=1.0, keyframe_t=0)
            for x, y in zip(rng.integers(10, 230, 20), rng.integers(10, 170, 20), strict=True)
        ]
        matcher = CornerMatcher(MatchConfig(radius=1, threshold=-1e12))
        matcher.reset(corners, 0)
        sae = SAE()
        for t in range(1, 10_001):
            e = Event(x=int(rng.integers(0, 240)), y=int(rng.integers(0, 180)), t=t, pol=ON)
            sae.update(e)
            near = [c for c in matcher.pending() if max(abs(c.x - e.x), abs(c.y - e.y)) <= 1]
            ec = matcher.match_event(e, sae)
            if ec is None:
                assert not near
            else:
                assert ec.source_corner in near
                assert ec.t == t

    def test_recent_event_promotes_at_keyframe(self):
        """A corner pixel that fired after the previous keyframe is promoted on reset."""
        corner = FrameCorner(x=101, y=70, score=1.0, keyframe_t=25_000)
        matcher = CornerMatcher()
        matcher.reset([corner], 25_000)
        found = matcher.match_recent(self._corner_sae(), since=0)
        assert len(found) == 1
        assert (found[0].x, found[0].y, found[0].t, found[0].pol) == (101, 70, 20_000, ON)
        assert matcher.pending() == []

    def test_events_before_previous_keyframe_are_ignored(self):
        """Only firings newer than ``since`` count."""
        corner = FrameCorner(x=101, y=70, score=1.0, keyframe_t=25_000)
        matcher = CornerMatcher()
        matcher.reset([corner], 25_000)
        assert matcher.match_recent(self._corner_sae(), since=20_000) == []
        assert matcher.pending() == [corner]
        assert matcher.events_checked == 0


class TestMatchEventFunction:
    """Tests for the stateless match_event."""

    def test_updates_matched_set(self):
        """The promoted corner is added to the caller's matched set."""
        corner = FrameCorner(x=101, y=70, score=1.0, keyframe_t=0)
        sae = SAE()
        _fill_block(sae, range(99, 101), range(70, 74), 10_000)
        _fill_block(sae, range(101, 102), range(70, 74), 20_000)
        matched: set[FrameCorner] = set()
        e = Event(x=101, y=70, t=20_000, pol=ON)
        assert match_event(e, [corner], sae, matched=matched) is not None
        assert matched == {corner}
        assert match_event(e, [corner], sae, matched=matched) is None
