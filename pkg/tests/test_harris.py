"""Tests for Harris corner detection on keyframes."""

import numpy as np
import pytest

from evtrack.errors import ImageTooSmallError
from evtrack.event_core import CORNER_MARGIN, Keyframe
from evtrack.harris import (
    HarrisConfig,
    StructureTensor,
    detect_corners,
    gradients,
    harris_response,
    harris_score,
    structure_tensor,
)


def _square_frame(x0=60, y0=70, size=40, t=0) -> Keyframe:
    pixels = np.full((180, 240), 20, dtype=np.uint8)
    pixels[y0 : y0 + size, x0 : x0 + size] = 200
    return Keyframe(t=t, pixels=pixels)


class TestHarrisScore:
    """Tests for the Harris score formula."""

    def test_matches_eigenvalue_form(self, rng):
        """det - k*trace^2 equals l1*l2 - k*(l1+l2)^2 for PSD tensors."""
        n = 100_000
        k = 0.04
        a = rng.normal(size=(n, 2, 2))
        m = a @ np.transpose(a, (0, 2, 1))
        tensor = StructureTensor(sxx=m[:, 0, 0], sxy=m[:, 0, 1], syy=m[:, 1, 1])
        score = harris_score(tensor, k)

        eig = np.linalg.eigvalsh(m)
        expected = eig[:, 0] * eig[:, 1] - k * (eig[:, 0] + eig[:, 1]) ** 2
        scale = np.maximum(np.abs(expected), np.abs(eig).max(axis=1) ** 2)
        assert np.all(np.abs(score - expected) <= 1e-9 * scale)

    def test_flat_tensor_scores_zero(self):
        """A zero structure tensor has zero score."""
        assert harris_score(StructureTensor(0.0, 0.0, 0.0), 0.04) == 0.0

    def test_edge_scores_negative(self):
        """A one-directional gradient (edge) is penalised."""
        assert harris_score(StructureTensor(100.0, 0.0, 0.0), 0.04) < 0


class TestGradients:
    """Tests for gradient and structure-tensor computation."""

    def test_constant_image_has_no_gradient(self):
        """A flat image yields zero gradients everywhere, borders included."""
        field = gradients(np.full((10, 12), 77.0))
        assert not field.ix.any()
        assert not field.iy.any()

    def test_vertical_edge_is_horizontal_gradient(self):
        """A vertical step produces ix only."""
        img = np.zeros((9, 9))
        img[:, 5:] = 100.0
        field = gradients(img)
        assert field.ix[4, 4] > 0
        assert field.iy[4, 4] == 0

    def test_structure_tensor_shapes(self):
        """Window sums keep the image shape."""
        tensor = structure_tensor(gradients(np.eye(8) * 50))
        assert tensor.sxx.shape == (8, 8)

    def test_tiny_image_rejected(self):
        """Images below 3x3 raise ImageTooSmallError."""
        with pytest.raises(ImageTooSmallError):
            harris_response(np.zeros((2, 5)))


class TestDetectCorners:
    """Tests for detect_corners."""

    def test_finds_square_corners(self):
        """The four strongest corners of a bright square are its vertices."""
        corners = detect_corners(_square_frame(), HarrisConfig(max_corners=4))
        assert len(corners) == 4
        expected = [(60, 70), (99, 70), (60, 109), (99, 109)]
        for ex, ey in expected:
            assert any(abs(c.x - ex) <= 1 and abs(c.y - ey) <= 1 for c in corners)

    def test_sorted_by_descending_score(self):
        """Corners are returned strongest first."""
        corners = detect_corners(_square_frame())
        scores = [c.score for c in corners]
        assert scores == sorted(scores, reverse=True)

    def test_keyframe_timestamp_propagates(self):
        """Every corner carries its keyframe's timestamp."""
        corners = detect_corners(_square_frame(t=41_667))
        assert corners
        assert all(c.keyframe_t == 41_667 for c in corners)

    def test_max_corners(self):
        """At most max_corners corners are kept."""
        assert len(detect_corners(_square_frame(), HarrisConfig(max_corners=2))) == 2

    def test_flat_frame_has_no_corners(self):
        """A uniform frame yields nothing."""
        kf = Keyframe(t=0, pixels=np.full((180, 240), 128, dtype=np.uint8))
        assert detect_corners(kf) == []

    def test_border_margin(self):
        """Corners of a square touching the border are suppressed near it."""
        corners = detect_corners(_square_frame(x0=0, y0=0, size=30), HarrisConfig(max_corners=50))
        for c in corners:
            assert CORNER_MARGIN <= c.x < 240 - CORNER_MARGIN
            assert CORNER_MARGIN <= c.y < 180 - CORNER_MARGIN

    def test_accepted_corners_are_separated(self):
        """No two accepted corners are 8-neighbours."""
        corners = detect_corners(_square_frame(), HarrisConfig(max_corners=50))
        for i, a in enumerate(corners):
            for b in corners[i + 1 :]:
                assert max(abs(a.x - b.x), abs(a.y - b.y)) > 1

    def test_absolute_threshold(self):
        """An absolute threshold above the peak rejects every candidate."""
        kf = _square_frame()
        peak = float(harris_response(kf).max())
        assert detect_corners(kf, HarrisConfig(threshold_abs=peak * 2)) == []


class TestRotation:
    """Quarter-turn behaviour of the detector."""

    def _frame(self) -> Keyframe:
        pixels = np.full((180, 240), 20, dtype=np.uint8)
        pixels[70:94, 60:120] = 200
        return Keyframe(t=0, pixels=pixels)

    def test_response_rotates_with_the_image(self):
        """The score map of a rotated frame is the rotated score map."""
        kf = self._frame()
        rotated = harris_response(np.rot90(kf.pixels))
        assert np.allclose(rotated, np.rot90(harris_response(kf)), rtol=1e-9, atol=1e-6)

    def test_corners_rotate_with_the_image(self):
        """Corners of a rotated rectangle are the rotated corners, within a pixel."""
        kf = self._frame()
        width = kf.width
        corners = detect_corners(kf, HarrisConfig(max_corners=4))
        turned = detect_corners(
            Keyframe(t=0, pixels=np.ascontiguousarray(np.rot90(kf.pixels))),
            HarrisConfig(max_corners=4),
        )
        assert len(corners) == len(turned) == 4
        # np.rot90 maps column x, row y to column y, row width - 1 - x.
        expected = [(c.y, width - 1 - c.x) for c in corners]
        for ex, ey in expected:
            assert any(abs(c.x - ex) <= 1 and abs(c.y - ey) <= 1 for c in turned)
