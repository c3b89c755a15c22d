"""Tests for support collection and randomized-Hough plane fitting."""

import math

import numpy as np
import pytest

from evtrack.errors import (
    BorderViolationError,
    DegenerateTripleError,
    InsufficientSupportError,
    NoConsensusError,
)
from evtrack.event_core import SAE
from evtrack.life_tracker import velocity
from evtrack.plane_rht import (
    HoughAccumulator,
    PlaneParams,
    RhtConfig,
    SupportConfig,
    SupportPoints,
    collect_support,
    hough_params,
    plane_residuals,
    refine_plane,
    rht_fit,
    vote_plane,
)
from tests.fixtures import edge_support, plane_support

SPEEDS = (20.0, 50.0, 100.0, 200.0)
DIRECTIONS = [
    (1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0),
    (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0),
]


def _velocity_grid() -> list[tuple[float, float]]:
    grid = []
    for speed in SPEEDS:
        for dx, dy in DIRECTIONS:
            norm = math.hypot(dx, dy)
            grid.append((speed * dx / norm, speed * dy / norm))
    return grid


def _relative_error(plane: PlaneParams, vx: float, vy: float) -> float:
    v = velocity(plane)
    return math.hypot(v.vx - vx, v.vy - vy) / math.hypot(vx, vy)


def _support_with_collinear_row() -> SupportPoints:
    """Corner plus eight points on t = 0.01x + 0.004y, four of them on the row y = 0."""
    xy = [(1, 0), (2, 0), (-1, 0), (-2, 0), (0, 1), (1, 2), (-1, 1), (2, -1)]
    rows = [(0.0, 0.0, 0.0)] + [(x, y, 0.01 * x + 0.004 * y) for x, y in xy]
    return SupportPoints.from_points(rows)


class TestHoughParams:
    """Tests for the plane parameters of a triple."""

    def test_plane_parallel_to_image(self):
        """Three points at t=0 give the t-axis normal."""
        theta, phi, rho = hough_params((0, 0, 0), (1, 0, 0), (0, 1, 0))
        assert phi == pytest.approx(0.0)
        assert rho == pytest.approx(0.0)
        assert 0.0 <= theta < 2 * math.pi

    def test_rho_is_distance_of_plane(self):
        """rho is the signed distance of the plane from the origin."""
        _, phi, rho = hough_params((0, 0, 2), (1, 0, 2), (0, 1, 2))
        assert abs(rho) == pytest.approx(2.0)
        assert phi in (pytest.approx(0.0), pytest.approx(math.pi))

    def test_collinear_triple_rejected(self):
        """Collinear points raise DegenerateTripleError."""
        with pytest.raises(DegenerateTripleError):
            hough_params((0, 0, 0), (1, 1, 1), (2, 2, 2))

    def test_worked_example_through_origin(self):
        """The plane t = x has normal (-1, 0, 1)/sqrt(2) for this point order."""
        theta, phi, rho = hough_params((0, 0, 0), (1, 0, 1), (0, 1, 0))
        assert theta == pytest.approx(math.pi)
        assert phi == pytest.approx(math.pi / 4)
        assert rho == pytest.approx(0.0, abs=1e-12)

    def test_worked_example_offset(self):
        """Shifting the plane to t = x + 1 keeps the angles and moves rho to 1/sqrt(2)."""
        theta, phi, rho = hough_params((0, 0, 1), (1, 0, 2), (0, 1, 1))
        assert theta == pytest.approx(math.pi)
        assert phi == pytest.approx(math.pi / 4)
        assert rho == pytest.approx(1 / math.sqrt(2))

    def test_random_planes_pass_through_their_points(self, rng):
        """Every point of a random plane lies on the plane recovered from three of them."""
        for _ in range(200):
            a, b = rng.normal(size=2)
            c = rng.uniform(0.5, 2.0)
            rho = rng.normal()
            xy = rng.uniform(-2, 2, size=(10, 2))
            t = (rho - a * xy[:, 0] - b * xy[:, 1]) / c
            points = np.column_stack([xy, t])
            try:
                theta, phi, r = hough_params(points[0], points[1], points[2])
            except DegenerateTripleError:
                continue
            unit = np.array(
                [math.sin(phi) * math.cos(theta), math.sin(phi) * math.sin(theta), math.cos(phi)]
            )
            assert np.allclose(points @ unit - r, 0.0, atol=1e-9)


class TestPlaneParams:
    """Tests for PlaneParams normalisation."""

    def test_from_normal_is_unit_and_canonical(self):
        """The normal is normalised and flipped so that c >= 0."""
        plane = PlaneParams.from_normal((0.0, 3.0, -4.0), 10.0)
        assert np.linalg.norm(plane.normal) == pytest.approx(1.0)
        assert plane.c == pytest.approx(0.8)
        assert plane.b == pytest.approx(-0.6)
        assert plane.rho == pytest.approx(-2.0)

    def test_zero_normal_rejected(self):
        """A zero normal is not a plane."""
        with pytest.raises(ValueError):
            PlaneParams.from_normal((0.0, 0.0, 0.0), 1.0)

    def test_time_scaling_round_trip(self):
        """unscaled_time undoes scaled_time."""
        plane = PlaneParams.from_normal((1.0, -2.0, 0.5), 0.0)
        back = plane.scaled_time(0.05).unscaled_time(0.05)
        assert np.allclose(back.normal, plane.normal)

    def test_scaling_preserves_velocity(self):
        """Conditioning the time axis does not change the encoded motion."""
        plane = plane_support(100.0, 0.0)
        fitted = rht_fit(plane, time_scale=0.05)
        assert _relative_error(fitted, 100.0, 0.0) < 1e-6

    @pytest.mark.parametrize("scale", [0.5, 2.0, 4.0])
    def test_time_units_change_speed_not_direction(self, scale):
        """Stretching the time axis divides the fitted speed and keeps the direction."""
        pts = plane_support(60.0, -80.0)
        stretched = SupportPoints.from_points(pts.points * np.array([1.0, 1.0, scale]))
        base = velocity(rht_fit(pts))
        scaled = velocity(rht_fit(stretched))
        assert scaled.direction == pytest.approx(base.direction, abs=1e-6)
        assert scaled.speed == pytest.approx(base.speed / scale, rel=1e-6)


class TestHoughAccumulator:
    """Tests for the sparse voting grid."""

    def test_vote_and_peak(self):
        """Votes accumulate per cell and peak() reports the maximum."""
        acc = HoughAccumulator.from_config(RhtConfig(), rho_max=4.0)
        assert acc.peak() == 0
        acc.vote((1, 2, 3))
        assert acc.vote((1, 2, 3)) == 2
        acc.vote((0, 0, 0))
        assert acc.peak() == 2
        acc.reset_cell((1, 2, 3))
        assert acc.peak() == 1

    def test_theta_wraps(self):
        """theta = 2*pi lands in the first bin."""
        acc = HoughAccumulator.from_config(RhtConfig(), rho_max=4.0)
        keys = acc.cells(np.array([2 * math.pi, 0.0]), np.array([0.1, 0.1]), np.array([0.0, 0.0]))
        assert keys[0, 0] == keys[1, 0] == 0

    def test_extremes_are_clipped(self):
        """phi = pi and rho = +rho_max stay inside the grid."""
        cfg = RhtConfig()
        acc = HoughAccumulator.from_config(cfg, rho_max=4.0)
        keys = acc.cells(np.array([0.0]), np.array([math.pi]), np.array([4.0]))
        assert keys[0, 1] == cfg.phi_bins - 1
        assert keys[0, 2] == cfg.rho_bins - 1

    def test_cell_centre(self):
        """cell() reports the bin centre and its vote count."""
        acc = HoughAccumulator.from_config(RhtConfig(), rho_max=4.0)
        acc.vote((0, 0, 16))
        cell = acc.cell((0, 0, 16))
        assert cell.votes == 1
        assert cell.theta == pytest.approx(math.pi / 36)
        assert acc.bin_diagonal > 0


class TestCollectSupport:
    """Tests for collect_support."""

    def test_corner_is_origin(self):
        """Point 0 is the corner at (0, 0, 0) and origin keeps sensor coordinates."""
        sae, corner = edge_support(100.0, 0.0)
        pts = collect_support(sae, corner)
        assert np.array_equal(pts.points[0], [0.0, 0.0, 0.0])
        assert pts.origin == corner

    def test_recent_cells_only(self):
        """Only cells inside the 5x5 window and the recency window are kept."""
        sae, corner = edge_support(100.0, 0.0)
        # Edge columns dx = -2..0 are within 20 ms, dx > 0 has not fired yet.
        assert collect_support(sae, corner).count == 15
        assert collect_support(sae, corner, SupportConfig(dt_max_ms=15.0)).count == 10

    def test_points_are_centred_seconds(self):
        """Neighbours carry pixel offsets and time offsets in seconds."""
        sae, corner = edge_support(100.0, 0.0)
        pts = collect_support(sae, corner)
        assert np.all(np.abs(pts.points[:, :2]) <= 2)
        for dx, _, dt in pts.points:
            assert dt == pytest.approx(dx / 100.0)

    def test_insufficient_support(self):
        """A lone corner raises InsufficientSupportError."""
        with pytest.raises(InsufficientSupportError):
            collect_support(SAE(), (50, 50, 1000))

    def test_border_violation(self):
        """The 5x5 window must fit on the sensor."""
        with pytest.raises(BorderViolationError):
            collect_support(SAE(), (1, 50, 1000))


class TestRhtFit:
    """Tests for rht_fit."""

    def test_recovers_exact_planes(self):
        """>= 90% of fits on exact planes are within 10% of the true velocity."""
        grid = _velocity_grid()
        rng = np.random.default_rng(42)
        good = 0
        n = 1000
        for i in range(n):
            vx, vy = grid[i % len(grid)]
            plane = rht_fit(plane_support(vx, vy), rng=rng)
            good += _relative_error(plane, vx, vy) <= 0.1
        assert good >= 0.9 * n

    def test_recovers_planes_with_outliers(self):
        """>= 75% of fits with 20% outliers are within 10% of the true velocity."""
        grid = _velocity_grid()
        rng = np.random.default_rng(7)
        good = 0
        n = 1000
        for i in range(n):
            vx, vy = grid[i % len(grid)]
            pts = plane_support(vx, vy, outlier_fraction=0.2, rng=rng)
            try:
                plane = rht_fit(pts, rng=rng)
            except NoConsensusError:
                continue
            good += _relative_error(plane, vx, vy) <= 0.1
        assert good >= 0.75 * n

    def test_same_seed_same_plane(self):
        """Fits are deterministic for a given seed."""
        pts = plane_support(50.0, -50.0, outlier_fraction=0.2, rng=np.random.default_rng(3))
        a = rht_fit(pts, RhtConfig(seed=9))
        b = rht_fit(pts, RhtConfig(seed=9))
        assert a == b

    def test_too_few_points(self):
        """Supports below min_points raise InsufficientSupportError."""
        pts = SupportPoints.from_points([[0, 0, 0], [1, 0, 0.01], [0, 1, 0.0]])
        with pytest.raises(InsufficientSupportError):
            rht_fit(pts)

    def test_no_consensus(self):
        """An unreachable vote threshold raises NoConsensusError."""
        with pytest.raises(NoConsensusError) as exc_info:
            rht_fit(plane_support(100.0, 0.0), RhtConfig(vote_threshold=10_000))
        assert exc_info.value.iterations == 100

    def test_collinear_triples_do_not_use_budget(self):
        """Supports with a collinear row reach consensus within max_iters votes."""
        cfg = RhtConfig(vote_threshold=4, max_iters=4)
        for seed in range(50):
            result = vote_plane(_support_with_collinear_row(), cfg, rng=np.random.default_rng(seed))
            assert result.iterations == 4
            assert len(result.voters) == 4

    def test_no_consensus_counts_valid_triples(self):
        """The iteration count of a failed vote excludes collinear triples."""
        with pytest.raises(NoConsensusError) as exc_info:
            vote_plane(_support_with_collinear_row(), RhtConfig(vote_threshold=100))
        # 28 pairs of neighbours, 6 of them on the row through the corner
        assert exc_info.value.iterations == 22

    def test_multi_plane_skips_collinear_triples(self):
        """The multi-plane variant also counts only non-collinear triples."""
        cfg = RhtConfig(vote_threshold=4, max_iters=4, multi_plane=True)
        for seed in range(50):
            result = vote_plane(_support_with_collinear_row(), cfg, rng=np.random.default_rng(seed))
            assert result.iterations == 4

    def test_multi_plane_variant(self):
        """The delete-and-continue variant also recovers an exact plane."""
        plane = rht_fit(plane_support(0.0, 80.0), RhtConfig(multi_plane=True))
        assert _relative_error(plane, 0.0, 80.0) < 0.01

    def test_vote_result_reports_voters(self):
        """The winning cell has at least vote_threshold voters."""
        result = vote_plane(plane_support(100.0, 0.0), RhtConfig())
        assert result.cell.votes >= 3
        assert len(result.voters) >= 3
        assert 1 <= result.iterations <= 100


class TestRefinePlane:
    """Tests for plane_residuals and refine_plane."""

    def test_exact_plane_has_zero_residuals(self):
        """Every point of an exact support lies on its plane."""
        pts = plane_support(100.0, 0.0)
        plane = PlaneParams.from_normal((-100.0, 0.0, 10_000.0), 0.0)
        assert np.allclose(plane_residuals(pts, plane, 0.05), 0.0, atol=1e-9)

    def test_refinement_corrects_coarse_plane(self):
        """TLS over the inliers moves a slightly-off plane onto the data."""
        pts = plane_support(100.0, 0.0)
        coarse = PlaneParams.from_normal((-110.0, 5.0, 10_000.0), 0.0)
        refined = refine_plane(pts, coarse, eps=0.2, time_scale=0.05)
        assert _relative_error(refined, 100.0, 0.0) < 1e-6

    def test_too_few_inliers_keeps_coarse(self):
        """With fewer than three inliers the coarse plane is returned."""
        pts = plane_support(100.0, 0.0)
        coarse = PlaneParams.from_normal((1.0, 1.0, 0.0), 50.0)
        assert refine_plane(pts, coarse, eps=1e-6, time_scale=0.05) is coarse
