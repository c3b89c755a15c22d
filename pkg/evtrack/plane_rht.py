"""Local spatio-temporal plane fitting by randomized Hough transform.

The support of a fit is the 5x5 SAE neighbourhood of an event-corner,
centred so the corner sits at the origin. Each vote draws the corner plus two
other support points, computes the plane through them,

    v   = (p3 - p1) x (p1 - p2)
    rho = v_hat . p1
    x cos(theta) sin(phi) + y sin(theta) sin(phi) + t cos(phi) = rho

and increments the (theta, phi, rho) cell it falls in. The first cell to reach
the vote threshold wins; its plane is refined by total least squares over the
support points close to it.

Voting works in conditioned coordinates where t is divided by the support
recency window, so pixel and time axes have comparable magnitudes. Planes
returned to callers are in physical units (x, y in px, t in seconds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BorderViolationError,
    DegenerateTripleError,
    InsufficientSupportError,
    NoConsensusError,
)
from .event_core import SAE, TRACK_RADIUS
from .logger import get_logger

logger = get_logger(__name__)

TWO_PI = 2.0 * math.pi
# Multi-plane sampling stops after this many draws per counted triple.
MULTI_PLANE_DRAW_FACTOR = 10


@dataclass
class SupportConfig:
    """Configuration for support-point collection.

    Attributes:
        dt_max_ms: Recency window around the corner's timestamp
        min_points: Minimum support size (corner included) for a fit
    """

    dt_max_ms: float = 50.0
    min_points: int = 5

    @property
    def dt_max_s(self) -> float:
        return self.dt_max_ms / 1000.0


@dataclass
class RhtConfig:
    """Configuration for the randomized Hough transform.

    Attributes:
        vote_threshold: Votes a cell needs to win
        max_iters: Maximum number of non-collinear triples voted per fit
        seed: Seed of the sampling RNG
        theta_bins: Bins over theta in [0, 2*pi)
        phi_bins: Bins over phi in [0, pi]
        rho_bins: Bins over rho in [-rho_max, rho_max]
        refine_eps: Inlier distance (conditioned units) for the refinement
        multi_plane: Follow the full listing (delete p2/p3 on each hit and keep
            sampling) instead of stopping at the first winning cell
        collinear_eps: Triples with |v| below this are degenerate
    """

    vote_threshold: int = 3
    max_iters: int = 100
    seed: int = 42
    theta_bins: int = 36
    phi_bins: int = 18
    rho_bins: int = 32
    refine_eps: float = 0.2
    multi_plane: bool = False
    collinear_eps: float = 1e-9


@dataclass
class SupportPoints:
    """Support of a plane fit, centred on the event-corner.

    Attributes:
        points: (n, 3) array of (x px, y px, t s); row 0 is the corner at the origin
        origin: (x, y, t_us) of the corner in sensor coordinates
    """

    points: np.ndarray
    origin: tuple[int, int, int] = (0, 0, 0)

    @property
    def count(self) -> int:
        return int(self.points.shape[0])

    @classmethod
    def from_points(cls, points: np.ndarray | list) -> SupportPoints:
        return cls(points=np.asarray(points, dtype=np.float64).reshape(-1, 3))


@dataclass(frozen=True)
class HoughCell:
    """One accumulator cell and its vote counter."""

    theta: float
    phi: float
    rho: float
    votes: int


@dataclass(frozen=True)
class PlaneParams:
    """Plane a*x + b*y + c*t = rho with unit normal and c >= 0."""

    a: float
    b: float
    c: float
    rho: float

    @property
    def normal(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])

    @classmethod
    def from_normal(cls, normal: np.ndarray | tuple, rho: float) -> PlaneParams:
        n = np.asarray(normal, dtype=np.float64)
        norm = float(np.linalg.norm(n))
        if norm == 0.0:
            raise ValueError("Plane normal must be non-zero")
        n = n / norm
        rho = rho / norm
        if n[2] < 0 or (n[2] == 0 and (n[0] < 0 or (n[0] == 0 and n[1] < 0))):
            n = -n
            rho = -rho
        return cls(a=float(n[0]), b=float(n[1]), c=float(n[2]), rho=float(rho))

    def scaled_time(self, time_scale: float) -> PlaneParams:
        """The same plane expressed with t' = t / time_scale."""
        return PlaneParams.from_normal((self.a, self.b, self.c * time_scale), self.rho)

    def unscaled_time(self, time_scale: float) -> PlaneParams:
        """Inverse of :meth:`scaled_time`."""
        return PlaneParams.from_normal((self.a, self.b, self.c / time_scale), self.rho)


@dataclass
class HoughAccumulator:
    """Sparse (theta, phi, rho) voting grid."""

    theta_bins: int
    phi_bins: int
    rho_bins: int
    rho_max: float
    counts: dict[tuple[int, int, int], int] = field(default_factory=dict)

    @classmethod
    def from_config(cls, cfg: RhtConfig, rho_max: float) -> HoughAccumulator:
        return cls(cfg.theta_bins, cfg.phi_bins, cfg.rho_bins, rho_max)

    def cells(self, theta: np.ndarray, phi: np.ndarray, rho: np.ndarray) -> np.ndarray:
        """Bin indices (m, 3) for arrays of Hough parameters."""
        ti = np.floor(theta / TWO_PI * self.theta_bins).astype(np.int64) % self.theta_bins
        pi = np.clip(
            np.floor(phi / math.pi * self.phi_bins).astype(np.int64), 0, self.phi_bins - 1
        )
        ri = np.clip(
            np.floor((rho + self.rho_max) / (2 * self.rho_max) * self.rho_bins).astype(np.int64),
            0,
            self.rho_bins - 1,
        )
        return np.stack([ti, pi, ri], axis=1)

    def vote(self, key: tuple[int, int, int]) -> int:
        count = self.counts.get(key, 0) + 1
        self.counts[key] = count
        return count

    def reset_cell(self, key: tuple[int, int, int]) -> None:
        self.counts.pop(key, None)

    def peak(self) -> int:
        return max(self.counts.values(), default=0)

    def cell(self, key: tuple[int, int, int]) -> HoughCell:
        ti, pi, ri = key
        return HoughCell(
            theta=(ti + 0.5) * TWO_PI / self.theta_bins,
            phi=(pi + 0.5) * math.pi / self.phi_bins,
            rho=-self.rho_max + (ri + 0.5) * 2 * self.rho_max / self.rho_bins,
            votes=self.counts.get(key, 0),
        )

    @property
    def bin_diagonal(self) -> float:
        """Diagonal of one cell in (theta, phi, rho) units."""
        return math.sqrt(
            (TWO_PI / self.theta_bins) ** 2
            + (math.pi / self.phi_bins) ** 2
            + (2 * self.rho_max / self.rho_bins) ** 2
        )


@dataclass
class VoteResult:
    """Outcome of the voting stage of a fit (conditioned coordinates)."""

    cell: HoughCell
    coarse: PlaneParams
    iterations: int
    voters: list[tuple[int, int]]


def collect_support(
    sae: SAE,
    corner: tuple[int, int, int],
    cfg: SupportConfig | None = None,
    radius: int = TRACK_RADIUS,
) -> SupportPoints:
    """Gather the recent 5x5 neighbourhood of a corner as centred 3-D points.

    Each cell contributes its most recent timestamp over both polarities when
    it lies within ``dt_max`` of the corner's timestamp. The corner itself is
    always point 0 at (0, 0, 0).

    Args:
        sae: Surface of active events
        corner: (x, y, t_us) of the event-corner
        cfg: Support settings
        radius: Half-size of the window (2 -> 5x5)

    Raises:
        BorderViolationError: If the window leaves the sensor
        InsufficientSupportError: If fewer than ``min_points`` points remain
    """
    cfg = cfg or SupportConfig()
    x, y, t = corner
    if not sae.sensor.fits_window(x, y, radius):
        raise BorderViolationError((x, y), radius)

    ts, ok = sae.latest_window(x, y, radius)
    dt_max_us = cfg.dt_max_ms * 1000.0
    recent = ok & (np.abs(t - ts) <= dt_max_us)
    recent[radius, radius] = False

    dy, dx = np.nonzero(recent)
    dt = (ts[dy, dx] - t) / 1e6
    neighbours = np.column_stack([dx - radius, dy - radius, dt]).astype(np.float64)
    points = np.vstack([np.zeros((1, 3)), neighbours])
    if points.shape[0] < cfg.min_points:
        raise InsufficientSupportError(points.shape[0], cfg.min_points)
    return SupportPoints(points=points, origin=(x, y, t))


def hough_params(
    p1: np.ndarray | tuple, p2: np.ndarray | tuple, p3: np.ndarray | tuple, eps: float = 1e-9
) -> tuple[float, float, float]:
    """Hough parameters (theta, phi, rho) of the plane through three points.

    ``theta`` is the angle of v in the XY-plane (in [0, 2*pi)), ``phi`` the
    polar angle of v from the t-axis (in [0, pi]) and ``rho = v_hat . p1``.
    The orientation of v follows the cross-product order, no sign
    canonicalization.

    Raises:
        DegenerateTripleError: If the points are (nearly) collinear
    """
    a, b, c = (np.asarray(p, dtype=np.float64) for p in (p1, p2, p3))
    v = np.cross(c - a, a - b)
    norm = float(np.linalg.norm(v))
    if norm < eps:
        raise DegenerateTripleError(norm)
    unit = v / norm
    theta = math.atan2(unit[1], unit[0]) % TWO_PI
    phi = math.acos(max(-1.0, min(1.0, float(unit[2]))))
    rho = float(unit @ a)
    return theta, phi, rho


def _triple_planes(
    p1: np.ndarray, p2: np.ndarray, p3: np.ndarray, eps: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Canonical unit normals (c >= 0) and rho for batches of triples."""
    v = np.cross(p3 - p1, p1 - p2)
    norm = np.linalg.norm(v, axis=1)
    ok = norm >= eps
    unit = np.zeros_like(v)
    unit[ok] = v[ok] / norm[ok, None]
    flip = unit[:, 2] < 0
    unit[flip] *= -1.0
    rho = unit @ p1 if p1.ndim == 1 else np.einsum("ij,ij->i", unit, p1)
    return unit, rho, ok


def _angles(unit: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    theta = np.arctan2(unit[:, 1], unit[:, 0]) % TWO_PI
    phi = np.arccos(np.clip(unit[:, 2], -1.0, 1.0))
    return theta, phi


def _rho_max(points: np.ndarray) -> float:
    """Window diagonal in conditioned units."""
    extent = np.abs(points).max(axis=0)
    return float(max(np.linalg.norm(np.maximum(extent, [2.0, 2.0, 1.0])), 1e-9))


def _coarse_plane(unit: np.ndarray, rho: np.ndarray) -> PlaneParams:
    return PlaneParams.from_normal(unit.mean(axis=0), float(rho.mean()))


def _vote_first_hit(
    q: np.ndarray, cfg: RhtConfig, rng: np.random.Generator
) -> VoteResult:
    others = q.shape[0] - 1
    ii, jj = np.triu_indices(others, k=1)
    draw = rng.permutation(ii.size)
    i2 = 1 + ii[draw]
    i3 = 1 + jj[draw]

    unit, rho, ok = _triple_planes(q[0], q[i2], q[i3], cfg.collinear_eps)
    # Collinear triples are skipped without using up the budget.
    valid = np.flatnonzero(ok)[: cfg.max_iters]
    theta, phi = _angles(unit)
    acc = HoughAccumulator.from_config(cfg, _rho_max(q))
    keys = acc.cells(theta, phi, rho)

    members: dict[tuple[int, int, int], list[int]] = {}
    for iteration, n in enumerate(valid, start=1):
        key = (int(keys[n, 0]), int(keys[n, 1]), int(keys[n, 2]))
        members.setdefault(key, []).append(int(n))
        if acc.vote(key) >= cfg.vote_threshold:
            idx = members[key]
            return VoteResult(
                cell=acc.cell(key),
                coarse=_coarse_plane(unit[idx], rho[idx]),
                iterations=iteration,
                voters=[(int(i2[m]), int(i3[m])) for m in idx],
            )
    raise NoConsensusError(int(valid.size), acc.peak())


def _vote_multi_plane(
    q: np.ndarray, cfg: RhtConfig, rng: np.random.Generator
) -> VoteResult:
    remaining = list(range(1, q.shape[0]))
    acc = HoughAccumulator.from_config(cfg, _rho_max(q))
    members: dict[tuple[int, int, int], list[tuple[np.ndarray, float, tuple[int, int]]]] = {}
    detected: list[tuple[tuple[int, int, int], np.ndarray, float, list[tuple[int, int]]]] = []
    iterations = 0
    draws = 0
    max_draws = MULTI_PLANE_DRAW_FACTOR * cfg.max_iters

    while len(remaining) >= 2 and iterations < cfg.max_iters and draws < max_draws:
        draws += 1
        a, b = rng.choice(len(remaining), size=2, replace=False)
        i2, i3 = remaining[int(a)], remaining[int(b)]
        unit, rho, ok = _triple_planes(q[0], q[[i2]], q[[i3]], cfg.collinear_eps)
        if not ok[0]:
            continue
        iterations += 1
        theta, phi = _angles(unit)
        k = acc.cells(theta, phi, rho)[0]
        key = (int(k[0]), int(k[1]), int(k[2]))
        members.setdefault(key, []).append((unit[0], float(rho[0]), (i2, i3)))
        if acc.vote(key) >= cfg.vote_threshold:
            votes = members.pop(key)
            normals = np.array([m[0] for m in votes])
            detected.append(
                (key, normals.mean(axis=0), float(np.mean([m[1] for m in votes])), [m[2] for m in votes])
            )
            remaining.remove(i2)
            remaining.remove(i3)
            acc.reset_cell(key)

    if not detected:
        raise NoConsensusError(iterations, acc.peak())

    tally: dict[tuple[int, int, int], int] = {}
    for key, *_ in detected:
        tally[key] = tally.get(key, 0) + 1
    best_key = max(tally, key=lambda key: (tally[key], -next(i for i, d in enumerate(detected) if d[0] == key)))
    chosen = [d for d in detected if d[0] == best_key]
    normal = np.mean([d[1] for d in chosen], axis=0)
    rho = float(np.mean([d[2] for d in chosen]))
    cell = acc.cell(best_key)
    return VoteResult(
        cell=HoughCell(cell.theta, cell.phi, cell.rho, votes=len(chosen) * cfg.vote_threshold),
        coarse=PlaneParams.from_normal(normal, rho),
        iterations=iterations,
        voters=[pair for d in chosen for pair in d[3]],
    )


def vote_plane(
    pts: SupportPoints,
    cfg: RhtConfig | None = None,
    time_scale: float = 0.05,
    rng: np.random.Generator | None = None,
) -> VoteResult:
    """Voting stage of :func:`rht_fit`, in conditioned coordinates."""
    cfg = cfg or RhtConfig()
    if pts.count < 3:
        raise InsufficientSupportError(pts.count, 3)
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    q = pts.points.copy()
    q[:, 2] /= time_scale
    if cfg.multi_plane:
        return _vote_multi_plane(q, cfg, rng)
    return _vote_first_hit(q, cfg, rng)


def plane_residuals(pts: SupportPoints, plane: PlaneParams, time_scale: float = 1.0) -> np.ndarray:
    """Orthogonal distances of the support points to a plane (conditioned units)."""
    scaled = plane.scaled_time(time_scale)
    q = pts.points.copy()
    q[:, 2] /= time_scale
    return np.abs(q @ scaled.normal - scaled.rho)


def refine_plane(
    pts: SupportPoints, coarse: PlaneParams, eps: float, time_scale: float = 1.0
) -> PlaneParams:
    """Total-least-squares plane over the inliers of a coarse plane.

    Inliers are points within ``eps`` orthogonal distance of ``coarse`` in
    conditioned coordinates (t divided by ``time_scale``). With fewer than
    three inliers the coarse plane is returned unchanged.
    """
    inliers = plane_residuals(pts, coarse, time_scale) <= eps
    if int(inliers.sum()) < 3:
        return coarse
    q = pts.points[inliers].copy()
    q[:, 2] /= time_scale
    centroid = q.mean(axis=0)
    _, _, vt = np.linalg.svd(q - centroid)
    normal = vt[-1]
    refined = PlaneParams.from_normal(normal, float(normal @ centroid))
    return refined.unscaled_time(time_scale)


def rht_fit(
    pts: SupportPoints,
    cfg: RhtConfig | None = None,
    time_scale: float = 0.05,
    rng: np.random.Generator | None = None,
    min_points: int = 5,
) -> PlaneParams:
    """Fit the local plane of an event-corner's support.

    Args:
        pts: Centred support points (corner first)
        cfg: Hough settings
        time_scale: Temporal conditioning in seconds (the support recency window)
        rng: Sampling generator; a fresh ``default_rng(cfg.seed)`` when None
        min_points: Minimum support size

    Returns:
        Refined plane in physical units (px, px, s)

    Raises:
        InsufficientSupportError: If the support is too small
        NoConsensusError: If no cell reaches the vote threshold
    """
    cfg = cfg or RhtConfig()
    if pts.count < min_points:
        raise InsufficientSupportError(pts.count, min_points)
    result = vote_plane(pts, cfg, time_scale, rng)
    coarse = result.coarse.unscaled_time(time_scale)
    return refine_plane(pts, coarse, cfg.refine_eps, time_scale)
