"""Harris corner detection on keyframes.

Frame-corners are the pixels whose Harris score

    S = det(M) - k * trace(M)^2   (= l1*l2 - k*(l1 + l2)^2)

over a 3x3 box window of the structure tensor M is a 3x3 local maximum
above the detection threshold. Gradients are 3x3 Sobel responses with the
border ring computed by clamped replication.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ImageTooSmallError
from .event_core import CORNER_MARGIN, Keyframe
from .logger import get_logger

logger = get_logger(__name__)

_BOX_3X3 = np.ones((3, 3), dtype=np.float64)


@dataclass
class HarrisConfig:
    """Configuration for frame-corner detection.

    Attributes:
        k: Harris sensitivity constant
        max_corners: Keep at most this many corners per keyframe
        threshold_rel: Detection threshold as a fraction of the image's max score
        threshold_abs: Absolute threshold; overrides threshold_rel when set
    """

    k: float = 0.04
    max_corners: int = 50
    threshold_rel: float = 0.01
    threshold_abs: float | None = None


@dataclass
class GradientField:
    """Horizontal (ix) and vertical (iy) gradients of an image."""

    ix: np.ndarray
    iy: np.ndarray


@dataclass
class StructureTensor:
    """Window sums of Ix^2, IxIy and Iy^2 (arrays or scalars)."""

    sxx: np.ndarray | float
    sxy: np.ndarray | float
    syy: np.ndarray | float


@dataclass(frozen=True)
class FrameCorner:
    """A corner detected on a keyframe.

    Attributes:
        x: Pixel column
        y: Pixel row
        score: Harris score S
        keyframe_t: Timestamp of the source keyframe (microseconds)
    """

    x: int
    y: int
    score: float
    keyframe_t: int


def _as_image(img: Keyframe | np.ndarray) -> np.ndarray:
    pixels = img.pixels if isinstance(img, Keyframe) else img
    a = np.asarray(pixels, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 3 or a.shape[1] < 3:
        raise ImageTooSmallError(tuple(a.shape))
    return a


def gradients(img: Keyframe | np.ndarray) -> GradientField:
    """3x3 Sobel gradients with clamped (nearest) border replication."""
    a = _as_image(img)
    return GradientField(
        ix=ndimage.sobel(a, axis=1, mode="nearest"),
        iy=ndimage.sobel(a, axis=0, mode="nearest"),
    )


def structure_tensor(field: GradientField) -> StructureTensor:
    """Uniform 3x3 box sums of the gradient products."""

    def box(a: np.ndarray) -> np.ndarray:
        return ndimage.correlate(a, _BOX_3X3, mode="nearest")

    return StructureTensor(
        sxx=box(field.ix * field.ix),
        sxy=box(field.ix * field.iy),
        syy=box(field.iy * field.iy),
    )


def harris_score(m: StructureTensor, k: float) -> np.ndarray | float:
    """S = det(M) - k * trace(M)^2, element-wise for array tensors."""
    det = m.sxx * m.syy - m.sxy * m.sxy
    trace = m.sxx + m.syy
    return det - k * trace * trace


def harris_response(img: Keyframe | np.ndarray, k: float = 0.04) -> np.ndarray:
    """Per-pixel Harris score map of an image."""
    return np.asarray(harris_score(structure_tensor(gradients(img)), k))


def detect_corners(img: Keyframe, cfg: HarrisConfig | None = None) -> list[FrameCorner]:
    """Detect frame-corners on a keyframe.

    Candidates are 3x3 local maxima of S strictly above the threshold and
    outside the border margin. They are taken in descending score order
    (ties: lower (y, x) first), skipping any candidate within Chebyshev
    distance 1 of an already accepted corner, until ``max_corners``.

    Args:
        img: Source keyframe
        cfg: Detection settings (defaults if None)

    Returns:
        Corners sorted by descending score
    """
    cfg = cfg or HarrisConfig()
    score = harris_response(img, cfg.k)
    height, width = score.shape

    if cfg.threshold_abs is not None:
        threshold = cfg.threshold_abs
    else:
        peak = float(score.max())
        if peak <= 0.0:
            return []
        threshold = cfg.threshold_rel * peak

    inside = np.zeros_like(score, dtype=bool)
    m = CORNER_MARGIN
    inside[m : height - m, m : width - m] = True
    local_max = score == ndimage.maximum_filter(score, size=3, mode="nearest")
    ys, xs = np.nonzero(inside & local_max & (score > threshold))
    if ys.size == 0:
        return []

    values = score[ys, xs]
    order = np.lexsort((xs, ys, -values))

    taken = np.zeros_like(score, dtype=bool)
    corners: list[FrameCorner] = []
    for i in order:
        x, y = int(xs[i]), int(ys[i])
        if taken[y, x]:
            continue
        corners.append(FrameCorner(x=x, y=y, score=float(values[i]), keyframe_t=img.t))
        taken[y - 1 : y + 2, x - 1 : x + 2] = True
        if len(corners) >= cfg.max_corners:
            break

    logger.debug("Keyframe t=%d: %d corners (threshold %.3g)", img.t, len(corners), threshold)
    return corners
