"""Axis-aligned box arithmetic: areas, IoU, and a center-distance affinity.

Boxes use the corner convention ``(x1, y1, x2, y2)`` with ``x2 > x1`` and
``y2 > y1``.  Scalar helpers operate on :class:`BoundingBox`; the ``*_matrix``
helpers vectorize the same formulas over arrays for the pairwise matrices the
suppression pipeline needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .exceptions import InvalidInputError


@dataclass(frozen=True)
class BoundingBox:
    """One detection: an axis-aligned rectangle with a confidence score.

    Parameters
    ----------
    x1, y1, x2, y2 : float
        Top-left and bottom-right corners.  Width and height must be
        strictly positive.
    score : float
        Detector confidence in ``[0, 1]``.
    class_id : int
        Category label.  Suppression and matching never mix classes.
    source_index : int
        Position of the detection in its original per-image list.  Carried
        through suppression unchanged so outputs can be traced back.
    """

    x1: float
    y1: float
    x2: float
    y2: float
    score: float
    class_id: int = 0
    source_index: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x1) and math.isfinite(self.y1)
                and math.isfinite(self.x2) and math.isfinite(self.y2)):
            raise InvalidInputError(f"non-finite box corners: {self!r}")
        if self.x2 <= self.x1 or self.y2 <= self.y1:
            raise InvalidInputError(
                f"degenerate box ({self.x1}, {self.y1}, {self.x2}, {self.y2}): "
                "width and height must be positive")
        if not (math.isfinite(self.score) and 0.0 <= self.score <= 1.0):
            raise InvalidInputError(f"score {self.score} outside [0, 1]")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def center(self) -> tuple[float, float]:
        return (self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    def with_score(self, score: float) -> "BoundingBox":
        """Copy of this box with a replaced score."""
        return replace(self, score=score)


def area(box: BoundingBox) -> float:
    """Area of a box; always positive under the corner convention."""
    return box.width * box.height


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes, in ``[0, 1]``."""
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (area(a) + area(b) - inter)


def spatial_overlap(a: BoundingBox, b: BoundingBox) -> float:
    """Closeness of two boxes by center distance and area ratio.

    A Gaussian of the squared center distance, with standard deviation half
    the mean box diagonal, scaled by the smaller-to-larger area ratio.
    Unlike IoU this stays positive for nearby disjoint boxes, so the
    pairwise penalty still discourages keeping both of two boxes that sit
    almost on top of each other without intersecting.

    Equal to 1 iff the boxes coincide, symmetric, and invariant under
    translation and uniform scaling.
    """
    acx, acy = a.center
    bcx, bcy = b.center
    dist_sq = (acx - bcx) ** 2 + (acy - bcy) ** 2
    half_mean_diag = (a.diagonal + b.diagonal) / 4.0
    closeness = math.exp(-dist_sq / (2.0 * half_mean_diag**2))
    area_a = area(a)
    area_b = area(b)
    return closeness * (min(area_a, area_b) / max(area_a, area_b))


def boxes_to_array(boxes: Sequence[BoundingBox]) -> np.ndarray:
    """Stack boxes into a float array of rows ``(x1, y1, x2, y2, score)``."""
    if not boxes:
        return np.zeros((0, 5), dtype=np.float64)
    return np.array([(b.x1, b.y1, b.x2, b.y2, b.score) for b in boxes],
                    dtype=np.float64)


def pairwise_iou(corners_a: np.ndarray, corners_b: np.ndarray) -> np.ndarray:
    """IoU between every row of ``corners_a`` and every row of ``corners_b``.

    Both arguments are ``(n, 4)`` arrays of ``(x1, y1, x2, y2)`` rows; the
    result has shape ``(len(corners_a), len(corners_b))``.
    """
    a = np.asarray(corners_a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(corners_b, dtype=np.float64).reshape(-1, 4)
    ix = (np.minimum(a[:, None, 2], b[None, :, 2])
          - np.maximum(a[:, None, 0], b[None, :, 0]))
    iy = (np.minimum(a[:, None, 3], b[None, :, 3])
          - np.maximum(a[:, None, 1], b[None, :, 1]))
    inter = np.clip(ix, 0.0, None) * np.clip(iy, 0.0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    return inter / (area_a[:, None] + area_b[None, :] - inter)


def iou_matrix(boxes: Sequence[BoundingBox]) -> np.ndarray:
    """Symmetric pairwise IoU matrix with a unit diagonal."""
    corners = boxes_to_array(boxes)[:, :4]
    return pairwise_iou(corners, corners)


def spatial_overlap_matrix(boxes: Sequence[BoundingBox]) -> np.ndarray:
    """Symmetric pairwise matrix of :func:`spatial_overlap` values."""
    corners = boxes_to_array(boxes)[:, :4]
    cx = (corners[:, 0] + corners[:, 2]) / 2.0
    cy = (corners[:, 1] + corners[:, 3]) / 2.0
    dist_sq = (cx[:, None] - cx[None, :]) ** 2 + (cy[:, None] - cy[None, :]) ** 2
    diag = np.hypot(corners[:, 2] - corners[:, 0], corners[:, 3] - corners[:, 1])
    half_mean_diag = (diag[:, None] + diag[None, :]) / 4.0
    closeness = np.exp(-dist_sq / (2.0 * half_mean_diag**2))
    areas = (corners[:, 2] - corners[:, 0]) * (corners[:, 3] - corners[:, 1])
    ratio = (np.minimum(areas[:, None], areas[None, :])
             / np.maximum(areas[:, None], areas[None, :]))
    return closeness * ratio
