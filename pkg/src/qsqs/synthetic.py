"""Synthetic detection corpora with planted occlusion pairs.

Each generated image contains a few object groups placed without mutual
overlap: occluded pairs (two same-class objects whose detections overlap
at an IoU between the usual NMS threshold and the pre-suppression
threshold), isolated singles, one duplicate detection on a single, and
low-score noise detections matching nothing.  A harsh greedy NMS deletes
the occluded partners; schemes that rescore instead of delete keep them,
which is exactly the contrast the corpus is built to expose.  Some images
carry an ignore region with a detection on it to exercise that path too.

Generation is fully determined by the seed.
"""

from __future__ import annotations

import numpy as np

from .evaluation import GroundTruth
from .geometry import BoundingBox
from .io import DetectionFile, GroundTruthFile, ImageDetections

_SEPARATION_IOU = 0.05


def _iou_corners(a: tuple[float, float, float, float],
                 b: tuple[float, float, float, float]) -> float:
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def _place(rng: np.random.Generator, w: float, h: float, width: int, height: int,
           occupied: list[tuple[float, float, float, float]],
           margin_w: float = 0.0, max_tries: int = 60,
           ) -> tuple[float, float, float, float] | None:
    """Find a spot whose surroundings are free of existing objects.

    ``margin_w`` reserves extra horizontal room (for a pair's partner).
    Returns None when the image is too crowded.
    """
    for _ in range(max_tries):
        x = rng.uniform(0.0, max(width - w - margin_w, 1.0))
        y = rng.uniform(0.0, max(height - h, 1.0))
        corners = (x, y, x + w + margin_w, y + h)
        if all(_iou_corners(corners, other) < _SEPARATION_IOU for other in occupied):
            return (x, y, x + w, y + h)
    return None


def _jitter(rng: np.random.Generator,
            corners: tuple[float, float, float, float],
            relative: float = 0.012) -> tuple[float, float, float, float]:
    """Perturb each corner by a small fraction of the box size."""
    w = corners[2] - corners[0]
    h = corners[3] - corners[1]
    jx = relative * w
    jy = relative * h
    return (corners[0] + rng.uniform(-jx, jx), corners[1] + rng.uniform(-jy, jy),
            corners[2] + rng.uniform(-jx, jx), corners[3] + rng.uniform(-jy, jy))


def generate_corpus(num_images: int = 200, seed: int = 0, *,
                    image_size: tuple[int, int] = (640, 512),
                    num_classes: int = 2, pairs_per_image: int = 2,
                    singles_per_image: int = 2, noise_per_image: int = 3,
                    ) -> tuple[DetectionFile, GroundTruthFile]:
    """Generate matched detection and ground-truth files.

    Detections are near-perfect around every ground-truth object (small
    corner jitter, so detection/truth IoU stays far above common matching
    thresholds) plus the planted redundancy and noise described in the
    module docstring.  Occluded pairs have detection-pair IoU in roughly
    (0.31, 0.47): above a 0.3 NMS threshold, below a 0.5 pre-suppression
    threshold.
    """
    rng = np.random.default_rng(seed)
    width, height = image_size
    det_images = []
    gt_images = []
    for index in range(num_images):
        image_id = f"synthetic-{index:04d}"
        occupied: list[tuple[float, float, float, float]] = []
        gt_boxes: list[BoundingBox] = []
        gt_flags: list[bool] = []
        raw: list[tuple[tuple[float, float, float, float], float, int]] = []

        for pair_index in range(pairs_per_image):
            class_id = (index + pair_index) % num_classes
            w = rng.uniform(55.0, 90.0)
            h = w * rng.uniform(0.9, 1.3)
            overlap = rng.uniform(0.34, 0.44)
            shift = w * (1.0 - overlap) / (1.0 + overlap)
            spot = _place(rng, w, h, width, height, occupied, margin_w=shift)
            if spot is None:
                continue
            front = spot
            partner = (spot[0] + shift, spot[1], spot[2] + shift, spot[3])
            occupied.extend([front, partner])
            for corners, (lo, hi) in ((front, (0.82, 0.95)), (partner, (0.68, 0.80))):
                gt_boxes.append(BoundingBox(*corners, score=1.0, class_id=class_id,
                                            source_index=len(gt_boxes)))
                gt_flags.append(False)
                raw.append((_jitter(rng, corners), rng.uniform(lo, hi), class_id))

        for single_index in range(singles_per_image):
            class_id = (index + single_index + 1) % num_classes
            w = rng.uniform(45.0, 85.0)
            h = w * rng.uniform(0.9, 1.4)
            spot = _place(rng, w, h, width, height, occupied)
            if spot is None:
                continue
            occupied.append(spot)
            gt_boxes.append(BoundingBox(*spot, score=1.0, class_id=class_id,
                                        source_index=len(gt_boxes)))
            gt_flags.append(False)
            raw.append((_jitter(rng, spot), rng.uniform(0.75, 0.95), class_id))
            if single_index == 0:
                # duplicate detection on the first single: IoU ~0.6 with it,
                # removed by NMS and by the pre-suppression stage alike
                dup_shift = w * rng.uniform(0.22, 0.28)
                dup = (spot[0] + dup_shift, spot[1], spot[2] + dup_shift, spot[3])
                raw.append((dup, rng.uniform(0.30, 0.55), class_id))

        for _ in range(noise_per_image):
            w = rng.uniform(35.0, 70.0)
            h = w * rng.uniform(0.8, 1.3)
            spot = _place(rng, w, h, width, height, occupied)
            if spot is None:
                continue
            occupied.append(spot)
            raw.append((spot, rng.uniform(0.10, 0.40), int(rng.integers(num_classes))))

        if index % 4 == 0:
            w = rng.uniform(40.0, 80.0)
            h = w * rng.uniform(0.9, 1.2)
            spot = _place(rng, w, h, width, height, occupied)
            if spot is not None:
                occupied.append(spot)
                gt_boxes.append(BoundingBox(*spot, score=1.0, class_id=0,
                                            source_index=len(gt_boxes)))
                gt_flags.append(True)
                raw.append((_jitter(rng, spot), rng.uniform(0.30, 0.60), 0))

        det_boxes = [BoundingBox(*corners, score=score, class_id=class_id,
                                 source_index=det_index)
                     for det_index, (corners, score, class_id) in enumerate(raw)]
        det_images.append(ImageDetections(image_id=image_id, boxes=tuple(det_boxes)))
        gt_images.append(GroundTruth(image_id=image_id, boxes=tuple(gt_boxes),
                                     ignore_flags=tuple(gt_flags)))
    return DetectionFile(images=tuple(det_images)), GroundTruthFile(images=tuple(gt_images))
