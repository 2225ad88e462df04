"""Detection metrics: greedy matching, average precision, and miss rate.

Matching follows the usual protocol: detections are visited in descending
score order, each may claim at most one unmatched ground-truth box of its
class, and boxes overlapping designated ignore regions count for neither
credit nor penalty.  On top of the per-detection flags sit VOC-style
average precision (all-point or eleven-point) and the pedestrian-style
log-average miss rate over false positives per image.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .exceptions import InvalidInputError, UndefinedMetricError
from .geometry import BoundingBox, iou

LAMR_CLAMP = 1e-10
FPPI_REFERENCES = tuple(10.0 ** (-2.0 + k / 4.0) for k in range(9))


class MatchFlag(enum.Enum):
    TP = "tp"
    FP = "fp"
    IGNORED = "ignored"


class ApMode(enum.Enum):
    ALL_POINT = "all-point"
    ELEVEN_POINT = "11-point"


@dataclass(frozen=True)
class GroundTruth:
    """Annotations of one image.

    Scores on the boxes are ignored.  ``ignore_flags`` marks regions that
    are excluded from evaluation: detections landing on them are neither
    true nor false positives, and the regions themselves are not counted
    as targets.
    """

    image_id: str
    boxes: tuple[BoundingBox, ...] = ()
    ignore_flags: tuple[bool, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "boxes", tuple(self.boxes))
        flags = tuple(self.ignore_flags) if self.ignore_flags else (False,) * len(self.boxes)
        if len(flags) != len(self.boxes):
            raise InvalidInputError(
                f"image {self.image_id!r}: {len(flags)} ignore flags for "
                f"{len(self.boxes)} boxes")
        object.__setattr__(self, "ignore_flags", flags)

    def num_targets(self, class_id: int | None = None) -> int:
        """Count of non-ignored boxes, optionally restricted to one class."""
        return sum(1 for b, ign in zip(self.boxes, self.ignore_flags)
                   if not ign and (class_id is None or b.class_id == class_id))


def match_detections(dets: Sequence[BoundingBox], gt: GroundTruth,
                     iou_threshold: float) -> list[MatchFlag]:
    """Flag each detection as TP, FP, or Ignored against one image's truth.

    Detections are processed in descending score order (ties by lower
    ``source_index``) but the returned flags align with the input order.
    A detection claims the unmatched non-ignored ground-truth box of its
    class with the highest IoU at or above the threshold; each target can
    be claimed once.  Failing that, a detection overlapping an ignore
    region of its class at or above the threshold is flagged Ignored;
    ignore regions absorb any number of detections.
    """
    flags = [MatchFlag.FP] * len(dets)
    taken = [False] * len(gt.boxes)
    order = sorted(range(len(dets)),
                   key=lambda i: (-dets[i].score, dets[i].source_index))
    for i in order:
        det = dets[i]
        best_j = -1
        best_v = 0.0
        for j, box in enumerate(gt.boxes):
            if box.class_id != det.class_id or gt.ignore_flags[j] or taken[j]:
                continue
            v = iou(det, box)
            if v >= iou_threshold and v > best_v:
                best_v, best_j = v, j
        if best_j >= 0:
            flags[i] = MatchFlag.TP
            taken[best_j] = True
            continue
        ignore_v = max((iou(det, box) for j, box in enumerate(gt.boxes)
                        if box.class_id == det.class_id and gt.ignore_flags[j]),
                       default=0.0)
        if ignore_v >= iou_threshold and ignore_v > 0.0:
            flags[i] = MatchFlag.IGNORED
    return flags


def _pr_curve(flags: Sequence[MatchFlag], scores: Sequence[float],
              num_gt: int) -> tuple[np.ndarray, np.ndarray]:
    """Precision and recall after each detection, descending score."""
    pairs = sorted(((s, f) for s, f in zip(scores, flags)
                    if f is not MatchFlag.IGNORED), key=lambda p: -p[0])
    tp = np.cumsum([1.0 if f is MatchFlag.TP else 0.0 for _, f in pairs])
    fp = np.cumsum([1.0 if f is MatchFlag.FP else 0.0 for _, f in pairs])
    recall = tp / num_gt
    precision = tp / np.maximum(tp + fp, 1.0)
    return precision, recall


def average_precision(flags: Sequence[MatchFlag], scores: Sequence[float],
                      num_gt: int, mode: ApMode = ApMode.ALL_POINT) -> float:
    """Average precision of one class from match flags and scores.

    AllPoint mode integrates the precision envelope over recall;
    ElevenPoint averages the envelope at recalls 0, 0.1, ..., 1.0.
    Ignored detections contribute nothing.  Undefined when ``num_gt``
    is zero.
    """
    if num_gt < 1:
        raise UndefinedMetricError("average precision needs at least one target")
    if len(flags) != len(scores):
        raise InvalidInputError(
            f"{len(flags)} flags for {len(scores)} scores")
    precision, recall = _pr_curve(flags, scores, num_gt)
    if mode is ApMode.ELEVEN_POINT:
        total = 0.0
        for level in np.linspace(0.0, 1.0, 11):
            at_level = precision[recall >= level - 1e-12]
            total += float(at_level.max()) if at_level.size else 0.0
        return total / 11.0
    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    moved = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[moved + 1] - mrec[moved]) * mpre[moved + 1]))


def mean_ap(ap_by_class: Mapping[int, float]) -> float:
    """Unweighted mean of per-class average precisions."""
    if not ap_by_class:
        raise UndefinedMetricError("no class has any ground truth to average over")
    return float(sum(ap_by_class.values()) / len(ap_by_class))


def log_average_miss_rate(dets_by_image: Mapping[str, Sequence[BoundingBox]],
                          gts: Sequence[GroundTruth],
                          iou_threshold: float = 0.5,
                          ) -> tuple[float, tuple[tuple[float, float], ...]]:
    """Log-average miss rate over nine FPPI reference points.

    Sweeps the score threshold over every distinct detection score to
    trace (false positives per image, miss rate) points, then samples the
    miss rate at FPPI references ``10^(-2 + k/4)`` for k = 0..8.  Each
    reference uses the point with the largest achieved FPPI at or below
    it; references below the smallest achieved FPPI fall back to the
    highest-threshold point.  The result is the geometric mean of the
    nine miss rates, each clamped below by 1e-10.

    Returns the scalar and the swept curve.  Undefined without targets.
    """
    num_images = len(gts)
    num_gt = sum(gt.num_targets() for gt in gts)
    if num_gt < 1:
        raise UndefinedMetricError("miss rate needs at least one target")
    records: list[tuple[float, bool]] = []
    for gt in gts:
        dets = list(dets_by_image.get(gt.image_id, ()))
        for det, flag in zip(dets, match_detections(dets, gt, iou_threshold)):
            if flag is not MatchFlag.IGNORED:
                records.append((det.score, flag is MatchFlag.TP))
    records.sort(key=lambda r: -r[0])
    curve: list[tuple[float, float]] = []
    tp = fp = 0
    for k, (score, is_tp) in enumerate(records):
        tp += is_tp
        fp += not is_tp
        if k + 1 == len(records) or records[k + 1][0] != score:
            curve.append((fp / num_images, 1.0 - tp / num_gt))
    log_total = 0.0
    for ref in FPPI_REFERENCES:
        reachable = [mr for fppi, mr in curve if fppi <= ref]
        if reachable:
            mr = reachable[-1]
        elif curve:
            mr = curve[0][1]
        else:
            mr = 1.0
        log_total += math.log(max(mr, LAMR_CLAMP))
    return math.exp(log_total / len(FPPI_REFERENCES)), tuple(curve)


@dataclass(frozen=True)
class ClassEval:
    """Per-class results: AP plus the curve it was integrated from."""

    class_id: int
    ap: float
    num_gt: int
    precision: tuple[float, ...]
    recall: tuple[float, ...]


@dataclass(frozen=True)
class EvalReport:
    """Full evaluation outcome over a detection/ground-truth pair."""

    per_class: dict[int, ClassEval]
    mean_ap: float
    lamr: float
    fppi_curve: tuple[tuple[float, float], ...]
    iou_threshold: float
    mode: ApMode
    num_images: int

    def to_json_dict(self) -> dict:
        return {
            "format_version": 1,
            "iou_threshold": self.iou_threshold,
            "ap_mode": self.mode.value,
            "num_images": self.num_images,
            "per_class": {
                str(c): {"ap": e.ap, "num_gt": e.num_gt}
                for c, e in sorted(self.per_class.items())
            },
            "map": self.mean_ap,
            "lamr": self.lamr,
        }


def evaluate(dets_by_image: Mapping[str, Sequence[BoundingBox]],
             gts: Sequence[GroundTruth], iou_threshold: float = 0.5,
             mode: ApMode = ApMode.ALL_POINT) -> EvalReport:
    """Match every image and compute mAP and log-average miss rate.

    Images are aligned by id; an image present on only one side is
    treated as having an empty counterpart.  Classes never seen in the
    (non-ignored) ground truth have undefined AP and are excluded from
    the mean.  Raises when there is no ground truth at all.
    """
    gt_by_image = {gt.image_id: gt for gt in gts}
    if len(gt_by_image) != len(gts):
        raise InvalidInputError("duplicate image_id in ground truth")
    all_ids = list(gt_by_image)
    all_ids.extend(i for i in dets_by_image if i not in gt_by_image)
    aligned_gts = [gt_by_image.get(i, GroundTruth(image_id=i)) for i in all_ids]

    class_ids = sorted({b.class_id for gt in aligned_gts
                        for b, ign in zip(gt.boxes, gt.ignore_flags) if not ign})
    if not class_ids:
        raise UndefinedMetricError("ground truth contains no targets")

    per_flag: dict[int, list[tuple[float, MatchFlag]]] = {c: [] for c in class_ids}
    for gt in aligned_gts:
        dets = list(dets_by_image.get(gt.image_id, ()))
        for det, flag in zip(dets, match_detections(dets, gt, iou_threshold)):
            if det.class_id in per_flag:
                per_flag[det.class_id].append((det.score, flag))

    per_class: dict[int, ClassEval] = {}
    for c in class_ids:
        num_gt = sum(gt.num_targets(c) for gt in aligned_gts)
        scores = [s for s, _ in per_flag[c]]
        flags = [f for _, f in per_flag[c]]
        ap = average_precision(flags, scores, num_gt, mode)
        precision, recall = _pr_curve(flags, scores, num_gt)
        per_class[c] = ClassEval(class_id=c, ap=ap, num_gt=num_gt,
                                 precision=tuple(precision.tolist()),
                                 recall=tuple(recall.tolist()))

    lamr, curve = log_average_miss_rate(dets_by_image, aligned_gts, iou_threshold)
    return EvalReport(per_class=per_class,
                      mean_ap=mean_ap({c: e.ap for c, e in per_class.items()}),
                      lamr=lamr, fppi_curve=curve, iou_threshold=iou_threshold,
                      mode=mode, num_images=len(aligned_gts))
