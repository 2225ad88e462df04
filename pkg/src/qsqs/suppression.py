"""Suppression pipelines over per-image detections.

Four schemes share one configuration type: greedy NMS, Gaussian soft-NMS,
and two QUBO-based variants.  The QUBO variants pre-suppress with NMS, cap
the variable count, solve the keep/discard objective, and optionally
recover rejected boxes at a decayed score instead of deleting them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Protocol, Sequence

from .exceptions import InvalidInputError
from .geometry import BoundingBox, iou
from .qubo import EnhConfig, QsqsWeights, build_q, negate
from .solvers import AnnealingSampler, SampleSet, pick_solution

MAX_QUBIT_CAP = 45


class Scheme(enum.Enum):
    """Suppression scheme selector."""

    NMS = "nms"
    SOFT_NMS = "soft-nms"
    QQS = "qqs"
    QSQS = "qsqs"
    QSQS_ENH = "qsqs-enh"


class Solver(Protocol):
    """Anything that can sample a quadratic binary objective."""

    def sample(self, instance) -> SampleSet: ...


@dataclass(frozen=True)
class SuppressionConfig:
    """Settings shared by all suppression schemes.

    ``pre_nms_threshold`` and ``qubit_cap`` bound the QUBO stage: boxes are
    first thinned with plain NMS at that threshold, then only the
    ``qubit_cap`` highest-scoring survivors become variables.  ``sigma``
    shapes the Gaussian score decay, ``final_score_threshold`` is the floor
    a decayed box must clear to stay in the output, and ``nms_threshold``
    is the separate threshold of the plain-NMS baseline scheme.
    """

    scheme: Scheme = Scheme.QSQS
    pre_nms_threshold: float = 0.5
    qubit_cap: int = 35
    weights: QsqsWeights = field(default_factory=QsqsWeights)
    sigma: float = 0.5
    final_score_threshold: float = 0.01
    nms_threshold: float = 0.3
    enh: EnhConfig = field(default_factory=EnhConfig)

    def __post_init__(self) -> None:
        if not 0.0 <= self.pre_nms_threshold <= 1.0:
            raise InvalidInputError(
                f"pre_nms_threshold {self.pre_nms_threshold} outside [0, 1]")
        if not 1 <= self.qubit_cap <= MAX_QUBIT_CAP:
            raise InvalidInputError(
                f"qubit_cap {self.qubit_cap} outside [1, {MAX_QUBIT_CAP}]")
        if not self.sigma > 0.0:
            raise InvalidInputError(f"sigma {self.sigma} must be positive")
        if not 0.0 <= self.nms_threshold <= 1.0:
            raise InvalidInputError(
                f"nms_threshold {self.nms_threshold} outside [0, 1]")


def gaussian_rescore(score: float, overlap: float, sigma: float) -> float:
    """Decay a score by its overlap with a kept box: ``score * exp(-overlap^2 / sigma)``.

    The identity when ``overlap`` is zero.
    """
    return score * math.exp(-(overlap * overlap) / sigma)


def _by_rank(dets: Sequence[BoundingBox]) -> list[int]:
    """Indices of ``dets`` by descending score, ties by lower source_index."""
    return sorted(range(len(dets)),
                  key=lambda i: (-dets[i].score, dets[i].source_index))


def _require_single_class(dets: Sequence[BoundingBox]) -> None:
    classes = {b.class_id for b in dets}
    if len(classes) > 1:
        raise InvalidInputError(
            f"detections span classes {sorted(classes)}; suppress one class at a time")


def nms(dets: Sequence[BoundingBox], threshold: float) -> list[BoundingBox]:
    """Greedy non-maximum suppression.

    Repeatedly keeps the highest-scoring remaining box and removes every
    remaining box whose IoU with it is ``>= threshold``.  Output is sorted
    by descending score, ties by lower ``source_index``.
    """
    _require_single_class(dets)
    kept: list[BoundingBox] = []
    remaining = [dets[i] for i in _by_rank(dets)]
    while remaining:
        top = remaining.pop(0)
        kept.append(top)
        remaining = [b for b in remaining if iou(top, b) < threshold]
    return kept


def soft_nms(dets: Sequence[BoundingBox], sigma: float,
             score_threshold: float) -> list[BoundingBox]:
    """Gaussian soft suppression.

    Greedy selection as in NMS, but instead of removing a neighbor its
    score is multiplied by ``exp(-iou^2 / sigma)``; boxes whose decayed
    score drops below ``score_threshold`` are dropped.  Output boxes carry
    their decayed scores, in selection (descending-score) order.
    """
    _require_single_class(dets)
    current = list(dets)
    out: list[BoundingBox] = []
    while current:
        current.sort(key=lambda b: (-b.score, b.source_index))
        top = current.pop(0)
        out.append(top)
        decayed = [b.with_score(gaussian_rescore(b.score, iou(top, b), sigma))
                   for b in current]
        current = [b for b in decayed if b.score >= score_threshold]
    return out


def _partition(survivors: Sequence[BoundingBox],
               bits: Sequence[int]) -> tuple[list[BoundingBox], list[BoundingBox]]:
    """Split solver output into kept and rejected boxes.

    An all-zeros answer would leave nothing to rescore against, so it
    falls back to keeping the single highest-scoring box.
    """
    if not any(bits):
        top = _by_rank(survivors)[0]
        bits = [1 if i == top else 0 for i in range(len(survivors))]
    kept = [b for b, bit in zip(survivors, bits) if bit]
    soft = [b for b, bit in zip(survivors, bits) if not bit]
    return kept, soft


def qsqs(dets: Sequence[BoundingBox], cfg: SuppressionConfig,
         solver: Solver | None = None) -> list[BoundingBox]:
    """QUBO-based suppression of one class's detections.

    Pipeline: NMS pre-suppression at ``cfg.pre_nms_threshold``; keep the
    top ``cfg.qubit_cap`` boxes by score; build the keep/discard
    objective; negate it and sample with ``solver``; boxes on bit 1 are
    kept as-is.  Under schemes that rescore (everything except ``QQS``),
    each rejected box is decayed against the kept box it overlaps most
    and re-admitted if its decayed score reaches
    ``cfg.final_score_threshold``.  Boxes the pre-suppression stage
    removed are gone for good; only solver-rejected boxes are eligible
    for recovery.
    """
    _require_single_class(dets)
    if not dets:
        return []
    if solver is None:
        solver = AnnealingSampler()
    survivors = nms(dets, cfg.pre_nms_threshold)[:cfg.qubit_cap]
    enh = replace(cfg.enh, enabled=cfg.scheme is Scheme.QSQS_ENH)
    instance = build_q(survivors, cfg.weights, enh)
    result = solver.sample(negate(instance))
    kept, soft = _partition(survivors, pick_solution(result))
    out = list(kept)
    if cfg.scheme is not Scheme.QQS:
        for box in soft:
            anchor = max(kept, key=lambda k: iou(k, box))
            rescored = gaussian_rescore(box.score, iou(anchor, box), cfg.sigma)
            if rescored >= cfg.final_score_threshold:
                out.append(box.with_score(rescored))
    return [out[i] for i in _by_rank(out)]


def suppress_image(dets: Sequence[BoundingBox], cfg: SuppressionConfig,
                   solver: Solver | None = None) -> list[BoundingBox]:
    """Apply the configured scheme to one image's detections, per class.

    Classes are suppressed independently and concatenated in ascending
    ``class_id`` order; there is no cross-class interaction.
    """
    by_class: dict[int, list[BoundingBox]] = {}
    for box in dets:
        by_class.setdefault(box.class_id, []).append(box)
    out: list[BoundingBox] = []
    for class_id in sorted(by_class):
        group = by_class[class_id]
        if cfg.scheme is Scheme.NMS:
            out.extend(nms(group, cfg.nms_threshold))
        elif cfg.scheme is Scheme.SOFT_NMS:
            out.extend(soft_nms(group, cfg.sigma, cfg.final_score_threshold))
        else:
            out.extend(qsqs(group, cfg, solver))
    return out
