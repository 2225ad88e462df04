"""Quadratic binary objective over detection subsets.

One binary variable per detection: 1 keeps the box, 0 discards it.  The
objective rewards confident boxes on its diagonal and penalizes pairs of
overlapping boxes off the diagonal, so maximizing it trades score mass
against redundancy.  The matrix is stored upper triangular (diagonal
included); everything below the diagonal is structurally zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import EmptyInputError, InvalidInputError
from .geometry import BoundingBox, iou_matrix, spatial_overlap_matrix

WEIGHT_SUM_TOL = 1e-9


class Sense(enum.Enum):
    """Optimization direction of a quadratic objective."""

    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"


@dataclass(frozen=True)
class QsqsWeights:
    """Mixing weights for the three objective terms.

    ``score`` weighs the per-box confidence reward, ``iou`` and ``spatial``
    weigh the two pairwise redundancy penalties.  The three must be
    non-negative and sum to 1 (within ``1e-9``) so objectives stay on a
    comparable scale across configurations.
    """

    score: float = 0.4
    iou: float = 0.3
    spatial: float = 0.3

    def __post_init__(self) -> None:
        for name, value in (("score", self.score), ("iou", self.iou),
                            ("spatial", self.spatial)):
            if not (math.isfinite(value) and value >= 0.0):
                raise InvalidInputError(f"weight {name}={value} must be >= 0")
        total = self.score + self.iou + self.spatial
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidInputError(f"weights sum to {total}, expected 1")


@dataclass(frozen=True)
class EnhConfig:
    """Optional reweighting of low-confidence variables.

    When enabled, any detection with score below ``objectness_threshold``
    has its diagonal reward multiplied by ``score_penalty`` and every
    pairwise entry it participates in multiplied by ``overlap_reward``.
    A pair whose both endpoints are low-confidence is scaled twice.
    Softening the overlap penalties keeps a low-confidence box from
    dragging down a confident neighbor it overlaps.
    """

    enabled: bool = False
    objectness_threshold: float = 0.3
    score_penalty: float = 0.1
    overlap_reward: float = 0.7

    def __post_init__(self) -> None:
        if not 0.0 <= self.objectness_threshold <= 1.0:
            raise InvalidInputError(
                f"objectness_threshold {self.objectness_threshold} outside [0, 1]")
        if not 0.0 < self.score_penalty <= 1.0:
            raise InvalidInputError(
                f"score_penalty {self.score_penalty} outside (0, 1]")
        if not 0.0 < self.overlap_reward <= 1.0:
            raise InvalidInputError(
                f"overlap_reward {self.overlap_reward} outside (0, 1]")


@dataclass(frozen=True)
class QuboInstance:
    """An upper-triangular quadratic objective plus its direction.

    ``q`` is an ``(n, n)`` float matrix with all strictly-lower entries zero.
    ``labels`` names the variables (for detections, their source indices);
    it must contain ``n`` distinct values.
    """

    q: np.ndarray
    sense: Sense = Sense.MAXIMIZE
    labels: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        q = np.asarray(self.q, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] == 0:
            raise InvalidInputError(f"matrix must be square and non-empty, got {q.shape}")
        if not np.all(np.isfinite(q)):
            raise InvalidInputError("matrix entries must be finite")
        if np.any(np.tril(q, k=-1) != 0.0):
            raise InvalidInputError("entries below the diagonal must be zero")
        object.__setattr__(self, "q", q)
        labels = self.labels if self.labels else tuple(range(q.shape[0]))
        if len(labels) != q.shape[0] or len(set(labels)) != len(labels):
            raise InvalidInputError(
                f"need {q.shape[0]} distinct labels, got {labels!r}")
        object.__setattr__(self, "labels", tuple(int(v) for v in labels))

    @property
    def n(self) -> int:
        return self.q.shape[0]

    def to_json_dict(self) -> dict:
        """JSON-ready form listing non-zero entries row-major, ``i <= j``."""
        entries = []
        for i in range(self.n):
            for j in range(i, self.n):
                value = float(self.q[i, j])
                if value != 0.0:
                    entries.append([i, j, value])
        return {
            "n": self.n,
            "sense": self.sense.value,
            "entries": entries,
            "labels": list(self.labels),
        }


def qubo_from_json_dict(data: dict) -> QuboInstance:
    """Inverse of :meth:`QuboInstance.to_json_dict`."""
    n = int(data["n"])
    q = np.zeros((n, n), dtype=np.float64)
    for i, j, value in data["entries"]:
        if not 0 <= i <= j < n:
            raise InvalidInputError(f"entry ({i}, {j}) outside upper triangle")
        q[i, j] = value
    return QuboInstance(q=q, sense=Sense(data["sense"]),
                        labels=tuple(data.get("labels", range(n))))


@dataclass(frozen=True)
class IsingModel:
    """Spin-variable form of a quadratic objective.

    Energy of a spin vector ``s`` in ``{-1, +1}^n`` is
    ``sum_i h[i] s[i] + sum_{i<j} j[(i, j)] s[i] s[j] + offset``, equal to
    the binary objective at ``x = (s + 1) / 2``.
    """

    h: np.ndarray
    j: dict[tuple[int, int], float]
    offset: float
    sense: Sense = Sense.MAXIMIZE


def build_q(detections: Sequence[BoundingBox],
            weights: QsqsWeights = QsqsWeights(),
            enh: EnhConfig = EnhConfig()) -> QuboInstance:
    """Assemble the keep/discard objective for one image and one class.

    The diagonal entry for box ``i`` is ``weights.score * score_i``; the
    entry for a pair ``i < j`` is
    ``-(weights.iou * iou_ij + weights.spatial * spatial_ij)``.
    The instance is a maximization problem; labels are the boxes'
    ``source_index`` values.
    """
    if len(detections) == 0:
        raise EmptyInputError("cannot build an objective from zero detections")
    classes = {b.class_id for b in detections}
    if len(classes) > 1:
        raise InvalidInputError(
            f"detections span classes {sorted(classes)}; build one objective per class")
    n = len(detections)
    scores = np.array([b.score for b in detections], dtype=np.float64)
    q = np.zeros((n, n), dtype=np.float64)
    np.fill_diagonal(q, weights.score * scores)
    if n > 1:
        penalty = weights.iou * iou_matrix(detections)
        penalty += weights.spatial * spatial_overlap_matrix(detections)
        upper = np.triu_indices(n, k=1)
        q[upper] = -penalty[upper]
    if enh.enabled:
        for i in np.flatnonzero(scores < enh.objectness_threshold):
            q[i, i] *= enh.score_penalty
            q[i, i + 1:] *= enh.overlap_reward
            q[:i, i] *= enh.overlap_reward
    labels = tuple(b.source_index for b in detections)
    if len(set(labels)) != n:
        raise InvalidInputError("detections must carry distinct source indices")
    return QuboInstance(q=q, sense=Sense.MAXIMIZE, labels=labels)


def qubo_energy(instance: QuboInstance, bits: Sequence[int]) -> float:
    """Objective value of one assignment ``bits`` in ``{0, 1}^n``."""
    x = np.asarray(bits, dtype=np.float64)
    if x.shape != (instance.n,):
        raise InvalidInputError(
            f"assignment has shape {x.shape}, expected ({instance.n},)")
    if np.any((x != 0.0) & (x != 1.0)):
        raise InvalidInputError("assignment entries must be 0 or 1")
    return float(x @ instance.q @ x)


def negate(instance: QuboInstance) -> QuboInstance:
    """Flip the sign of every entry and the sense, preserving the optima."""
    flipped = Sense.MINIMIZE if instance.sense is Sense.MAXIMIZE else Sense.MAXIMIZE
    return QuboInstance(q=-instance.q, sense=flipped, labels=instance.labels)


def to_ising(instance: QuboInstance) -> IsingModel:
    """Rewrite the binary objective in spin variables ``s = 2x - 1``.

    Expanding ``x_i = (s_i + 1) / 2`` gives fields
    ``h_i = q_ii / 2 + sum_{j != i} q_{min(i,j),max(i,j)} / 4``, couplings
    ``j_ij = q_ij / 4`` for ``i < j``, and a constant
    ``offset = sum_i q_ii / 2 + sum_{i<j} q_ij / 4``.  The spin energy at
    ``s`` equals the binary energy at ``(s + 1) / 2`` exactly.
    """
    q = instance.q
    n = instance.n
    diag = np.diag(q)
    h = diag / 2.0
    offset = float(diag.sum()) / 2.0
    couplings: dict[tuple[int, int], float] = {}
    for i in range(n):
        for j in range(i + 1, n):
            value = q[i, j]
            if value == 0.0:
                continue
            quarter = value / 4.0
            couplings[(i, j)] = quarter
            h[i] += quarter
            h[j] += quarter
            offset += quarter
    return IsingModel(h=h, j=couplings, offset=offset, sense=instance.sense)


def ising_energy(model: IsingModel, spins: Sequence[int]) -> float:
    """Energy of one spin assignment in ``{-1, +1}^n``."""
    s = np.asarray(spins, dtype=np.float64)
    if s.shape != model.h.shape:
        raise InvalidInputError(
            f"assignment has shape {s.shape}, expected {model.h.shape}")
    if np.any((s != -1.0) & (s != 1.0)):
        raise InvalidInputError("spin entries must be -1 or +1")
    total = float(model.h @ s) + model.offset
    for (i, j), value in model.j.items():
        total += value * s[i] * s[j]
    return total
