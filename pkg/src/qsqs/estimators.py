"""Scikit-learn style transformers over the suppression pipelines.

Each suppressor is a stateless transformer: ``fit`` only validates input,
``transform`` maps one image's detections to the suppressed set.  Inputs
may be a list of :class:`~qsqs.geometry.BoundingBox` or an array with rows
``(x1, y1, x2, y2, score)`` or ``(x1, y1, x2, y2, score, class_id)``;
arrays come back as arrays with the same column count, boxes as boxes.
Being estimators, they clone and grid-search cleanly, including nested
solver parameters such as ``solver__reads``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import InvalidInputError
from .geometry import BoundingBox
from .qubo import EnhConfig, QsqsWeights
from .solvers import AnnealingSampler
from .suppression import Scheme, Solver, SuppressionConfig, suppress_image


def check_detections(X) -> list[BoundingBox]:
    """Validate one image's detections and return them as boxes.

    Accepts a sequence of :class:`BoundingBox` (validated on
    construction) or an array-like of shape ``(n, 5)`` or ``(n, 6)``.
    Rows of an array get ``source_index`` from their position and, when
    the class column is absent, ``class_id`` 0.
    """
    if X is None or not isinstance(X, (np.ndarray, list, tuple)):
        raise InvalidInputError(
            "detections must be an array or a sequence of BoundingBox")
    if isinstance(X, np.ndarray) or (X and not isinstance(X[0], BoundingBox)):
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] not in (5, 6):
            raise InvalidInputError(
                f"expected an (n, 5) or (n, 6) detection array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("detection array contains non-finite values")
        boxes = []
        for row_index, row in enumerate(arr):
            class_id = int(row[5]) if arr.shape[1] == 6 else 0
            try:
                boxes.append(BoundingBox(row[0], row[1], row[2], row[3],
                                         score=row[4], class_id=class_id,
                                         source_index=row_index))
            except InvalidInputError as exc:
                raise InvalidInputError(f"row {row_index}: {exc}") from exc
        return boxes
    boxes = list(X)
    if not all(isinstance(b, BoundingBox) for b in boxes):
        raise InvalidInputError("mixed or unsupported detection input types")
    if len({b.source_index for b in boxes}) != len(boxes):
        raise InvalidInputError("detections must carry distinct source indices")
    return boxes


def detections_to_array(boxes: Sequence[BoundingBox], n_columns: int = 5) -> np.ndarray:
    """Inverse of :func:`check_detections` for array consumers."""
    if n_columns not in (5, 6):
        raise InvalidInputError(f"n_columns must be 5 or 6, got {n_columns}")
    rows = [(b.x1, b.y1, b.x2, b.y2, b.score) + ((b.class_id,) if n_columns == 6 else ())
            for b in boxes]
    return np.array(rows, dtype=np.float64).reshape(-1, n_columns)


class BaseSuppressor(BaseEstimator, TransformerMixin):
    """Common fit/transform plumbing; subclasses provide the config."""

    def _config(self) -> SuppressionConfig:
        raise NotImplementedError

    def _solver(self) -> Solver | None:
        return None

    def fit(self, X, y=None):
        check_detections(X)
        return self

    def transform(self, X) -> np.ndarray | list[BoundingBox]:
        boxes = check_detections(X)
        out = suppress_image(boxes, self._config(), self._solver())
        if isinstance(X, np.ndarray):
            return detections_to_array(out, n_columns=X.shape[1])
        return out


class NmsSuppressor(BaseSuppressor):
    """Greedy NMS baseline.

    Parameters
    ----------
    iou_threshold : float, default=0.3
        Boxes overlapping a kept box at or above this IoU are removed.
    """

    def __init__(self, iou_threshold: float = 0.3):
        self.iou_threshold = iou_threshold

    def _config(self) -> SuppressionConfig:
        return SuppressionConfig(scheme=Scheme.NMS,
                                 nms_threshold=self.iou_threshold)


class SoftNmsSuppressor(BaseSuppressor):
    """Gaussian score-decay suppression.

    Parameters
    ----------
    sigma : float, default=0.5
        Width of the Gaussian decay ``exp(-iou^2 / sigma)``.
    score_threshold : float, default=0.01
        Decayed boxes below this score are dropped.
    """

    def __init__(self, sigma: float = 0.5, score_threshold: float = 0.01):
        self.sigma = sigma
        self.score_threshold = score_threshold

    def _config(self) -> SuppressionConfig:
        return SuppressionConfig(scheme=Scheme.SOFT_NMS, sigma=self.sigma,
                                 final_score_threshold=self.score_threshold)


class QuboSuppressor(BaseSuppressor):
    """QUBO-based suppression with optional soft recovery.

    Parameters
    ----------
    weights : tuple of three floats, default=(0.4, 0.3, 0.3)
        Mixing weights (score reward, IoU penalty, closeness penalty);
        must sum to 1.
    pre_nms_threshold : float, default=0.5
        IoU threshold of the NMS pre-suppression stage.
    qubit_cap : int, default=35
        Maximum number of binary variables per class (hard cap 45).
    sigma : float, default=0.5
        Gaussian decay width for recovering rejected boxes.
    score_threshold : float, default=0.01
        Floor a decayed box must reach to re-enter the output.
    soft_rescore : bool, default=True
        When False, rejected boxes are discarded instead of rescored.
    enhance : bool, default=False
        Reweight low-confidence variables (implies soft rescoring).
    objectness_threshold, score_penalty, overlap_reward : float
        Enhancement factors; used only when ``enhance`` is True.
    solver : sampler or None, default=None
        Any object with ``sample(instance) -> SampleSet``.  None selects
        a default annealing sampler seeded with ``random_state``.
    random_state : int, default=0
        Seed for the default solver.
    """

    def __init__(self, weights: tuple[float, float, float] = (0.4, 0.3, 0.3),
                 pre_nms_threshold: float = 0.5, qubit_cap: int = 35,
                 sigma: float = 0.5, score_threshold: float = 0.01,
                 soft_rescore: bool = True, enhance: bool = False,
                 objectness_threshold: float = 0.3, score_penalty: float = 0.1,
                 overlap_reward: float = 0.7, solver: Solver | None = None,
                 random_state: int = 0):
        self.weights = weights
        self.pre_nms_threshold = pre_nms_threshold
        self.qubit_cap = qubit_cap
        self.sigma = sigma
        self.score_threshold = score_threshold
        self.soft_rescore = soft_rescore
        self.enhance = enhance
        self.objectness_threshold = objectness_threshold
        self.score_penalty = score_penalty
        self.overlap_reward = overlap_reward
        self.solver = solver
        self.random_state = random_state

    def _scheme(self) -> Scheme:
        if self.enhance:
            if not self.soft_rescore:
                raise InvalidInputError(
                    "enhance=True requires soft_rescore=True")
            return Scheme.QSQS_ENH
        return Scheme.QSQS if self.soft_rescore else Scheme.QQS

    def _config(self) -> SuppressionConfig:
        w = QsqsWeights(*self.weights)
        enh = EnhConfig(enabled=self.enhance,
                        objectness_threshold=self.objectness_threshold,
                        score_penalty=self.score_penalty,
                        overlap_reward=self.overlap_reward)
        return SuppressionConfig(scheme=self._scheme(), weights=w,
                                 pre_nms_threshold=self.pre_nms_threshold,
                                 qubit_cap=self.qubit_cap, sigma=self.sigma,
                                 final_score_threshold=self.score_threshold,
                                 enh=enh)

    def _solver(self) -> Solver:
        if self.solver is not None:
            return self.solver
        return AnnealingSampler(random_state=self.random_state)


def make_suppressor(cfg: SuppressionConfig, solver: Solver | None = None,
                    random_state: int = 0) -> BaseSuppressor:
    """Estimator equivalent of a :class:`SuppressionConfig`."""
    if cfg.scheme is Scheme.NMS:
        return NmsSuppressor(iou_threshold=cfg.nms_threshold)
    if cfg.scheme is Scheme.SOFT_NMS:
        return SoftNmsSuppressor(sigma=cfg.sigma,
                                 score_threshold=cfg.final_score_threshold)
    return QuboSuppressor(
        weights=(cfg.weights.score, cfg.weights.iou, cfg.weights.spatial),
        pre_nms_threshold=cfg.pre_nms_threshold, qubit_cap=cfg.qubit_cap,
        sigma=cfg.sigma, score_threshold=cfg.final_score_threshold,
        soft_rescore=cfg.scheme is not Scheme.QQS,
        enhance=cfg.scheme is Scheme.QSQS_ENH,
        objectness_threshold=cfg.enh.objectness_threshold,
        score_penalty=cfg.enh.score_penalty,
        overlap_reward=cfg.enh.overlap_reward,
        solver=solver, random_state=random_state)
