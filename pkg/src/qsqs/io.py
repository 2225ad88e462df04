"""JSON file contracts for detections, ground truth, and configuration.

All three formats carry a top-level ``"format_version": 1``.  Loading
validates eagerly and reports the offending record; saving normalizes, so
save-then-load is the identity and a saved file is byte-stable.

Detections::

    {"format_version": 1,
     "images": [{"image_id": "img1",
                 "detections": [{"bbox": [x1, y1, x2, y2],
                                 "score": 0.9, "class_id": 0}]}]}

Ground truth replaces ``detections`` with ``objects`` entries of
``{"bbox": [...], "class_id": 0, "ignore": false}`` (score-free; ``ignore``
defaults to false).  Configuration::

    {"format_version": 1, "scheme": "qsqs", "pre_nms_threshold": 0.5,
     "qubit_cap": 35, "weights": {"score": 0.4, "iou": 0.3, "spatial": 0.3},
     "sigma": 0.5, "final_score_threshold": 0.01, "nms_threshold": 0.3,
     "enh": {"objectness_threshold": 0.3, "score_penalty": 0.1,
             "overlap_reward": 0.7}}

Every configuration field is optional; omitted fields keep the values of
the base configuration passed to :func:`load_config` (the documented
defaults when no base is given).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .evaluation import GroundTruth
from .exceptions import InvalidInputError, ParseError, ValidationError
from .geometry import BoundingBox
from .qubo import EnhConfig, QsqsWeights
from .suppression import Scheme, SuppressionConfig

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ImageDetections:
    """All detections of one image, ordered as in the file."""

    image_id: str
    boxes: tuple[BoundingBox, ...]


@dataclass(frozen=True)
class DetectionFile:
    """Parsed detection dump: one entry per image, ids unique."""

    images: tuple[ImageDetections, ...]

    def by_image(self) -> dict[str, tuple[BoundingBox, ...]]:
        return {img.image_id: img.boxes for img in self.images}


@dataclass(frozen=True)
class GroundTruthFile:
    """Parsed annotations: one :class:`GroundTruth` per image, ids unique."""

    images: tuple[GroundTruth, ...]


def _read_json(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: "
                         f"{exc.msg}") from exc
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: top level must be a JSON object")
    version = data.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ValidationError(
            f"{path}: unsupported format_version {version!r}, expected {FORMAT_VERSION}")
    return data


def _context(path, where: str, exc: Exception) -> ValidationError:
    return ValidationError(f"{path}: {where}: {exc}")


def _require(data: dict, key: str, path, where: str):
    if key not in data:
        raise ValidationError(f"{path}: {where}: missing required field {key!r}")
    return data[key]


def _parse_bbox(entry: dict, path, where: str, *, score: float,
                class_id_default: int = 0, source_index: int = 0) -> BoundingBox:
    bbox = _require(entry, "bbox", path, where)
    if not (isinstance(bbox, list) and len(bbox) == 4
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox)):
        raise ValidationError(f"{path}: {where}: bbox must be [x1, y1, x2, y2]")
    class_id = entry.get("class_id", class_id_default)
    if not isinstance(class_id, int) or isinstance(class_id, bool):
        raise ValidationError(f"{path}: {where}: class_id must be an integer")
    try:
        return BoundingBox(float(bbox[0]), float(bbox[1]), float(bbox[2]),
                           float(bbox[3]), score=score, class_id=class_id,
                           source_index=source_index)
    except InvalidInputError as exc:
        raise _context(path, where, exc) from exc


def _unique_image_ids(images: Sequence, path) -> None:
    seen = set()
    for img in images:
        if img.image_id in seen:
            raise ValidationError(f"{path}: duplicate image_id {img.image_id!r}")
        seen.add(img.image_id)


def load_detections(path) -> DetectionFile:
    """Load and validate a detection file.

    ``source_index`` is assigned from each detection's position within
    its image entry.  Missing files surface as ``OSError``; malformed
    JSON as :class:`ParseError`; contract violations as
    :class:`ValidationError` naming the record.
    """
    data = _read_json(path)
    images = []
    for img_entry in _require(data, "images", path, "top level"):
        image_id = _require(img_entry, "image_id", path, "images[]")
        if not isinstance(image_id, str):
            raise ValidationError(f"{path}: images[]: image_id must be a string")
        boxes = []
        for index, det in enumerate(img_entry.get("detections", [])):
            where = f"image {image_id!r}, detection #{index}"
            score = _require(det, "score", path, where)
            if not isinstance(score, (int, float)) or isinstance(score, bool):
                raise ValidationError(f"{path}: {where}: score must be a number")
            boxes.append(_parse_bbox(det, path, where, score=float(score),
                                     source_index=index))
        images.append(ImageDetections(image_id=image_id, boxes=tuple(boxes)))
    _unique_image_ids(images, path)
    return DetectionFile(images=tuple(images))


def save_detections(detections: DetectionFile, path) -> None:
    """Write a detection file in the normalized form load expects."""
    payload = {
        "format_version": FORMAT_VERSION,
        "images": [
            {
                "image_id": img.image_id,
                "detections": [
                    {"bbox": [b.x1, b.y1, b.x2, b.y2], "score": b.score,
                     "class_id": b.class_id}
                    for b in img.boxes
                ],
            }
            for img in detections.images
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_ground_truth(path) -> GroundTruthFile:
    """Load and validate an annotation file; ``ignore`` defaults to false."""
    data = _read_json(path)
    images = []
    for img_entry in _require(data, "images", path, "top level"):
        image_id = _require(img_entry, "image_id", path, "images[]")
        if not isinstance(image_id, str):
            raise ValidationError(f"{path}: images[]: image_id must be a string")
        boxes = []
        flags = []
        for index, obj in enumerate(img_entry.get("objects", [])):
            where = f"image {image_id!r}, object #{index}"
            ignore = obj.get("ignore", False)
            if not isinstance(ignore, bool):
                raise ValidationError(f"{path}: {where}: ignore must be a boolean")
            boxes.append(_parse_bbox(obj, path, where, score=1.0,
                                     source_index=index))
            flags.append(ignore)
        images.append(GroundTruth(image_id=image_id, boxes=tuple(boxes),
                                  ignore_flags=tuple(flags)))
    _unique_image_ids(images, path)
    return GroundTruthFile(images=tuple(images))


def save_ground_truth(ground_truth: GroundTruthFile, path) -> None:
    """Write an annotation file in the normalized form load expects."""
    payload = {
        "format_version": FORMAT_VERSION,
        "images": [
            {
                "image_id": gt.image_id,
                "objects": [
                    {"bbox": [b.x1, b.y1, b.x2, b.y2], "class_id": b.class_id,
                     "ignore": ign}
                    for b, ign in zip(gt.boxes, gt.ignore_flags)
                ],
            }
            for gt in ground_truth.images
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


_SCHEME_NAMES = {s.value: s for s in Scheme}


def _parse_scheme(name, path) -> Scheme:
    if not isinstance(name, str) or name not in _SCHEME_NAMES:
        raise ValidationError(
            f"{path}: unknown scheme {name!r}; valid schemes: "
            + ", ".join(sorted(_SCHEME_NAMES)))
    return _SCHEME_NAMES[name]


def _number(data: dict, key: str, default: float, path) -> float:
    value = data.get(key, default)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValidationError(f"{path}: {key} must be a number")
    return float(value)


def load_config(path, base: SuppressionConfig | None = None) -> SuppressionConfig:
    """Load a configuration file on top of ``base``.

    Fields present in the file override the base configuration; absent
    fields keep it.  With no base, the documented defaults apply.
    """
    if base is None:
        base = SuppressionConfig()
    data = _read_json(path)
    scheme = base.scheme
    if "scheme" in data:
        scheme = _parse_scheme(data["scheme"], path)
    weights = base.weights
    if "weights" in data:
        w = data["weights"]
        if not isinstance(w, dict):
            raise ValidationError(
                f"{path}: weights must be an object with score/iou/spatial")
        try:
            weights = QsqsWeights(
                score=_number(w, "score", base.weights.score, path),
                iou=_number(w, "iou", base.weights.iou, path),
                spatial=_number(w, "spatial", base.weights.spatial, path))
        except InvalidInputError as exc:
            raise _context(path, "weights", exc) from exc
    enh = base.enh
    if "enh" in data:
        e = data["enh"]
        if not isinstance(e, dict):
            raise ValidationError(f"{path}: enh must be an object")
        enabled = e.get("enabled", base.enh.enabled)
        if not isinstance(enabled, bool):
            raise ValidationError(f"{path}: enh.enabled must be a boolean")
        try:
            enh = EnhConfig(
                enabled=enabled,
                objectness_threshold=_number(e, "objectness_threshold",
                                             base.enh.objectness_threshold, path),
                score_penalty=_number(e, "score_penalty",
                                      base.enh.score_penalty, path),
                overlap_reward=_number(e, "overlap_reward",
                                       base.enh.overlap_reward, path))
        except InvalidInputError as exc:
            raise _context(path, "enh", exc) from exc
    qubit_cap = data.get("qubit_cap", base.qubit_cap)
    if not isinstance(qubit_cap, int) or isinstance(qubit_cap, bool):
        raise ValidationError(f"{path}: qubit_cap must be an integer")
    try:
        return SuppressionConfig(
            scheme=scheme,
            pre_nms_threshold=_number(data, "pre_nms_threshold",
                                      base.pre_nms_threshold, path),
            qubit_cap=qubit_cap,
            weights=weights,
            sigma=_number(data, "sigma", base.sigma, path),
            final_score_threshold=_number(data, "final_score_threshold",
                                          base.final_score_threshold, path),
            nms_threshold=_number(data, "nms_threshold", base.nms_threshold, path),
            enh=enh)
    except InvalidInputError as exc:
        raise _context(path, "config", exc) from exc


def save_config(config: SuppressionConfig, path) -> None:
    """Write a configuration file with every field explicit."""
    payload = {
        "format_version": FORMAT_VERSION,
        "scheme": config.scheme.value,
        "pre_nms_threshold": config.pre_nms_threshold,
        "qubit_cap": config.qubit_cap,
        "weights": {"score": config.weights.score, "iou": config.weights.iou,
                    "spatial": config.weights.spatial},
        "sigma": config.sigma,
        "final_score_threshold": config.final_score_threshold,
        "nms_threshold": config.nms_threshold,
        "enh": {"enabled": config.enh.enabled,
                "objectness_threshold": config.enh.objectness_threshold,
                "score_penalty": config.enh.score_penalty,
                "overlap_reward": config.enh.overlap_reward},
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
