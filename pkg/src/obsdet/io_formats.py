"""File formats: detection/ground-truth/observation JSON and sweep CSV.

All JSON is UTF-8 with boxes serialized as 4-element ``[x1, y1, x2, y2]``
arrays and numbers at full precision. Class index 0 is reserved for the
unknown/background class in every file. Loaders validate everything at
load time and never hand back an invariant-violating object: malformed
input raises a typed error naming the offending image/pass/detection,
never a bare crash.

Sweep results use a CSV with the fixed header
``theta,tp,fp,fn,abs_ose,precision,recall,f1``, one ascending-theta row
per grid point, floats at 6 decimal places, and a trailing newline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

from .detection import Detection, GroundTruthObject
from .evaluation import CurvePoint, EvalCounts, Scene
from .fusion import Observation
from .geometry import BoundingBox

RESULTS_HEADER = "theta,tp,fp,fn,abs_ose,precision,recall,f1"
UNKNOWN_CLASS_NAME = "unknown"


class FileFormatError(ValueError):
    """Base class for everything a loader can reject."""


class ParseError(FileFormatError):
    """File is not syntactically valid (malformed JSON / CSV)."""


class SchemaError(FileFormatError):
    """Structure is wrong: missing field, wrong type, wrong arity."""


class ValidationError(FileFormatError):
    """Structure is right but a value violates an invariant."""


@dataclass(frozen=True)
class DetectionImage:
    image_id: str
    passes: list[list[Detection]]


@dataclass(frozen=True)
class DetectionFile:
    class_count: int
    images: list[DetectionImage]
    class_names: list[str] | None = None


@dataclass(frozen=True)
class GroundTruthImage:
    image_id: str
    objects: list[GroundTruthObject]


@dataclass(frozen=True)
class GroundTruthFile:
    class_count: int
    images: list[GroundTruthImage]


@dataclass(frozen=True)
class ObservationRecord:
    """Serialized summary of a fused observation (no member detections)."""

    fused_scores: list[float]
    entropy: float
    fused_box: BoundingBox
    box_covariance: list[float]  # 16 entries, row-major
    winning_label: int
    detection_count: int


@dataclass(frozen=True)
class ObservationImage:
    image_id: str
    observations: list[ObservationRecord]


@dataclass(frozen=True)
class ObservationFile:
    class_count: int
    images: list[ObservationImage]


def _require(mapping, key: str, kind, where: str):
    if not isinstance(mapping, dict):
        raise SchemaError(f"{where}: expected an object, got {type(mapping).__name__}")
    if key not in mapping:
        raise SchemaError(f"{where}: missing field {key!r}")
    value = mapping[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"{where}: field {key!r} must be a number, got {type(value).__name__}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(f"{where}: field {key!r} must be an integer, got {type(value).__name__}")
        return value
    if not isinstance(value, kind):
        raise SchemaError(
            f"{where}: field {key!r} must be {kind.__name__}, got {type(value).__name__}"
        )
    return value


def _number_list(raw, length: int | None, name: str, where: str) -> list[float]:
    if not isinstance(raw, list):
        raise SchemaError(f"{where}: {name} must be an array, got {type(raw).__name__}")
    if length is not None and len(raw) != length:
        raise SchemaError(f"{where}: {name} must have length {length}, got {len(raw)}")
    out = []
    for v in raw:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"{where}: {name} entries must be numbers, got {type(v).__name__}")
        out.append(float(v))
    return out


def _box(raw, where: str) -> BoundingBox:
    coords = _number_list(raw, 4, "bbox", where)
    try:
        return BoundingBox(*coords)
    except ValueError as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def _load_json(path) -> object:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from exc


def _check_unique_ids(images, path) -> None:
    seen: set[str] = set()
    for image in images:
        if image.image_id in seen:
            raise ValidationError(f"{path}: duplicate image_id {image.image_id!r}")
        seen.add(image.image_id)


def _class_count(raw, path) -> int:
    k = _require(raw, "class_count", int, str(path))
    if k < 1:
        raise ValidationError(f"{path}: class_count must be >= 1, got {k}")
    return k


def load_detections(path) -> DetectionFile:
    """Load and fully validate a detection file."""
    raw = _load_json(path)
    k = _class_count(raw, path)

    class_names = None
    if isinstance(raw, dict) and raw.get("class_names") is not None:
        names = raw["class_names"]
        if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
            raise SchemaError(f"{path}: class_names must be an array of strings")
        if len(names) != k + 1:
            raise SchemaError(f"{path}: class_names must have length {k + 1}, got {len(names)}")
        if names[0] != UNKNOWN_CLASS_NAME:
            raise ValidationError(
                f"{path}: class_names[0] is reserved for {UNKNOWN_CLASS_NAME!r}, got {names[0]!r}"
            )
        class_names = list(names)

    images_raw = _require(raw, "images", list, str(path))
    images = []
    for img_idx, image_raw in enumerate(images_raw):
        where = f"{path}: image {img_idx}"
        image_id = _require(image_raw, "image_id", str, where)
        where = f"{path}: image {image_id!r}"
        passes_raw = _require(image_raw, "passes", list, where)
        passes = []
        for pass_idx, pass_raw in enumerate(passes_raw):
            if not isinstance(pass_raw, list):
                raise SchemaError(f"{where} pass {pass_idx}: expected an array of detections")
            dets = []
            for det_idx, det_raw in enumerate(pass_raw):
                det_where = f"{where} pass {pass_idx} detection {det_idx}"
                box = _box(_require(det_raw, "bbox", list, det_where), det_where)
                scores = _number_list(
                    _require(det_raw, "scores", list, det_where), k + 1, "scores", det_where
                )
                try:
                    dets.append(Detection(scores=scores, box=box, pass_index=pass_idx))
                except ValueError as exc:
                    raise ValidationError(f"{det_where}: {exc}") from exc
            passes.append(dets)
        images.append(DetectionImage(image_id=image_id, passes=passes))

    result = DetectionFile(class_count=k, images=images, class_names=class_names)
    _check_unique_ids(result.images, path)
    return result


def save_detections(detection_file: DetectionFile, path) -> None:
    payload = {
        "class_count": detection_file.class_count,
        "images": [
            {
                "image_id": image.image_id,
                "passes": [
                    [
                        {"bbox": det.box.as_list(), "scores": det.scores.tolist()}
                        for det in dets
                    ]
                    for dets in image.passes
                ],
            }
            for image in detection_file.images
        ],
    }
    if detection_file.class_names is not None:
        payload["class_names"] = detection_file.class_names
    _write_json(payload, path)


def load_ground_truth(path) -> GroundTruthFile:
    """Load and fully validate a ground-truth file."""
    raw = _load_json(path)
    k = _class_count(raw, path)
    images_raw = _require(raw, "images", list, str(path))
    images = []
    for img_idx, image_raw in enumerate(images_raw):
        where = f"{path}: image {img_idx}"
        image_id = _require(image_raw, "image_id", str, where)
        where = f"{path}: image {image_id!r}"
        objects_raw = _require(image_raw, "objects", list, where)
        objects = []
        for obj_idx, obj_raw in enumerate(objects_raw):
            obj_where = f"{where} object {obj_idx}"
            box = _box(_require(obj_raw, "bbox", list, obj_where), obj_where)
            label = _require(obj_raw, "label", int, obj_where)
            if not 0 <= label <= k:
                raise ValidationError(f"{obj_where}: label must be in [0, {k}], got {label}")
            objects.append(GroundTruthObject(box=box, label=label))
        images.append(GroundTruthImage(image_id=image_id, objects=objects))
    result = GroundTruthFile(class_count=k, images=images)
    _check_unique_ids(result.images, path)
    return result


def save_ground_truth(gt_file: GroundTruthFile, path) -> None:
    payload = {
        "class_count": gt_file.class_count,
        "images": [
            {
                "image_id": image.image_id,
                "objects": [
                    {"bbox": obj.box.as_list(), "label": obj.label} for obj in image.objects
                ],
            }
            for image in gt_file.images
        ],
    }
    _write_json(payload, path)


def observation_record(obs: Observation) -> ObservationRecord:
    """Summary record of a fused observation, as serialized to disk."""
    return ObservationRecord(
        fused_scores=[float(v) for v in obs.fused_scores],
        entropy=float(obs.entropy),
        fused_box=obs.fused_box,
        box_covariance=[float(v) for v in obs.box_covariance.reshape(-1)],
        winning_label=int(obs.winning_label),
        detection_count=int(obs.detection_count),
    )


def load_observations(path) -> ObservationFile:
    """Load and validate a fused-observations file."""
    raw = _load_json(path)
    k = _class_count(raw, path)
    images_raw = _require(raw, "images", list, str(path))
    images = []
    for img_idx, image_raw in enumerate(images_raw):
        where = f"{path}: image {img_idx}"
        image_id = _require(image_raw, "image_id", str, where)
        where = f"{path}: image {image_id!r}"
        observations_raw = _require(image_raw, "observations", list, where)
        records = []
        for obs_idx, obs_raw in enumerate(observations_raw):
            obs_where = f"{where} observation {obs_idx}"
            scores = _number_list(
                _require(obs_raw, "fused_scores", list, obs_where), k + 1, "fused_scores", obs_where
            )
            total = sum(scores)
            if any(not 0.0 <= s <= 1.0 for s in scores) or abs(total - 1.0) > 1e-6:
                raise ValidationError(f"{obs_where}: fused_scores is not a probability vector")
            entropy_value = _require(obs_raw, "entropy", float, obs_where)
            if not math.isfinite(entropy_value) or entropy_value < 0.0:
                raise ValidationError(f"{obs_where}: entropy must be >= 0, got {entropy_value}")
            box = _box(_require(obs_raw, "fused_box", list, obs_where), obs_where)
            covariance = _number_list(
                _require(obs_raw, "box_covariance", list, obs_where), 16, "box_covariance", obs_where
            )
            label = _require(obs_raw, "winning_label", int, obs_where)
            if not 0 <= label <= k:
                raise ValidationError(f"{obs_where}: winning_label must be in [0, {k}], got {label}")
            count = _require(obs_raw, "detection_count", int, obs_where)
            if count < 1:
                raise ValidationError(f"{obs_where}: detection_count must be >= 1, got {count}")
            records.append(
                ObservationRecord(
                    fused_scores=scores,
                    entropy=entropy_value,
                    fused_box=box,
                    box_covariance=covariance,
                    winning_label=label,
                    detection_count=count,
                )
            )
        images.append(ObservationImage(image_id=image_id, observations=records))
    result = ObservationFile(class_count=k, images=images)
    _check_unique_ids(result.images, path)
    return result


def save_observations(obs_file: ObservationFile, path) -> None:
    payload = {
        "class_count": obs_file.class_count,
        "images": [
            {
                "image_id": image.image_id,
                "observations": [
                    {
                        "fused_scores": rec.fused_scores,
                        "entropy": rec.entropy,
                        "fused_box": rec.fused_box.as_list(),
                        "box_covariance": rec.box_covariance,
                        "winning_label": rec.winning_label,
                        "detection_count": rec.detection_count,
                    }
                    for rec in image.observations
                ],
            }
            for image in obs_file.images
        ],
    }
    _write_json(payload, path)


def save_results(points: Sequence[CurvePoint], path) -> None:
    """Write sweep results as CSV, ascending theta, trailing newline."""
    ordered = sorted(points, key=lambda p: p.theta)
    lines = [RESULTS_HEADER]
    for p in ordered:
        lines.append(
            f"{p.theta:.6f},{p.counts.tp},{p.counts.fp},{p.counts.fn},{p.counts.abs_ose},"
            f"{p.precision:.6f},{p.recall:.6f},{p.f1:.6f}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_results(path) -> list[CurvePoint]:
    """Parse a sweep CSV back into curve points (6-decimal precision)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != RESULTS_HEADER:
        raise ParseError(f"{path}: expected header {RESULTS_HEADER!r}")
    points = []
    for row_idx, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != 8:
            raise ParseError(f"{path}: line {row_idx}: expected 8 fields, got {len(fields)}")
        try:
            theta = float(fields[0])
            tp, fp, fn, ose = (int(v) for v in fields[1:5])
            precision, recall, f1 = (float(v) for v in fields[5:8])
        except ValueError as exc:
            raise ParseError(f"{path}: line {row_idx}: {exc}") from exc
        try:
            counts = EvalCounts(tp=tp, fp=fp, fn=fn, abs_ose=ose)
        except ValueError as exc:
            raise ValidationError(f"{path}: line {row_idx}: {exc}") from exc
        points.append(CurvePoint(theta=theta, counts=counts, precision=precision, recall=recall, f1=f1))
    return points


def pair_scenes(detections: DetectionFile, ground_truth: GroundTruthFile) -> list[Scene]:
    """Match detection images with ground-truth images by image_id.

    Every detection image must have a ground-truth entry; ground-truth
    images without detections still contribute (their known objects all
    count as false negatives). Class counts must agree.
    """
    if detections.class_count != ground_truth.class_count:
        raise ValidationError(
            f"class_count mismatch: detections have {detections.class_count}, "
            f"ground truth has {ground_truth.class_count}"
        )
    det_by_id = {image.image_id: image for image in detections.images}
    gt_ids = {image.image_id for image in ground_truth.images}
    missing = sorted(set(det_by_id) - gt_ids)
    if missing:
        raise ValidationError(f"detections reference image_ids without ground truth: {missing[:5]}")
    scenes: list[Scene] = []
    for gt_image in ground_truth.images:
        det_image = det_by_id.get(gt_image.image_id)
        flat = [det for dets in det_image.passes for det in dets] if det_image else []
        scenes.append((flat, gt_image.objects))
    return scenes


def _write_json(payload, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
