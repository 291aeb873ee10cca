"""Open-set scoring of fused observations against ground truth.

Counting rules, applied per scene to observations that survived
filtering (minimum detection count, entropy test, and a winning label
other than unknown):

* An accepted observation is matched to every ground-truth object whose
  box overlaps its fused box with IoU >= the matching threshold (0.5 by
  default). If its winning label equals the label of any matched object
  it is a true positive; if it matched known objects but none agrees it
  is a false positive; if it matched nothing, or only unknown-class
  objects, it is a false positive that also counts one unit of absolute
  open-set error (a confident verdict on unknown content).
* A known ground-truth object counts as a false negative when no
  accepted observation both overlaps it and carries its label.
* Observations whose winning label is 0 are treated as self-rejected:
  they never enter the counts, and objects they cover can still be
  false negatives.

Observations are counted individually: several true positives may land
on the same object. Scenes are aggregated by summing counts before any
ratio is formed (micro-averaging), and metrics use the conventions
precision = tp/(tp+fp), recall = tp/(tp+fn), f1 = harmonic mean, each 0
when its denominator is 0.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .detection import Detection, GroundTruthObject
from .fusion import Observation, extract_observations, passes_entropy_test
from .geometry import iou
from .partition import DEFAULT_CLUSTER_IOU

DEFAULT_MATCH_IOU = 0.5

#: One scene: the image's raw detections plus its ground-truth objects.
Scene = tuple[Sequence[Detection], Sequence[GroundTruthObject]]


@dataclass(frozen=True)
class EvalConfig:
    """Thresholds for one evaluation run."""

    theta: float
    match_iou: float = DEFAULT_MATCH_IOU
    min_detections: int = 1
    cluster_iou: float = DEFAULT_CLUSTER_IOU

    def __post_init__(self) -> None:
        if math.isnan(self.theta) or self.theta < 0.0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")
        if not 0.0 < self.match_iou <= 1.0:
            raise ValueError(f"match_iou must be in (0, 1], got {self.match_iou}")
        if self.min_detections < 1:
            raise ValueError(f"min_detections must be >= 1, got {self.min_detections}")
        if not 0.0 < self.cluster_iou <= 1.0:
            raise ValueError(f"cluster_iou must be in (0, 1], got {self.cluster_iou}")


@dataclass(frozen=True)
class EvalCounts:
    """TP/FP/FN and absolute open-set error tallies."""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    abs_ose: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.abs_ose) < 0:
            raise ValueError("counts must be non-negative")
        if self.abs_ose > self.fp:
            raise ValueError(f"abs_ose ({self.abs_ose}) cannot exceed fp ({self.fp})")

    def __add__(self, other: "EvalCounts") -> "EvalCounts":
        return EvalCounts(
            self.tp + other.tp,
            self.fp + other.fp,
            self.fn + other.fn,
            self.abs_ose + other.abs_ose,
        )

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp > 0 else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn > 0 else 0.0

    @property
    def f1(self) -> float:
        return f1_score(self.precision, self.recall)


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class CurvePoint:
    """Aggregated counts and derived metrics at one entropy threshold."""

    theta: float
    counts: EvalCounts
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, theta: float, counts: EvalCounts) -> "CurvePoint":
        return cls(theta, counts, counts.precision, counts.recall, counts.f1)

    @property
    def abs_ose(self) -> int:
        return self.counts.abs_ose


def filter_observations(
    observations: Iterable[Observation], config: EvalConfig
) -> list[Observation]:
    """Keep observations that pass the detection-count and entropy tests.

    The minimum-detections requirement applies before the entropy test;
    winning-label-0 observations are dropped as self-rejected.
    """
    accepted = []
    for obs in observations:
        if obs.detection_count < config.min_detections:
            continue
        if not passes_entropy_test(obs.entropy, config.theta):
            continue
        if obs.winning_label == 0:
            continue
        accepted.append(obs)
    return accepted


def score_scene(
    observations: Sequence[Observation],
    ground_truth: Sequence[GroundTruthObject],
    config: EvalConfig,
) -> EvalCounts:
    """Count TP/FP/FN/OSE for one scene's already-filtered observations."""
    tp = fp = ose = 0
    detected: set[int] = set()
    for obs in observations:
        matched = [
            idx
            for idx, gt in enumerate(ground_truth)
            if iou(obs.fused_box, gt.box) >= config.match_iou
        ]
        agreeing = [idx for idx in matched if ground_truth[idx].label == obs.winning_label]
        if agreeing:
            tp += 1
            detected.update(agreeing)
        elif any(ground_truth[idx].is_known for idx in matched):
            fp += 1
        else:
            fp += 1
            ose += 1
    known = [idx for idx, gt in enumerate(ground_truth) if gt.is_known]
    fn = len(known) - len(detected)
    return EvalCounts(tp=tp, fp=fp, fn=fn, abs_ose=ose)


def evaluate_scene(scene: Scene, config: EvalConfig) -> EvalCounts:
    """Full single-scene pipeline: partition, fuse, filter, score."""
    detections, ground_truth = scene
    observations = extract_observations(detections, config.cluster_iou)
    accepted = filter_observations(observations, config)
    return score_scene(accepted, ground_truth, config)


def aggregate(counts_per_scene: Iterable[EvalCounts], theta: float) -> CurvePoint:
    """Sum counts across scenes, then derive metrics from the totals."""
    total = EvalCounts()
    for counts in counts_per_scene:
        total = total + counts
    return CurvePoint.from_counts(theta, total)


def evaluate_dataset(
    scenes: Sequence[Scene], config: EvalConfig, workers: int = 1
) -> CurvePoint:
    """Score every scene at one threshold and micro-average the counts."""
    per_scene = _map_scenes(lambda s: evaluate_scene(s, config), scenes, workers)
    return aggregate(per_scene, config.theta)


class _SceneCache:
    """Theta-independent scoring state for one scene, reused across a sweep.

    For each observation that already satisfies the detection-count and
    winning-label requirements we precompute its entropy, its eventual
    outcome, and which known objects it would mark detected; per theta
    only the entropy comparison remains.
    """

    __slots__ = ("entries", "num_known")

    _TP, _FP, _OSE = 0, 1, 2

    def __init__(
        self,
        observations: Sequence[Observation],
        ground_truth: Sequence[GroundTruthObject],
        config: EvalConfig,
    ):
        self.num_known = sum(1 for gt in ground_truth if gt.is_known)
        self.entries: list[tuple[float, int, frozenset[int]]] = []
        for obs in observations:
            if obs.detection_count < config.min_detections or obs.winning_label == 0:
                continue
            matched = [
                idx
                for idx, gt in enumerate(ground_truth)
                if iou(obs.fused_box, gt.box) >= config.match_iou
            ]
            agreeing = frozenset(
                idx for idx in matched if ground_truth[idx].label == obs.winning_label
            )
            if agreeing:
                outcome = self._TP
            elif any(ground_truth[idx].is_known for idx in matched):
                outcome = self._FP
            else:
                outcome = self._OSE
            self.entries.append((obs.entropy, outcome, agreeing))

    def counts_at(self, theta: float) -> EvalCounts:
        tp = fp = ose = 0
        detected: set[int] = set()
        for entropy_value, outcome, agreeing in self.entries:
            if entropy_value > theta:
                continue
            if outcome == self._TP:
                tp += 1
                detected.update(agreeing)
            elif outcome == self._FP:
                fp += 1
            else:
                fp += 1
                ose += 1
        return EvalCounts(tp=tp, fp=fp, fn=self.num_known - len(detected), abs_ose=ose)


def sweep(
    scenes: Sequence[Scene],
    theta_grid: Sequence[float],
    config: EvalConfig,
    workers: int = 1,
) -> list[CurvePoint]:
    """Evaluate a dataset at every threshold of an ascending grid.

    Partitioning and fusion run exactly once per scene; only the entropy
    comparison is repeated per grid point. An empty dataset produces
    all-zero counts at every threshold.
    """
    if len(theta_grid) == 0:
        raise ValueError("theta_grid must be non-empty")
    grid = [float(t) for t in theta_grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("theta_grid must be ascending")
    if any(math.isnan(t) or t < 0.0 for t in grid):
        raise ValueError("theta values must be >= 0")

    def build_cache(scene: Scene) -> _SceneCache:
        detections, ground_truth = scene
        observations = extract_observations(detections, config.cluster_iou)
        return _SceneCache(observations, ground_truth, config)

    caches = _map_scenes(build_cache, scenes, workers)
    return [
        aggregate((cache.counts_at(theta) for cache in caches), theta)
        for theta in grid
    ]


def _map_scenes(fn, scenes: Sequence[Scene], workers: int) -> list:
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if workers == 1 or len(scenes) <= 1:
        return [fn(scene) for scene in scenes]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, scenes))


@dataclass(frozen=True)
class CurveSummary:
    """Max-F1 point plus optional reference-point lookups.

    A lookup field is None either when it was not requested (its
    reference is None too) or when no curve point qualifies — the
    reference value is kept so "unattainable" stays distinguishable.
    """

    max_f1: CurvePoint
    reference_ose: float | None = None
    at_reference_ose: CurvePoint | None = None
    reference_f1: float | None = None
    at_reference_f1: CurvePoint | None = None


def max_f1_point(points: Sequence[CurvePoint]) -> CurvePoint:
    """Point with the highest F1; ties resolve to the lowest theta."""
    if not points:
        raise ValueError("curve is empty")
    ordered = sorted(points, key=lambda p: p.theta)
    best = ordered[0]
    for point in ordered[1:]:
        if point.f1 > best.f1:
            best = point
    return best


def f1_at_reference_ose(
    points: Sequence[CurvePoint], reference_ose: float
) -> CurvePoint | None:
    """Highest-F1 point among those with abs_ose <= reference; None if none qualify."""
    eligible = [p for p in points if p.abs_ose <= reference_ose]
    return max_f1_point(eligible) if eligible else None


def ose_at_reference_f1(
    points: Sequence[CurvePoint], reference_f1: float
) -> CurvePoint | None:
    """Lowest-OSE point among those with f1 >= reference; None if none qualify."""
    eligible = [p for p in points if p.f1 >= reference_f1]
    if not eligible:
        return None
    ordered = sorted(eligible, key=lambda p: p.theta)
    best = ordered[0]
    for point in ordered[1:]:
        if point.abs_ose < best.abs_ose:
            best = point
    return best


def analyze_curve(
    points: Sequence[CurvePoint],
    reference_f1: float | None = None,
    reference_ose: float | None = None,
) -> CurveSummary:
    """Summarize a sweep: max-F1 point and the requested reference lookups."""
    return CurveSummary(
        max_f1=max_f1_point(points),
        reference_ose=reference_ose,
        at_reference_ose=(
            f1_at_reference_ose(points, reference_ose) if reference_ose is not None else None
        ),
        reference_f1=reference_f1,
        at_reference_f1=(
            ose_at_reference_f1(points, reference_f1) if reference_f1 is not None else None
        ),
    )


def theta_grid(start: float, stop: float, steps: int) -> list[float]:
    """Evenly spaced ascending entropy thresholds, endpoints exact."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if stop < start:
        raise ValueError(f"stop ({stop}) must be >= start ({start})")
    if steps == 1:
        return [float(start)]
    width = (stop - start) / (steps - 1)
    return [float(start + i * width) for i in range(steps - 1)] + [float(stop)]
