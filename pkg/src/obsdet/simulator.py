"""Seeded synthetic stochastic detector over scenes with unknown objects.

Each scene places non-overlapping ground-truth boxes uniformly at
random, then emits detections over a number of independent passes. Per
pass and per object, a detection fires with probability ``p_det``; its
box adds Gaussian corner jitter to the true box and its score vector is
a Dirichlet draw concentrated on a target class. For a known object the
target is the true label on every pass; for an unknown object (label 0)
the target is re-drawn each pass from the object's fixed confusion set
of known classes, so individual passes look confident while their
fused average does not — the behaviour the entropy test is meant to
catch. Poisson clutter with uniform Dirichlet scores models background
false positives.

Determinism: scene ``i`` of a dataset draws from the RNG substream
``SeedSequence([seed, i])``, so scenes can be generated in any order or
in parallel with bit-identical results. Within a scene the draw order
is fixed: ground-truth placement, known labels, confusion sets, then
the batched per-pass detection mask, corner noise, unknown targets,
score gammas, and finally clutter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detection import Detection, GroundTruthObject
from .geometry import BoundingBox, iou

#: Ground-truth and clutter box side lengths are drawn uniformly from this range.
OBJECT_SIDE_RANGE = (96.0, 224.0)
#: Ground-truth boxes are re-drawn until pairwise IoU stays below this.
PLACEMENT_MAX_IOU = 0.3
#: Per-object placement attempts before giving up.
PLACEMENT_MAX_ATTEMPTS = 500


class PlacementError(RuntimeError):
    """Requested ground-truth layout could not be placed within the attempt budget."""


@dataclass(frozen=True)
class SimulatorConfig:
    """Generative-model parameters for the synthetic stochastic detector."""

    image_size: tuple[float, float] = (1280.0, 960.0)
    num_known_objects: int = 4
    num_unknown_objects: int = 2
    class_count: int = 20
    passes: int = 42
    p_det: float = 0.8
    box_sigma: float = 1.5
    alpha_hi: float = 20.0
    alpha_lo: float = 0.5
    confusion_size: int = 3
    clutter_rate: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        width, height = self.image_size
        if width < OBJECT_SIDE_RANGE[1] or height < OBJECT_SIDE_RANGE[1]:
            raise ValueError(
                f"image_size must be at least {OBJECT_SIDE_RANGE[1]} on each side, got {self.image_size}"
            )
        if self.num_known_objects < 0 or self.num_unknown_objects < 0:
            raise ValueError("object counts must be >= 0")
        if self.class_count < 1:
            raise ValueError(f"class_count must be >= 1, got {self.class_count}")
        if self.passes < 1:
            raise ValueError(f"passes must be >= 1, got {self.passes}")
        if not 0.0 <= self.p_det <= 1.0:
            raise ValueError(f"p_det must be in [0, 1], got {self.p_det}")
        if self.box_sigma < 0.0:
            raise ValueError(f"box_sigma must be >= 0, got {self.box_sigma}")
        if not self.alpha_hi > self.alpha_lo > 0.0:
            raise ValueError(
                f"need alpha_hi > alpha_lo > 0, got {self.alpha_hi} and {self.alpha_lo}"
            )
        if not 2 <= self.confusion_size <= self.class_count:
            raise ValueError(
                f"confusion_size must be in [2, class_count], got {self.confusion_size}"
            )
        if self.clutter_rate < 0.0:
            raise ValueError(f"clutter_rate must be >= 0, got {self.clutter_rate}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit non-negative integer, got {self.seed}")


@dataclass(frozen=True)
class SimulatedScene:
    """Ground truth plus one detection list per forward pass."""

    ground_truth: tuple[GroundTruthObject, ...]
    passes: tuple[tuple[Detection, ...], ...]

    @property
    def detections(self) -> list[Detection]:
        """All passes flattened, in pass order."""
        return [det for dets in self.passes for det in dets]

    def as_eval_scene(self) -> tuple[list[Detection], tuple[GroundTruthObject, ...]]:
        return self.detections, self.ground_truth


def truncate_passes(scene: SimulatedScene, passes: int) -> SimulatedScene:
    """Keep only the first ``passes`` forward passes of a simulated scene."""
    if not 1 <= passes <= len(scene.passes):
        raise ValueError(f"passes must be in [1, {len(scene.passes)}], got {passes}")
    return SimulatedScene(ground_truth=scene.ground_truth, passes=scene.passes[:passes])


def _place_ground_truth(config: SimulatorConfig, rng: np.random.Generator) -> list[GroundTruthObject]:
    width, height = config.image_size
    lo, hi = OBJECT_SIDE_RANGE
    boxes: list[BoundingBox] = []
    total = config.num_known_objects + config.num_unknown_objects
    for _ in range(total):
        for _ in range(PLACEMENT_MAX_ATTEMPTS):
            w = rng.uniform(lo, hi)
            h = rng.uniform(lo, hi)
            x1 = rng.uniform(0.0, width - w)
            y1 = rng.uniform(0.0, height - h)
            candidate = BoundingBox(x1, y1, x1 + w, y1 + h)
            if all(iou(candidate, other) < PLACEMENT_MAX_IOU for other in boxes):
                boxes.append(candidate)
                break
        else:
            raise PlacementError(
                f"could not place {total} objects with pairwise IoU < {PLACEMENT_MAX_IOU} "
                f"in a {width}x{height} image after {PLACEMENT_MAX_ATTEMPTS} attempts each"
            )

    labels = [
        int(label) for label in rng.integers(1, config.class_count + 1, size=config.num_known_objects)
    ]
    labels += [0] * config.num_unknown_objects
    return [GroundTruthObject(box=box, label=label) for box, label in zip(boxes, labels)]


def _jittered_box(corners: np.ndarray, noise: np.ndarray, width: float, height: float) -> BoundingBox:
    x1, y1, x2, y2 = corners + noise
    x_lo, x_hi = sorted((x1, x2))
    y_lo, y_hi = sorted((y1, y2))
    return BoundingBox(
        min(max(x_lo, 0.0), width),
        min(max(y_lo, 0.0), height),
        min(max(x_hi, 0.0), width),
        min(max(y_hi, 0.0), height),
    )


def simulate_scene(config: SimulatorConfig, stream_id: int) -> SimulatedScene:
    """Generate one scene from the (seed, stream_id) RNG substream."""
    if stream_id < 0:
        raise ValueError(f"stream_id must be >= 0, got {stream_id}")
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, stream_id]))
    width, height = config.image_size
    k = config.class_count

    ground_truth = _place_ground_truth(config, rng)
    num_objects = len(ground_truth)
    num_unknown = config.num_unknown_objects

    confusion_sets = [
        rng.choice(np.arange(1, k + 1), size=config.confusion_size, replace=False)
        for _ in range(num_unknown)
    ]

    # Batched per-pass draws. The detection mask is applied after drawing so
    # the amount of randomness consumed never depends on earlier outcomes.
    detect_mask = rng.random((config.passes, num_objects)) < config.p_det
    corner_noise = rng.normal(0.0, config.box_sigma, size=(config.passes, num_objects, 4))
    unknown_choice = (
        rng.integers(0, config.confusion_size, size=(config.passes, num_unknown))
        if num_unknown > 0
        else np.zeros((config.passes, 0), dtype=np.int64)
    )

    targets = np.zeros((config.passes, num_objects), dtype=np.int64)
    for i, obj in enumerate(ground_truth):
        if obj.is_known:
            targets[:, i] = obj.label
    for u in range(num_unknown):
        targets[:, config.num_known_objects + u] = confusion_sets[u][unknown_choice[:, u]]

    alphas = np.full((config.passes, num_objects, k + 1), config.alpha_lo)
    rows, cols = np.indices((config.passes, num_objects))
    alphas[rows, cols, targets] = config.alpha_hi
    gammas = rng.standard_gamma(alphas)
    object_scores = gammas / gammas.sum(axis=2, keepdims=True)

    clutter_counts = rng.poisson(config.clutter_rate, size=config.passes)
    total_clutter = int(clutter_counts.sum())
    lo, hi = OBJECT_SIDE_RANGE
    clutter_sizes = rng.uniform(lo, hi, size=(total_clutter, 2))
    clutter_x1 = rng.uniform(0.0, width - clutter_sizes[:, 0])
    clutter_y1 = rng.uniform(0.0, height - clutter_sizes[:, 1])
    clutter_gammas = rng.standard_gamma(1.0, size=(total_clutter, k + 1))
    clutter_scores = clutter_gammas / clutter_gammas.sum(axis=1, keepdims=True)

    gt_corners = [obj.box.as_array() for obj in ground_truth]
    passes: list[tuple[Detection, ...]] = []
    clutter_cursor = 0
    for p in range(config.passes):
        dets: list[Detection] = []
        for i in range(num_objects):
            if not detect_mask[p, i]:
                continue
            box = _jittered_box(gt_corners[i], corner_noise[p, i], width, height)
            dets.append(Detection(scores=object_scores[p, i], box=box, pass_index=p))
        for _ in range(int(clutter_counts[p])):
            w, h = clutter_sizes[clutter_cursor]
            x1 = clutter_x1[clutter_cursor]
            y1 = clutter_y1[clutter_cursor]
            dets.append(
                Detection(
                    scores=clutter_scores[clutter_cursor],
                    box=BoundingBox(x1, y1, x1 + w, y1 + h),
                    pass_index=p,
                )
            )
            clutter_cursor += 1
        passes.append(tuple(dets))

    return SimulatedScene(ground_truth=tuple(ground_truth), passes=tuple(passes))


def simulate_dataset(config: SimulatorConfig, num_scenes: int) -> list[SimulatedScene]:
    """Generate ``num_scenes`` scenes; scene i uses substream i of the seed."""
    if num_scenes < 1:
        raise ValueError(f"num_scenes must be >= 1, got {num_scenes}")
    return [simulate_scene(config, i) for i in range(num_scenes)]
