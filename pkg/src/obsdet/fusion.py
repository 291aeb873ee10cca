"""Fuse an observation's member detections into a single estimate.

The fused label distribution is the arithmetic mean of the members'
score vectors (renormalized to absorb input tolerance drift), the fused
box is the coordinate-wise mean of the member boxes, and the spatial
spread is the unbiased sample covariance of the corner vectors. Label
uncertainty is the Shannon entropy of the fused distribution, in nats.

A single-member observation degenerates exactly to its detection
(same scores, same box, zero covariance), which is how a plain
single-pass detector is expressed in this pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .detection import Detection, check_detections
from .geometry import BoundingBox
from .partition import DEFAULT_CLUSTER_IOU, partition_detections


def fuse_scores(members: Sequence[Detection]) -> np.ndarray:
    """Elementwise mean of the members' score vectors, renormalized to sum 1.

    Renormalization only corrects accumulated tolerance drift (inputs may
    sum to 1 +/- 1e-6); downstream entropy sees an exact simplex.
    """
    if not members:
        raise ValueError("cannot fuse an empty member list")
    check_detections(members)
    stacked = np.stack([det.scores for det in members])
    fused = stacked.mean(axis=0)
    fused /= fused.sum()
    return fused


def entropy(scores: np.ndarray) -> float:
    """Shannon entropy -sum(q * ln q) in nats, with 0 * ln 0 = 0."""
    q = np.asarray(scores, dtype=np.float64)
    positive = q[q > 0.0]
    return max(float(-(positive * np.log(positive)).sum()), 0.0)


def fuse_box(members: Sequence[Detection]) -> BoundingBox:
    """Coordinate-wise mean of the member boxes; the mean preserves validity."""
    if not members:
        raise ValueError("cannot fuse an empty member list")
    corners = np.stack([det.box.as_array() for det in members]).mean(axis=0)
    return BoundingBox(*corners.tolist())


def box_covariance(members: Sequence[Detection]) -> np.ndarray:
    """Unbiased 4x4 sample covariance of the member corner vectors.

    Single-member observations have no spread to estimate; they get the
    zero matrix (the observation's ``low_support`` flag marks the case).
    """
    if not members:
        raise ValueError("cannot fuse an empty member list")
    if len(members) == 1:
        return np.zeros((4, 4), dtype=np.float64)
    corners = np.stack([det.box.as_array() for det in members])
    cov = np.cov(corners, rowvar=False, ddof=1)
    return (cov + cov.T) / 2.0


def winning_label(scores: np.ndarray) -> int:
    """Argmax of a score vector, ties broken toward the lowest index."""
    return int(np.argmax(np.asarray(scores)))


def passes_entropy_test(entropy_value: float, threshold: float) -> bool:
    """Accept unless the entropy strictly exceeds the threshold."""
    return entropy_value <= threshold


@dataclass(frozen=True, eq=False)
class Observation:
    """A fused group of detections: the unit that is thresholded and scored."""

    members: tuple[Detection, ...]
    fused_scores: np.ndarray
    entropy: float
    fused_box: BoundingBox
    box_covariance: np.ndarray
    winning_label: int
    detection_count: int

    @property
    def low_support(self) -> bool:
        """True when the covariance is degenerate (single detection)."""
        return self.detection_count < 2

    @property
    def max_entropy(self) -> float:
        """Upper bound ln(k+1) for this observation's label entropy."""
        return math.log(self.fused_scores.size)


def fuse_observation(members: Sequence[Detection]) -> Observation:
    """Build the fused Observation for one group of member detections."""
    fused = fuse_scores(members)
    fused.setflags(write=False)
    cov = box_covariance(members)
    cov.setflags(write=False)
    return Observation(
        members=tuple(members),
        fused_scores=fused,
        entropy=entropy(fused),
        fused_box=fuse_box(members),
        box_covariance=cov,
        winning_label=winning_label(fused),
        detection_count=len(members),
    )


def extract_observations(
    detections: Sequence[Detection],
    cluster_iou: float = DEFAULT_CLUSTER_IOU,
) -> list[Observation]:
    """Partition one image's detections and fuse every group.

    Observations come out in the partition's deterministic group order.
    """
    groups = partition_detections(detections, cluster_iou)
    return [fuse_observation([detections[i] for i in group]) for group in groups]
