"""Core detection records shared across the pipeline.

A Detection is one raw detector output from one forward pass: a class
score vector on the probability simplex plus a bounding box. Index 0 of
the score vector is reserved for the unknown/background class; indices
1..k are the known classes. A GroundTruthObject is a labeled box, with
label 0 marking an open-set (unknown-class) object.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BoundingBox

SCORE_SUM_TOLERANCE = 1e-6


def check_simplex(scores: np.ndarray, tolerance: float = SCORE_SUM_TOLERANCE) -> None:
    """Raise ValueError unless every entry is in [0, 1] and the sum is 1 ± tolerance."""
    if scores.ndim != 1 or scores.size < 2:
        raise ValueError(f"score vector must be 1-d with at least 2 entries, got shape {scores.shape}")
    if not np.all(np.isfinite(scores)):
        raise ValueError("score vector contains non-finite entries")
    if np.any(scores < 0.0) or np.any(scores > 1.0):
        raise ValueError(f"scores must lie in [0, 1], got min {scores.min()}, max {scores.max()}")
    total = float(scores.sum())
    if abs(total - 1.0) > tolerance:
        raise ValueError(f"scores must sum to 1 within {tolerance}, got {total!r}")


@dataclass(frozen=True, eq=False)
class Detection:
    """One raw network output: simplex score vector + box + originating pass."""

    scores: np.ndarray
    box: BoundingBox
    pass_index: int = 0

    def __post_init__(self) -> None:
        arr = np.asarray(self.scores, dtype=np.float64)
        check_simplex(arr)
        if self.pass_index < 0:
            raise ValueError(f"pass_index must be >= 0, got {self.pass_index}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "scores", arr)

    @property
    def num_classes(self) -> int:
        """Number of known classes k (score vector has k+1 entries)."""
        return int(self.scores.size) - 1


@dataclass(frozen=True)
class GroundTruthObject:
    """Labeled ground-truth box; label 0 designates an unknown-class object."""

    box: BoundingBox
    label: int

    def __post_init__(self) -> None:
        if self.label < 0:
            raise ValueError(f"label must be >= 0, got {self.label}")

    @property
    def is_known(self) -> bool:
        return self.label != 0


def check_detections(detections, class_count: int | None = None) -> int:
    """Validate a homogeneous detection list; returns the shared vector length.

    Used as the input-validation helper by the estimator wrappers and
    loaders: every element must be a Detection and all score vectors must
    agree in length (and with ``class_count + 1`` when given).
    """
    length = None if class_count is None else class_count + 1
    for i, det in enumerate(detections):
        if not isinstance(det, Detection):
            raise TypeError(f"element {i} is not a Detection: {type(det).__name__}")
        if length is None:
            length = det.scores.size
        elif det.scores.size != length:
            raise ValueError(
                f"detection {i} has a score vector of length {det.scores.size}, expected {length}"
            )
    return 0 if length is None else int(length)
