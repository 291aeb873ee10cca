"""obsdet: fuse multi-pass object detections into uncertainty-aware
observations and evaluate them under open-set conditions."""

from .detection import Detection, GroundTruthObject, check_detections
from .evaluation import (
    CurvePoint,
    CurveSummary,
    EvalConfig,
    EvalCounts,
    aggregate,
    analyze_curve,
    evaluate_dataset,
    evaluate_scene,
    f1_at_reference_ose,
    f1_score,
    filter_observations,
    max_f1_point,
    ose_at_reference_f1,
    score_scene,
    sweep,
    theta_grid,
)
from .fusion import (
    Observation,
    box_covariance,
    entropy,
    extract_observations,
    fuse_box,
    fuse_observation,
    fuse_scores,
    passes_entropy_test,
    winning_label,
)
from .geometry import BoundingBox, area, iou, iou_matrix
from .partition import (
    DEFAULT_CLUSTER_IOU,
    DisjointSet,
    connected_components_bruteforce,
    partition_detections,
)
from .simulator import (
    PlacementError,
    SimulatedScene,
    SimulatorConfig,
    simulate_dataset,
    simulate_scene,
    truncate_passes,
)
from .transformers import ObservationFilter, ObservationFuser

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "CurvePoint",
    "CurveSummary",
    "DEFAULT_CLUSTER_IOU",
    "Detection",
    "DisjointSet",
    "EvalConfig",
    "EvalCounts",
    "GroundTruthObject",
    "Observation",
    "ObservationFilter",
    "ObservationFuser",
    "PlacementError",
    "SimulatedScene",
    "SimulatorConfig",
    "aggregate",
    "analyze_curve",
    "area",
    "box_covariance",
    "check_detections",
    "connected_components_bruteforce",
    "entropy",
    "evaluate_dataset",
    "evaluate_scene",
    "extract_observations",
    "f1_at_reference_ose",
    "f1_score",
    "filter_observations",
    "fuse_box",
    "fuse_observation",
    "fuse_scores",
    "iou",
    "iou_matrix",
    "max_f1_point",
    "ose_at_reference_f1",
    "partition_detections",
    "passes_entropy_test",
    "score_scene",
    "simulate_dataset",
    "simulate_scene",
    "sweep",
    "theta_grid",
    "truncate_passes",
    "winning_label",
]
