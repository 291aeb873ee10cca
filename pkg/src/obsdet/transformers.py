"""Scikit-learn style wrappers around the fusion pipeline.

Both steps are stateless transforms over per-image lists, so ``fit`` only
validates parameters. They expose ``get_params``/``set_params`` and
compose in a :class:`sklearn.pipeline.Pipeline`:

    pipe = make_pipeline(ObservationFuser(cluster_iou=0.95),
                         ObservationFilter(entropy_threshold=0.64))
    accepted = pipe.fit_transform(per_image_detections)
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin

from .detection import check_detections
from .evaluation import EvalConfig, filter_observations
from .fusion import Observation, extract_observations
from .partition import DEFAULT_CLUSTER_IOU


def _check_image_lists(X):
    if isinstance(X, (str, bytes)) or not hasattr(X, "__iter__"):
        raise TypeError("X must be an iterable of per-image detection lists")
    images = list(X)
    for dets in images:
        if isinstance(dets, (str, bytes)) or not hasattr(dets, "__iter__"):
            raise TypeError("each element of X must be a list of detections for one image")
    return [list(dets) for dets in images]


class ObservationFuser(BaseEstimator, TransformerMixin):
    """Transform per-image detection lists into fused observation lists.

    Parameters
    ----------
    cluster_iou : float, default=0.95
        Minimum pairwise IoU for two detections to be merged (transitively)
        into the same observation.
    """

    def __init__(self, cluster_iou: float = DEFAULT_CLUSTER_IOU):
        self.cluster_iou = cluster_iou

    def fit(self, X, y=None):
        if not 0.0 < self.cluster_iou <= 1.0:
            raise ValueError(f"cluster_iou must be in (0, 1], got {self.cluster_iou}")
        return self

    def transform(self, X) -> list[list[Observation]]:
        self.fit(X)
        images = _check_image_lists(X)
        for dets in images:
            check_detections(dets)
        return [extract_observations(dets, self.cluster_iou) for dets in images]


class ObservationFilter(BaseEstimator, TransformerMixin):
    """Drop observations that fail the entropy or minimum-detections test.

    Parameters
    ----------
    entropy_threshold : float, default=inf
        Observations with fused-label entropy strictly above this are
        rejected; the default keeps everything.
    min_detections : int, default=1
        Observations with fewer member detections are rejected, before
        the entropy test. Winning-label-0 observations are always dropped
        (they already voted "unknown").
    """

    def __init__(self, entropy_threshold: float = float("inf"), min_detections: int = 1):
        self.entropy_threshold = entropy_threshold
        self.min_detections = min_detections

    def _config(self) -> EvalConfig:
        return EvalConfig(theta=self.entropy_threshold, min_detections=self.min_detections)

    def fit(self, X, y=None):
        self._config()
        return self

    def transform(self, X) -> list[list[Observation]]:
        config = self._config()
        images = _check_image_lists(X)
        return [filter_observations(observations, config) for observations in images]
