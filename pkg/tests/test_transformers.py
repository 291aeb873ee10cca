import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline

from obsdet import (
    EvalConfig,
    ObservationFilter,
    ObservationFuser,
    extract_observations,
    filter_observations,
)

from conftest import random_detection


@pytest.fixture
def image_lists(rng):
    return [
        [random_detection(rng, k=4) for _ in range(int(rng.integers(0, 30)))] for _ in range(4)
    ]


class TestObservationFuser:
    def test_params_round_trip(self):
        fuser = ObservationFuser(cluster_iou=0.8)
        assert fuser.get_params() == {"cluster_iou": 0.8}
        fuser.set_params(cluster_iou=0.9)
        assert fuser.cluster_iou == 0.9
        assert clone(fuser).cluster_iou == 0.9

    def test_fit_returns_self(self, image_lists):
        fuser = ObservationFuser()
        assert fuser.fit(image_lists) is fuser

    def test_transform_matches_library_function(self, image_lists):
        out = ObservationFuser(cluster_iou=0.6).transform(image_lists)
        assert len(out) == len(image_lists)
        for observations, dets in zip(out, image_lists):
            expected = extract_observations(dets, 0.6)
            assert len(observations) == len(expected)
            assert [o.detection_count for o in observations] == [
                o.detection_count for o in expected
            ]

    def test_invalid_threshold_rejected_at_fit(self):
        with pytest.raises(ValueError):
            ObservationFuser(cluster_iou=0.0).fit([])

    def test_non_iterable_input_rejected(self):
        with pytest.raises(TypeError):
            ObservationFuser().transform(42)
        with pytest.raises(TypeError):
            ObservationFuser().transform(["not detections"])


class TestObservationFilter:
    def test_transform_matches_library_function(self, image_lists):
        observations = ObservationFuser().transform(image_lists)
        filtered = ObservationFilter(entropy_threshold=1.0, min_detections=2).transform(
            observations
        )
        config = EvalConfig(theta=1.0, min_detections=2)
        for got, per_image in zip(filtered, observations):
            assert got == filter_observations(per_image, config)

    def test_default_keeps_everything_but_unknown_winners(self, image_lists):
        observations = ObservationFuser().transform(image_lists)
        kept = ObservationFilter().transform(observations)
        for got, per_image in zip(kept, observations):
            assert got == [o for o in per_image if o.winning_label != 0]

    def test_invalid_params_rejected_at_fit(self):
        with pytest.raises(ValueError):
            ObservationFilter(min_detections=0).fit([])
        with pytest.raises(ValueError):
            ObservationFilter(entropy_threshold=-1.0).fit([])


class TestPipelineComposition:
    def test_fuser_and_filter_compose(self, image_lists):
        pipe = make_pipeline(
            ObservationFuser(cluster_iou=0.7),
            ObservationFilter(entropy_threshold=1.2, min_detections=1),
        )
        out = pipe.fit_transform(image_lists)
        config = EvalConfig(theta=1.2, cluster_iou=0.7)
        for got, dets in zip(out, image_lists):
            expected = filter_observations(extract_observations(dets, 0.7), config)
            assert [o.entropy for o in got] == [o.entropy for o in expected]

    def test_pipeline_get_params_reaches_steps(self, image_lists):
        pipe = make_pipeline(ObservationFuser(), ObservationFilter())
        pipe.set_params(observationfuser__cluster_iou=0.85)
        assert pipe.named_steps["observationfuser"].cluster_iou == 0.85
