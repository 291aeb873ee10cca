import numpy as np
import pytest

from obsdet import (
    BoundingBox,
    Detection,
    DisjointSet,
    connected_components_bruteforce,
    iou,
    partition_detections,
)

from conftest import exact_simplex, random_box


def det(box, rng=None, k=3):
    rng = rng or np.random.default_rng(0)
    return Detection(scores=exact_simplex(rng, k + 1), box=box)


def random_instance(rng, n, field=100.0):
    return [
        Detection(scores=exact_simplex(rng, 4), box=random_box(rng, field=field))
        for _ in range(n)
    ]


class TestDisjointSet:
    def test_initially_all_singletons(self):
        ds = DisjointSet(4)
        assert len({ds.find(i) for i in range(4)}) == 4

    def test_union_links_and_find_is_idempotent(self):
        ds = DisjointSet(5)
        ds.union(0, 1)
        ds.union(1, 2)
        root = ds.find(0)
        assert ds.find(2) == root
        assert ds.find(ds.find(2)) == root
        assert ds.find(3) != root

    def test_union_is_order_insensitive(self):
        a, b = DisjointSet(6), DisjointSet(6)
        pairs = [(0, 5), (2, 3), (5, 2)]
        for x, y in pairs:
            a.union(x, y)
        for x, y in reversed(pairs):
            b.union(y, x)
        group_a = {i for i in range(6) if a.find(i) == a.find(0)}
        group_b = {i for i in range(6) if b.find(i) == b.find(0)}
        assert group_a == group_b == {0, 2, 3, 5}


class TestPartitionDetections:
    def test_empty_input(self):
        assert partition_detections([]) == []

    def test_singleton(self):
        assert partition_detections([det(BoundingBox(0, 0, 10, 10))]) == [[0]]

    def test_identical_boxes_merge(self):
        box = BoundingBox(0, 0, 10, 10)
        assert partition_detections([det(box), det(box)]) == [[0, 1]]

    def test_disjoint_boxes_stay_apart(self):
        dets = [det(BoundingBox(0, 0, 10, 10)), det(BoundingBox(50, 50, 60, 60))]
        assert partition_detections(dets) == [[0], [1]]

    def test_transitive_chain_merges(self):
        # A-B and B-C clear the threshold, A-C does not; union-find still
        # puts all three in one group.
        a = det(BoundingBox(0, 0, 100, 100))
        b = det(BoundingBox(0, 0, 100, 103))
        c = det(BoundingBox(0, 0, 100, 106.1))
        assert iou(a.box, b.box) >= 0.95
        assert iou(b.box, c.box) >= 0.95
        assert iou(a.box, c.box) < 0.95
        assert partition_detections([a, b, c], 0.95) == [[0, 1, 2]]

    def test_group_ordering_is_deterministic(self, rng):
        dets = random_instance(rng, 40)
        groups = partition_detections(dets, 0.5)
        assert groups == partition_detections(dets, 0.5)
        firsts = [g[0] for g in groups]
        assert firsts == sorted(firsts)
        for group in groups:
            assert group == sorted(group)

    def test_invalid_threshold_rejected(self):
        with pytest.raises(ValueError):
            partition_detections([], 0.0)
        with pytest.raises(ValueError):
            partition_detections([], 1.5)


class TestBruteforceOracle:
    def test_empty_input(self):
        assert connected_components_bruteforce([]) == []

    def test_two_disjoint_boxes(self):
        dets = [det(BoundingBox(0, 0, 10, 10)), det(BoundingBox(50, 50, 60, 60))]
        assert connected_components_bruteforce(dets) == [[0], [1]]

    def test_equivalence_on_random_instances(self, rng):
        for trial in range(60):
            n = int(rng.integers(0, 60))
            tau = (0.5, 0.8, 0.95)[trial % 3]
            dets = random_instance(rng, n)
            assert partition_detections(dets, tau) == connected_components_bruteforce(dets, tau)


class TestPartitionProperties:
    def test_groups_partition_the_indices(self, rng):
        for _ in range(20):
            dets = random_instance(rng, int(rng.integers(1, 80)))
            groups = partition_detections(dets, 0.6)
            flat = [i for g in groups for i in g]
            assert sorted(flat) == list(range(len(dets)))
            assert len(flat) == len(set(flat))

    def test_threshold_monotonicity(self, rng):
        for _ in range(15):
            dets = random_instance(rng, 50)
            counts = [
                len(partition_detections(dets, tau)) for tau in (0.3, 0.5, 0.7, 0.9, 0.95)
            ]
            assert counts == sorted(counts)

    def test_every_pair_above_threshold_shares_a_group(self, rng):
        dets = random_instance(rng, 40)
        tau = 0.5
        groups = partition_detections(dets, tau)
        label = {}
        for gid, group in enumerate(groups):
            for i in group:
                label[i] = gid
        for i in range(len(dets)):
            for j in range(i + 1, len(dets)):
                if iou(dets[i].box, dets[j].box) >= tau:
                    assert label[i] == label[j]
