"""Group per-pass detections of one image into observation groups.

Two detections belong to the same group when they are connected by a
chain of pairs whose box IoU meets the clustering threshold (0.95 by
default). Merging is transitive: the groups are exactly the connected
components of the thresholded IoU graph, built with a disjoint-set
structure. A brute-force BFS implementation of the same contract is kept
as an independent test oracle.

Output ordering is deterministic: groups are sorted by their smallest
member index and members are sorted ascending, so repeated runs produce
identical files.
"""

from __future__ import annotations

from collections import deque
from typing import Sequence

import numpy as np

from .detection import Detection
from .geometry import iou, iou_matrix

DEFAULT_CLUSTER_IOU = 0.95


class DisjointSet:
    """Union-find over n elements with path compression and union by rank."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        # compress the path walked
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        if self.rank[rx] < self.rank[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        if self.rank[rx] == self.rank[ry]:
            self.rank[rx] += 1


def _validate_threshold(cluster_iou: float) -> None:
    if not 0.0 < cluster_iou <= 1.0:
        raise ValueError(f"cluster_iou must be in (0, 1], got {cluster_iou}")


def _groups_from_labels(roots: Sequence[int]) -> list[list[int]]:
    """Collect indices by root, groups ordered by smallest member, members ascending."""
    members: dict[int, list[int]] = {}
    for idx, root in enumerate(roots):
        members.setdefault(root, []).append(idx)
    # indices were visited ascending, so each member list is already sorted
    # and the first member is the group minimum
    return sorted(members.values(), key=lambda g: g[0])


def partition_detections(
    detections: Sequence[Detection],
    cluster_iou: float = DEFAULT_CLUSTER_IOU,
) -> list[list[int]]:
    """Partition detections into groups of transitively IoU-linked boxes.

    Returns groups of indices into ``detections``: the connected
    components of the graph with an edge between every pair whose IoU is
    >= ``cluster_iou``. Empty input yields an empty list.
    """
    _validate_threshold(cluster_iou)
    n = len(detections)
    if n == 0:
        return []

    boxes = np.stack([det.box.as_array() for det in detections])
    matrix = iou_matrix(boxes, boxes)
    ds = DisjointSet(n)
    rows, cols = np.nonzero(matrix >= cluster_iou)
    for i, j in zip(rows.tolist(), cols.tolist()):
        if i < j:
            ds.union(i, j)
    return _groups_from_labels([ds.find(i) for i in range(n)])


def connected_components_bruteforce(
    detections: Sequence[Detection],
    cluster_iou: float = DEFAULT_CLUSTER_IOU,
) -> list[list[int]]:
    """O(n^2) BFS oracle with the same output contract as partition_detections.

    Deliberately avoids the vectorized IoU path so the two implementations
    can check each other.
    """
    _validate_threshold(cluster_iou)
    n = len(detections)
    if n == 0:
        return []

    adjacency: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if iou(detections[i].box, detections[j].box) >= cluster_iou:
                adjacency[i].append(j)
                adjacency[j].append(i)

    component = [-1] * n
    for start in range(n):
        if component[start] != -1:
            continue
        component[start] = start
        queue = deque([start])
        while queue:
            node = queue.popleft()
            for neighbor in adjacency[node]:
                if component[neighbor] == -1:
                    component[neighbor] = start
                    queue.append(neighbor)
    return _groups_from_labels(component)
