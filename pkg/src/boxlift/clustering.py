"""Density-based outlier suppression and robust centers for point segments.

DBSCAN here is exact: neighborhoods are found with a uniform spatial grid
of cell size eps (brute force below a small point count), never an
approximate index. Labeling is deterministic for a fixed input and the
induced partition does not depend on input order: cluster ids are keyed to
the lowest member index, and border points attach to their nearest core.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllNoiseError
from .geometry import PointCloud

# Below this size the pairwise distance matrix is cheaper than building a grid.
_BRUTE_FORCE_LIMIT = 64


@dataclass(frozen=True)
class DbscanParams:
    eps: float = 0.75
    min_pts: int = 5

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.min_pts < 1:
            raise ValueError("min_pts must be >= 1")


@dataclass
class ClusterLabeling:
    """Per-point labels: -1 for noise, 0..K-1 for clusters."""

    labels: np.ndarray
    cluster_sizes: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        sizes = np.asarray(self.cluster_sizes, dtype=int)
        for c, size in enumerate(sizes):
            if size != np.count_nonzero(labels == c):
                raise ValueError(f"cluster_sizes[{c}] inconsistent with labels")
        if labels.size and labels.max() >= sizes.shape[0]:
            raise ValueError("label outside cluster_sizes range")
        self.labels = labels
        self.cluster_sizes = sizes

    @property
    def num_clusters(self) -> int:
        return self.cluster_sizes.shape[0]


def _grid_neighbor_lists(positions: np.ndarray, eps: float) -> list:
    """Exact eps-ball neighbor lists via a uniform grid of cell size eps.

    Queries are batched per occupied cell: all of a cell's members share the
    same 27-cell candidate set, so one distance block serves them all.
    """
    n = positions.shape[0]
    cells = np.floor(positions / eps).astype(np.int64)
    order = np.lexsort((cells[:, 2], cells[:, 1], cells[:, 0]))
    boundaries = np.nonzero(np.any(np.diff(cells[order], axis=0) != 0, axis=1))[0] + 1
    buckets = {tuple(cells[idx[0]].tolist()): np.sort(idx)
               for idx in np.split(order, boundaries)}

    eps2 = eps * eps
    out: list = [None] * n
    for (cx, cy, cz), members in buckets.items():
        parts = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    bucket = buckets.get((cx + dx, cy + dy, cz + dz))
                    if bucket is not None:
                        parts.append(bucket)
        cand = np.sort(np.concatenate(parts))
        cand_pos = positions[cand]
        # Chunk members so the distance block stays bounded for huge cells.
        chunk = max(1, int(2e6 // max(cand.shape[0], 1)))
        for start in range(0, members.shape[0], chunk):
            group = members[start:start + chunk]
            delta = positions[group][:, None, :] - cand_pos[None, :, :]
            within = np.einsum("ijk,ijk->ij", delta, delta) <= eps2
            for row, i in enumerate(group):
                out[i] = cand[within[row]]
    return out


def _neighbor_lists(positions: np.ndarray, eps: float) -> list:
    n = positions.shape[0]
    if n < _BRUTE_FORCE_LIMIT:
        delta = positions[:, None, :] - positions[None, :, :]
        within = np.einsum("ijk,ijk->ij", delta, delta) <= eps * eps
        return [np.nonzero(row)[0] for row in within]
    return _grid_neighbor_lists(positions, eps)


def dbscan(points: PointCloud, params: DbscanParams) -> ClusterLabeling:
    """Label points as clusters (0..K-1) or noise (-1).

    A core point has at least min_pts neighbors within eps, itself included.
    Clusters are the connected components of core points; non-core points
    within eps of a core join the component of their nearest core (exact
    distance tie: lowest core index). Component ids are assigned in order of
    each component's lowest member index.
    """
    n = len(points)
    if n == 0:
        return ClusterLabeling(np.zeros(0, dtype=int), np.zeros(0, dtype=int))
    pos = points.positions
    neighborhoods = _neighbor_lists(pos, params.eps)
    is_core = np.array([nb.shape[0] >= params.min_pts for nb in neighborhoods])

    # Flood-fill core components, seeded in ascending index order so cluster
    # ids are keyed to each component's lowest core index.
    labels = np.full(n, -1, dtype=int)
    k = 0
    for seed in np.nonzero(is_core)[0]:
        if labels[seed] != -1:
            continue
        labels[seed] = k
        stack = [int(seed)]
        while stack:
            j = stack.pop()
            nb = neighborhoods[j]
            fresh = nb[is_core[nb] & (labels[nb] == -1)]
            labels[fresh] = k
            stack.extend(fresh.tolist())
        k += 1

    for i in np.nonzero(~is_core)[0]:
        cores = neighborhoods[i][is_core[neighborhoods[i]]]
        if cores.shape[0] == 0:
            continue
        dist = np.linalg.norm(pos[cores] - pos[i], axis=1)
        labels[i] = labels[cores[np.argmin(dist)]]  # argmin ties -> lowest core index

    sizes = np.bincount(labels[labels >= 0], minlength=k) if k else np.zeros(0, dtype=int)
    return ClusterLabeling(labels, sizes)


def densest_cluster(points: PointCloud, labeling: ClusterLabeling) -> PointCloud:
    """Sub-cloud of the largest cluster; ties go to the lowest cluster id."""
    if labeling.labels.shape[0] != len(points):
        raise ValueError("labeling does not match point count")
    if labeling.num_clusters == 0:
        raise AllNoiseError("every point was labeled noise")
    winner = int(np.argmax(labeling.cluster_sizes))
    return points.take(np.nonzero(labeling.labels == winner)[0])


def medoid(points: PointCloud) -> np.ndarray:
    """The member point minimizing total distance to all others (tie: lowest index)."""
    n = len(points)
    if n == 0:
        raise ValueError("medoid of empty point set")
    pos = points.positions
    totals = np.zeros(n)
    # Chunked so the pairwise block stays small for large segments.
    chunk = max(1, int(4e6 // max(n, 1)))
    for start in range(0, n, chunk):
        block = pos[start:start + chunk]
        totals[start:start + chunk] = np.linalg.norm(block[:, None, :] - pos[None, :, :], axis=2).sum(axis=1)
    return pos[int(np.argmin(totals))].copy()
