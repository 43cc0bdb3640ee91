"""Vietoris-Rips complexes in r-units: an edge (i, j) is present iff d(i, j) <= 2r.

Every simplex is valued at (max pairwise distance) / 2, so reported scales are
half of the diameter-convention values most TDA software prints.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np

from .errors import InputValidationError
from .geometry import check_distance_matrix

logger = logging.getLogger(__name__)


# ----------------------------
# Union-find
# ----------------------------
class UnionFind:
    """Disjoint sets over 0..n-1; the root of a set is its smallest element."""

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if ra < rb:
            self.parent[rb] = ra
        else:
            self.parent[ra] = rb
        return True


# ----------------------------
# Types
# ----------------------------
def _ro(a: np.ndarray, dtype) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RipsComplex:
    n_vertices: int
    scale: float
    edges: np.ndarray  # (m, 2), i < j, lexicographic
    edge_values: np.ndarray
    triangles: np.ndarray  # (t, 3), i < j < k, lexicographic
    triangle_values: np.ndarray
    max_dim: int = 2

    def neighbors_mask(self) -> np.ndarray:
        adj = np.zeros((self.n_vertices, self.n_vertices), dtype=bool)
        if len(self.edges):
            adj[self.edges[:, 0], self.edges[:, 1]] = True
            adj[self.edges[:, 1], self.edges[:, 0]] = True
        return adj


@dataclass(frozen=True, eq=False)
class ComponentLabeling:
    vertices: np.ndarray  # sorted vertex ids of the subset
    labels: np.ndarray  # component id per entry of ``vertices``
    count: int

    def groups(self) -> List[np.ndarray]:
        return [self.vertices[self.labels == c] for c in range(self.count)]


# ----------------------------
# Construction
# ----------------------------
def build_rips(distances, r: float, max_dim: int = 2) -> RipsComplex:
    d = check_distance_matrix(distances)
    if not r >= 0:
        raise InputValidationError(f"scale must be >= 0, got {r}")
    if max_dim not in (0, 1, 2):
        raise InputValidationError(f"max_dim must be 0, 1 or 2, got {max_dim}")
    n = d.shape[0]
    adj = d <= 2.0 * r
    np.fill_diagonal(adj, False)

    if max_dim >= 1:
        iu, ju = np.nonzero(np.triu(adj, 1))
        edges = np.stack([iu, ju], axis=1) if len(iu) else np.zeros((0, 2), dtype=np.int64)
        edge_values = d[iu, ju] / 2.0
    else:
        edges, edge_values = np.zeros((0, 2), dtype=np.int64), np.zeros(0)

    tris: List[np.ndarray] = []
    if max_dim >= 2:
        for i in range(n):
            nbrs = np.flatnonzero(adj[i, i + 1 :]) + i + 1
            if len(nbrs) < 2:
                continue
            a, b = np.nonzero(np.triu(adj[np.ix_(nbrs, nbrs)], 1))
            if len(a):
                tris.append(np.stack([np.full(len(a), i), nbrs[a], nbrs[b]], axis=1))
    triangles = np.concatenate(tris) if tris else np.zeros((0, 3), dtype=np.int64)
    if len(triangles):
        t = triangles
        triangle_values = np.maximum.reduce([d[t[:, 0], t[:, 1]], d[t[:, 0], t[:, 2]], d[t[:, 1], t[:, 2]]]) / 2.0
    else:
        triangle_values = np.zeros(0)

    logger.debug("rips r=%g: %d vertices, %d edges, %d triangles", r, n, len(edges), len(triangles))
    return RipsComplex(
        n_vertices=n,
        scale=float(r),
        edges=_ro(edges, np.int64),
        edge_values=_ro(edge_values, float),
        triangles=_ro(triangles, np.int64),
        triangle_values=_ro(triangle_values, float),
        max_dim=max_dim,
    )


def connectivity_threshold(distances) -> float:
    """Smallest r at which the 1-skeleton is connected: bottleneck MST edge / 2.

    Dense Prim, so duplicate points (zero distances) still count as edges.
    """
    d = check_distance_matrix(distances)
    n = d.shape[0]
    if n == 1:
        return 0.0
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = d[0].copy()
    bottleneck = 0.0
    for _ in range(n - 1):
        cand = np.where(in_tree, np.inf, best)
        j = int(np.argmin(cand))
        if not np.isfinite(cand[j]):
            return float("inf")
        bottleneck = max(bottleneck, float(cand[j]))
        in_tree[j] = True
        best = np.minimum(best, d[j])
    return bottleneck / 2.0


# ----------------------------
# Connectivity queries
# ----------------------------
def _subset_array(n: int, subset: Iterable[int]) -> np.ndarray:
    arr = np.unique(np.asarray(list(subset) if not isinstance(subset, np.ndarray) else subset, dtype=np.int64))
    if len(arr) and (arr[0] < 0 or arr[-1] >= n):
        raise InputValidationError("vertex subset out of range")
    return arr


def connected_components(complex_: RipsComplex, vertex_subset: Sequence[int]) -> ComponentLabeling:
    """Components of the induced 1-skeleton on ``vertex_subset``.

    Labels are numbered by smallest member vertex.
    """
    verts = _subset_array(complex_.n_vertices, vertex_subset)
    if len(verts) == 0:
        raise InputValidationError("vertex subset is empty")
    local = np.full(complex_.n_vertices, -1, dtype=np.int64)
    local[verts] = np.arange(len(verts))
    e = complex_.edges
    uf = UnionFind(len(verts))
    if len(e):
        la, lb = local[e[:, 0]], local[e[:, 1]]
        keep = (la >= 0) & (lb >= 0)
        for a, b in zip(la[keep].tolist(), lb[keep].tolist()):
            uf.union(a, b)
    roots = np.array([uf.find(i) for i in range(len(verts))])
    # roots are the smallest local index in each set, so first-appearance order is root order
    _, labels = np.unique(roots, return_inverse=True)
    return ComponentLabeling(vertices=verts, labels=labels.astype(np.int64), count=int(labels.max()) + 1)


def cross_edges(complex_: RipsComplex, subset_a: Sequence[int], subset_b: Sequence[int]) -> bool:
    a = _subset_array(complex_.n_vertices, subset_a)
    b = _subset_array(complex_.n_vertices, subset_b)
    if len(np.intersect1d(a, b)):
        raise InputValidationError("vertex subsets overlap")
    if len(a) == 0 or len(b) == 0 or len(complex_.edges) == 0:
        return False
    in_a = np.zeros(complex_.n_vertices, dtype=bool)
    in_b = np.zeros(complex_.n_vertices, dtype=bool)
    in_a[a] = True
    in_b[b] = True
    e = complex_.edges
    return bool(np.any((in_a[e[:, 0]] & in_b[e[:, 1]]) | (in_b[e[:, 0]] & in_a[e[:, 1]])))
