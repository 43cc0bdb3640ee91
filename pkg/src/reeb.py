"""Reeb graph estimation (Mapper over a binned filter) and node decorations."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Any, Dict, List, Literal, Optional, Tuple

import networkx as nx
import numpy as np

from .complex import RipsComplex, build_rips, connected_components, connectivity_threshold
from .diagram_metrics import default_cap
from .errors import DegenerateInputError, InputValidationError
from .geometry import FilterValues, PointCloud
from .persistence import (
    PersistenceDiagram,
    compute_persistence,
    distance_to_set_filtration,
    rips_filtration,
    total_persistence,
)
from .services.workers import parallel_map

logger = logging.getLogger(__name__)

DecorationMode = Literal["local", "barcode-transform"]
DECORATION_MODES = ("local", "barcode-transform")


# ----------------------------
# Types
# ----------------------------
@dataclass(frozen=True, eq=False)
class ReebNode:
    id: int
    bin: int
    members: np.ndarray
    mean_filter: float
    centroid: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class ReebSkeleton:
    nodes: Tuple[ReebNode, ...]
    edges: Tuple[Tuple[int, int], ...]
    bin_edges: np.ndarray
    scale: float
    n_points: int

    @property
    def n_bins(self) -> int:
        return len(self.bin_edges) - 1

    def node_of_vertex(self) -> np.ndarray:
        out = np.full(self.n_points, -1, dtype=np.int64)
        for node in self.nodes:
            out[node.members] = node.id
        return out

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        for node in self.nodes:
            g.add_node(node.id, bin=node.bin, mean_filter=node.mean_filter, size=len(node.members))
        g.add_edges_from(self.edges)
        return g

    def betti_1(self) -> int:
        g = self.to_networkx()
        return g.number_of_edges() - g.number_of_nodes() + nx.number_connected_components(g)


@dataclass(frozen=True)
class DrgParams:
    scale: float
    n_bins: int
    degree: int
    filter: str
    m: Optional[float] = None


@dataclass(frozen=True, eq=False)
class DecoratedReebGraph:
    skeleton: ReebSkeleton
    diagrams: Tuple[PersistenceDiagram, ...]
    mode: str
    params: DrgParams
    name: str = "drg"
    vectors: Optional[np.ndarray] = field(default=None)

    def __post_init__(self) -> None:
        if len(self.diagrams) != len(self.skeleton.nodes):
            raise InputValidationError("need exactly one diagram per node")
        if self.mode not in DECORATION_MODES:
            raise InputValidationError(f"unknown decoration mode '{self.mode}'")
        if self.vectors is not None and len(self.vectors) != len(self.diagrams):
            raise InputValidationError("need exactly one vector per node")

    @property
    def n_nodes(self) -> int:
        return len(self.skeleton.nodes)

    @property
    def degree(self) -> int:
        return self.params.degree

    def with_vectors(self, vectors: np.ndarray) -> "DecoratedReebGraph":
        return replace(self, vectors=np.asarray(vectors, dtype=float))

    def renamed(self, name: str) -> "DecoratedReebGraph":
        return replace(self, name=name)

    def total_persistence(self, cap: float) -> np.ndarray:
        return np.array([total_persistence(d, cap) for d in self.diagrams])

    def mean_births(self) -> np.ndarray:
        return np.array([float(d.births.mean()) if len(d) else 0.0 for d in self.diagrams])


# ----------------------------
# Skeleton
# ----------------------------
def choose_scale(distances, m: float = 2) -> float:
    if not m >= 1:
        raise InputValidationError(f"scale multiplier m must be >= 1, got {m}")
    return m * connectivity_threshold(distances)


def _bin_index(values: np.ndarray, n_bins: int) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= 0:
        # constant filter: one bin spanning the single value
        return np.zeros(len(values), dtype=np.int64), np.array([lo, hi])
    edges = np.linspace(lo, hi, n_bins + 1)
    idx = np.floor((values - lo) / (hi - lo) * n_bins).astype(np.int64)
    # last bin is closed on the right
    return np.clip(idx, 0, n_bins - 1), edges


def estimate_reeb(
    cloud: PointCloud,
    filt: FilterValues,
    r: float,
    n_bins: int,
    complex_: Optional[RipsComplex] = None,
) -> ReebSkeleton:
    """Nodes are components of each bin's preimage in the Rips 1-skeleton at scale r;
    nodes of consecutive bins are joined when some 1-skeleton edge connects them.
    """
    if cloud.size == 0:
        raise DegenerateInputError("point cloud is empty")
    if len(filt) != cloud.size:
        raise InputValidationError(f"filter has {len(filt)} values for {cloud.size} points")
    if not r > 0:
        raise InputValidationError(f"scale must be > 0, got {r}")
    if n_bins < 1:
        raise InputValidationError(f"n_bins must be >= 1, got {n_bins}")
    if complex_ is None:
        complex_ = build_rips(cloud.metric(), r, max_dim=1)
    elif complex_.n_vertices != cloud.size or complex_.scale != r:
        raise InputValidationError("complex does not match the cloud and scale")

    f = filt.values
    bins, bin_edges = _bin_index(f, n_bins)
    nodes: List[ReebNode] = []
    for b in range(len(bin_edges) - 1):
        verts = np.flatnonzero(bins == b)
        if len(verts) == 0:
            continue
        for members in connected_components(complex_, verts).groups():
            centroid = None if cloud.points is None else cloud.points[members].mean(axis=0)
            nodes.append(
                ReebNode(
                    id=len(nodes),
                    bin=b,
                    members=members,
                    mean_filter=float(f[members].mean()),
                    centroid=centroid,
                )
            )

    node_of = np.full(cloud.size, -1, dtype=np.int64)
    for node in nodes:
        node_of[node.members] = node.id
    e = complex_.edges
    found = set()
    if len(e):
        step = bins[e[:, 1]] - bins[e[:, 0]]
        for a, b in e[np.abs(step) == 1].tolist():
            u, v = node_of[a], node_of[b]
            found.add((min(u, v), max(u, v)))
    edges = tuple(sorted((int(u), int(v)) for u, v in found))
    logger.info("reeb skeleton: %d nodes, %d edges (r=%g, bins=%d)", len(nodes), len(edges), r, n_bins)
    return ReebSkeleton(
        nodes=tuple(nodes),
        edges=edges,
        bin_edges=bin_edges,
        scale=float(r),
        n_points=cloud.size,
    )


# ----------------------------
# Decorations
# ----------------------------
def _local_diagram(members: np.ndarray, distances: np.ndarray, r_max: float, degree: int) -> PersistenceDiagram:
    sub = distances[np.ix_(members, members)]
    return compute_persistence(rips_filtration(sub, r_max), degree)


def _transform_diagram(
    members: np.ndarray, complex_: RipsComplex, distances: np.ndarray, degree: int
) -> PersistenceDiagram:
    return compute_persistence(distance_to_set_filtration(complex_, members, distances), degree)


def decorate_local(
    skeleton: ReebSkeleton,
    cloud: PointCloud,
    degree: int = 1,
    r_max: Optional[float] = None,
    filter_tag: str = "external",
    n_jobs: Optional[int] = 1,
    name: str = "drg",
) -> DecoratedReebGraph:
    """Rips persistence of each node's member set, capped at the construction scale."""
    if cloud.size != skeleton.n_points:
        raise InputValidationError("skeleton was not built from this cloud")
    d = cloud.metric()
    r_max = skeleton.scale if r_max is None else r_max
    job = partial(_local_diagram, distances=d, r_max=r_max, degree=degree)
    diagrams = parallel_map(job, [node.members for node in skeleton.nodes], n_jobs=n_jobs)
    params = DrgParams(scale=skeleton.scale, n_bins=skeleton.n_bins, degree=degree, filter=filter_tag)
    return DecoratedReebGraph(skeleton, tuple(diagrams), "local", params, name=name)


def decorate_barcode_transform(
    skeleton: ReebSkeleton,
    complex_: RipsComplex,
    distances,
    degree: int = 1,
    filter_tag: str = "external",
    n_jobs: Optional[int] = 1,
    name: str = "drg",
) -> DecoratedReebGraph:
    """Persistence of the whole complex filtered by distance to each node's members."""
    if complex_.n_vertices != skeleton.n_points or complex_.scale != skeleton.scale:
        raise InputValidationError("complex and skeleton must share the cloud and scale")
    if complex_.max_dim < 2 and degree >= 1:
        raise InputValidationError("barcode transform in degree 1 needs triangles (max_dim=2)")
    d = np.asarray(distances, dtype=float)
    job = partial(_transform_diagram, complex_=complex_, distances=d, degree=degree)
    diagrams = parallel_map(job, [node.members for node in skeleton.nodes], n_jobs=n_jobs)
    params = DrgParams(scale=skeleton.scale, n_bins=skeleton.n_bins, degree=degree, filter=filter_tag)
    return DecoratedReebGraph(skeleton, tuple(diagrams), "barcode-transform", params, name=name)


def build_drg(
    cloud: PointCloud,
    filt: FilterValues,
    m: float = 2,
    n_bins: int = 10,
    degree: int = 1,
    mode: str = "local",
    r: Optional[float] = None,
    n_jobs: Optional[int] = 1,
    name: str = "drg",
) -> DecoratedReebGraph:
    """Scale heuristic -> skeleton -> decoration, in one call."""
    if mode not in DECORATION_MODES:
        raise InputValidationError(f"unknown decoration mode '{mode}'")
    d = cloud.metric()
    scale = choose_scale(d, m) if r is None else r
    if scale == 0:
        # a single point (or all points coincide): any positive scale gives the same complex
        scale = 1.0
    full = build_rips(d, scale, max_dim=2 if mode == "barcode-transform" else 1)
    skeleton = estimate_reeb(cloud, filt, scale, n_bins, complex_=full)
    if mode == "local":
        drg = decorate_local(skeleton, cloud, degree, filter_tag=filt.provenance, n_jobs=n_jobs, name=name)
    else:
        drg = decorate_barcode_transform(
            skeleton, full, d, degree, filter_tag=filt.provenance, n_jobs=n_jobs, name=name
        )
    return replace(drg, params=replace(drg.params, m=None if r is not None else float(m)))


def drg_summary(drg: DecoratedReebGraph, cap: Optional[float] = None) -> Dict[str, Any]:
    if cap is None:
        cap = default_cap(drg.diagrams)
    out = {
        "name": drg.name,
        "mode": drg.mode,
        "nodes": drg.n_nodes,
        "edges": len(drg.skeleton.edges),
        "betti_1": drg.skeleton.betti_1(),
        "cap": cap,
        "total_persistence": drg.total_persistence(cap).tolist(),
    }
    if drg.mode == "barcode-transform":
        out["mean_births"] = drg.mean_births().tolist()
    return out
