from __future__ import annotations

from itertools import combinations
from typing import List, Sequence, Tuple

import networkx as nx
import numpy as np
import pytest

from src.geometry import PointCloud
from src.persistence import PersistenceDiagram
from src.reeb import DecoratedReebGraph, DrgParams, ReebNode, ReebSkeleton


# ----------------------------
# Oracles
# ----------------------------
def gf2_rank(m: np.ndarray) -> int:
    m = (np.asarray(m) % 2).astype(np.uint8)
    rank = 0
    rows, cols = m.shape
    for c in range(cols):
        hits = np.flatnonzero(m[rank:, c]) + rank
        if len(hits) == 0:
            continue
        p = hits[0]
        m[[rank, p]] = m[[p, rank]]
        others = np.flatnonzero(m[:, c])
        others = others[others != rank]
        m[others] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def sublevel_betti(distances: np.ndarray, t: float) -> Tuple[int, int]:
    """Betti numbers (b0, b1) of the Rips complex {diameter / 2 <= t}, straight from the definition."""
    n = len(distances)
    edges = [e for e in combinations(range(n), 2) if distances[e] / 2 <= t]
    tris = [
        s
        for s in combinations(range(n), 3)
        if max(distances[s[0], s[1]], distances[s[0], s[2]], distances[s[1], s[2]]) / 2 <= t
    ]
    d1 = np.zeros((n, len(edges)), dtype=np.uint8)
    for k, (a, b) in enumerate(edges):
        d1[a, k] = d1[b, k] = 1
    eidx = {e: k for k, e in enumerate(edges)}
    d2 = np.zeros((len(edges), len(tris)), dtype=np.uint8)
    for k, (a, b, c) in enumerate(tris):
        for f in ((a, b), (a, c), (b, c)):
            d2[eidx[f], k] = 1
    r1 = gf2_rank(d1) if len(edges) else 0
    r2 = gf2_rank(d2) if len(tris) and len(edges) else 0
    return n - r1, len(edges) - r1 - r2


def alive_at(diagram: PersistenceDiagram, t: float) -> int:
    return int(np.sum((diagram.births <= t) & (t < diagram.deaths)))


# ----------------------------
# Fixtures
# ----------------------------
def circle_points(n: int = 100, offset: float = 0.013) -> np.ndarray:
    theta = 2 * np.pi * np.arange(n) / n + offset
    return np.stack([np.cos(theta), np.sin(theta)], axis=1)


def figure_eight(k: int = 12) -> PointCloud:
    """Two k-cycles sharing vertex 0, hop metric, drawn as two touching unit circles."""
    g = nx.Graph()
    loop_a = [0] + list(range(1, k))
    loop_b = [0] + list(range(k, 2 * k - 1))
    nx.add_cycle(g, loop_a)
    nx.add_cycle(g, loop_b)
    n = g.number_of_nodes()
    hops = dict(nx.all_pairs_shortest_path_length(g))
    d = np.array([[hops[i][j] for j in range(n)] for i in range(n)], dtype=float)
    theta = 2 * np.pi * np.arange(k) / k
    pts = np.zeros((n, 2))
    for pos, v in enumerate(loop_a):
        pts[v] = (-1 + np.cos(theta[pos]), np.sin(theta[pos]))
    for pos, v in enumerate(loop_b):
        pts[v] = (1 - np.cos(theta[pos]), np.sin(theta[pos]))
    return PointCloud(points=pts, distances=d)


def torus_grid(nu: int = 40, nv: int = 12, big: float = 3.0, small: float = 1.0) -> np.ndarray:
    u, v = np.meshgrid(2 * np.pi * np.arange(nu) / nu, 2 * np.pi * np.arange(nv) / nv, indexing="ij")
    ring = big + small * np.cos(v)
    return np.stack([ring * np.cos(u), ring * np.sin(u), small * np.sin(v)], axis=-1).reshape(-1, 3)


def make_drg(
    mean_filter: Sequence[float],
    edges: Sequence[Tuple[int, int]],
    diagrams: Sequence[Sequence[Tuple[float, float]]],
    name: str = "drg",
    mode: str = "local",
    degree: int = 1,
) -> DecoratedReebGraph:
    """Hand-built DRG: node i holds point i, centroid (i, f_i)."""
    nodes: List[ReebNode] = []
    for i, f in enumerate(mean_filter):
        nodes.append(
            ReebNode(id=i, bin=i, members=np.array([i]), mean_filter=float(f), centroid=np.array([float(i), float(f)]))
        )
    n = len(nodes)
    skeleton = ReebSkeleton(
        nodes=tuple(nodes),
        edges=tuple(sorted((min(u, v), max(u, v)) for u, v in edges)),
        bin_edges=np.arange(n + 1, dtype=float),
        scale=1.0,
        n_points=n,
    )
    dgms = tuple(PersistenceDiagram(degree, np.array(p, dtype=float).reshape(-1, 2)) for p in diagrams)
    params = DrgParams(scale=1.0, n_bins=n, degree=degree, filter="external")
    return DecoratedReebGraph(skeleton, dgms, mode, params, name=name)


def random_drg(rng: np.random.Generator, n: int, name: str = "drg") -> DecoratedReebGraph:
    f = np.sort(rng.uniform(0, 5, n))
    edges = [(i, i + 1) for i in range(n - 1)]
    if n > 3:
        edges.append((0, n - 1))
    dgms = []
    for _ in range(n):
        k = int(rng.integers(0, 4))
        b = rng.uniform(0, 1, k)
        dgms.append(list(zip(b, b + rng.uniform(0.05, 1, k))))
    return make_drg(f, edges, dgms, name=name)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def circle_cloud() -> PointCloud:
    return PointCloud(points=circle_points())


@pytest.fixture
def square_distances() -> np.ndarray:
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    return np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)


@pytest.fixture
def eight_cloud() -> PointCloud:
    return figure_eight()
