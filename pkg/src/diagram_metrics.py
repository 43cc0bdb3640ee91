"""Bottleneck distance, persistence images and summary statistics for diagrams."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import InputValidationError
from .persistence import PersistenceDiagram

logger = logging.getLogger(__name__)

STATS_FIELDS = (
    "count",
    "birth_mean",
    "birth_std",
    "death_mean",
    "death_std",
    "persistence_mean",
    "persistence_std",
    "persistence_max",
    "persistence_sum",
)
STATS_SCHEMA_VERSION = 1


def default_cap(diagrams: Iterable[PersistenceDiagram]) -> float:
    """1.05 x the largest finite value across ``diagrams`` (1.0 if there is none)."""
    top = max([d.finite_max() for d in diagrams] + [0.0])
    return 1.05 * top if top > 0 else 1.0


def _check_cap(diagram: PersistenceDiagram, cap: float) -> None:
    if not np.isfinite(cap):
        raise InputValidationError("cap must be finite")
    if cap < diagram.finite_max():
        raise InputValidationError(f"cap {cap} is below a finite diagram value {diagram.finite_max()}")


# ----------------------------
# Bottleneck
# ----------------------------
def _perfect_matching_exists(feasible: np.ndarray) -> bool:
    graph = csr_matrix(feasible.astype(np.int8))
    match = maximum_bipartite_matching(graph, perm_type="column")
    return bool(np.all(match >= 0))


def bottleneck_distance(a: PersistenceDiagram, b: PersistenceDiagram, cap: Optional[float] = None) -> float:
    """Exact bottleneck distance (L-infinity ground cost, diagonal matching allowed).

    Infinite deaths are replaced by ``cap`` before matching. The answer is one of
    the finitely many pair/diagonal costs, found by binary search with a
    bipartite perfect-matching test.
    """
    if a.degree != b.degree:
        raise InputValidationError(f"cannot compare degree {a.degree} with degree {b.degree}")
    if cap is None:
        cap = default_cap([a, b])
    _check_cap(a, cap)
    _check_cap(b, cap)
    pa, pb = a.capped(cap), b.capped(cap)
    n, m = len(pa), len(pb)
    if n + m == 0:
        return 0.0

    size = n + m
    cost = np.full((size, size), np.inf)
    if n and m:
        cost[:n, :m] = np.maximum(
            np.abs(pa[:, None, 0] - pb[None, :, 0]),
            np.abs(pa[:, None, 1] - pb[None, :, 1]),
        )
    # row i < n may go to its own diagonal slot m + i
    for i in range(n):
        cost[i, m + i] = (pa[i, 1] - pa[i, 0]) / 2
    # diagonal row n + j may take point j of b
    for j in range(m):
        cost[n + j, j] = (pb[j, 1] - pb[j, 0]) / 2
    cost[n:, m:] = 0.0

    candidates = np.unique(cost[np.isfinite(cost)])
    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _perfect_matching_exists(cost <= candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])


# ----------------------------
# Persistence images
# ----------------------------
@dataclass(frozen=True)
class ImageGrid:
    birth_range: Tuple[float, float]
    pers_range: Tuple[float, float]
    resolution: Tuple[int, int] = (20, 20)  # (rows: persistence, cols: birth)
    sigma: float = 0.05

    def __post_init__(self) -> None:
        if not self.birth_range[1] > self.birth_range[0] or not self.pers_range[1] > self.pers_range[0]:
            raise InputValidationError("persistence image ranges must be nondegenerate")
        if not self.sigma > 0:
            raise InputValidationError("persistence image bandwidth must be > 0")
        if min(self.resolution) < 1:
            raise InputValidationError("persistence image resolution must be positive")

    @classmethod
    def fit(
        cls,
        diagrams: Sequence[PersistenceDiagram],
        cap: float,
        resolution: Tuple[int, int] = (20, 20),
        sigma: Optional[float] = None,
    ) -> "ImageGrid":
        """Shared grid for a collection: births min..max, persistence 0..max, sigma 5% of the latter."""
        births = np.concatenate([d.births for d in diagrams]) if diagrams else np.zeros(0)
        pers = np.concatenate([d.persistences(cap) for d in diagrams]) if diagrams else np.zeros(0)
        p_hi = float(pers.max()) if pers.size and pers.max() > 0 else 1.0
        if sigma is None:
            sigma = 0.05 * p_hi
        b_lo, b_hi = (float(births.min()), float(births.max())) if births.size else (0.0, 0.0)
        if b_hi - b_lo <= 0:
            b_lo, b_hi = b_lo - 0.5 * p_hi, b_hi + 0.5 * p_hi
        return cls((b_lo, b_hi), (0.0, p_hi), tuple(int(x) for x in resolution), float(sigma))


@dataclass(frozen=True, eq=False)
class PersistenceImage:
    grid: ImageGrid
    pixels: np.ndarray  # (rows, cols)

    @property
    def vector(self) -> np.ndarray:
        # row-major with birth varying fastest
        return self.pixels.reshape(-1)


def persistence_image(diagram: PersistenceDiagram, grid: ImageGrid, cap: Optional[float] = None) -> PersistenceImage:
    """Persistence-weighted Gaussians in (birth, persistence), midpoint rule per pixel."""
    rows, cols = grid.resolution
    if cap is None:
        cap = default_cap([diagram])
    _check_cap(diagram, cap)
    pixels = np.zeros((rows, cols))
    if len(diagram):
        b = diagram.births
        p = diagram.persistences(cap)
        bx = np.linspace(*grid.birth_range, cols + 1)
        py = np.linspace(*grid.pers_range, rows + 1)
        cx = (bx[:-1] + bx[1:]) / 2
        cy = (py[:-1] + py[1:]) / 2
        area = (bx[1] - bx[0]) * (py[1] - py[0])
        s2 = grid.sigma**2
        gx = np.exp(-((cx[None, :] - b[:, None]) ** 2) / (2 * s2))  # (k, cols)
        gy = np.exp(-((cy[None, :] - p[:, None]) ** 2) / (2 * s2))  # (k, rows)
        pixels = np.einsum("k,kr,kc->rc", p, gy, gx) * area / (2 * np.pi * s2)
    return PersistenceImage(grid, pixels)


# ----------------------------
# Summary statistics
# ----------------------------
def diagram_stats(diagram: PersistenceDiagram, cap: float) -> np.ndarray:
    """Fixed-length vector named by STATS_FIELDS; population std; zeros when empty."""
    _check_cap(diagram, cap)
    if len(diagram) == 0:
        return np.zeros(len(STATS_FIELDS))
    b = diagram.births
    d = np.minimum(diagram.deaths, cap)
    p = d - b
    return np.array(
        [len(diagram), b.mean(), b.std(), d.mean(), d.std(), p.mean(), p.std(), p.max(), p.sum()],
        dtype=float,
    )


def vector_distance(u, v) -> float:
    u, v = np.asarray(u, dtype=float).reshape(-1), np.asarray(v, dtype=float).reshape(-1)
    if u.shape != v.shape:
        raise InputValidationError(f"vector lengths differ: {u.size} vs {v.size}")
    return float(np.linalg.norm(u - v))
