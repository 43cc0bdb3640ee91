from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path
from scipy.spatial.distance import pdist, squareform
from scipy.special import logsumexp
from sklearn.decomposition import PCA

from .errors import DegenerateInputError, InputValidationError

if TYPE_CHECKING:
    from .complex import RipsComplex

logger = logging.getLogger(__name__)

DIST_TOL = 1e-9
PCA_TOL = 1e-12


# ----------------------------
# Helpers
# ----------------------------
def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def check_distance_matrix(d, name: str = "distance matrix") -> np.ndarray:
    """Return ``d`` as a float array after checking square/symmetric/zero-diagonal/nonnegative."""
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise InputValidationError(f"{name} must be square, got shape {d.shape}")
    if d.shape[0] == 0:
        raise DegenerateInputError(f"{name} is empty")
    if np.isnan(d).any():
        raise InputValidationError(f"{name} contains NaN")
    if (d < 0).any():
        raise InputValidationError(f"{name} has negative entries")
    if np.any(np.abs(np.diag(d)) > DIST_TOL):
        raise InputValidationError(f"{name} has a nonzero diagonal")
    finite = np.isfinite(d)
    if not np.array_equal(finite, finite.T) or np.any(np.abs(d[finite] - d.T[finite]) > DIST_TOL):
        raise InputValidationError(f"{name} is not symmetric")
    return d


# ----------------------------
# Types
# ----------------------------
@dataclass(frozen=True, eq=False)
class PointCloud:
    """Finite metric space: coordinates, an explicit distance matrix, or both.

    When both are given the explicit matrix is the metric (e.g. a graph
    shortest-path metric) and the coordinates are only used for centroids.
    """

    points: Optional[np.ndarray] = None
    distances: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.points is None and self.distances is None:
            raise DegenerateInputError("point cloud needs coordinates or a distance matrix")
        n = None
        if self.points is not None:
            pts = np.asarray(self.points, dtype=float)
            if pts.ndim == 1:
                pts = pts[:, None]
            if pts.ndim != 2 or pts.shape[0] == 0:
                raise DegenerateInputError("point cloud is empty")
            if not np.isfinite(pts).all():
                raise InputValidationError("point coordinates must be finite")
            object.__setattr__(self, "points", _frozen(pts))
            n = pts.shape[0]
        if self.distances is not None:
            d = check_distance_matrix(self.distances)
            if n is not None and d.shape[0] != n:
                raise InputValidationError(
                    f"distance matrix is {d.shape[0]}x{d.shape[0]} but there are {n} points"
                )
            object.__setattr__(self, "distances", _frozen(d))

    @property
    def size(self) -> int:
        if self.points is not None:
            return int(self.points.shape[0])
        return int(self.distances.shape[0])

    @property
    def dim(self) -> int:
        return 0 if self.points is None else int(self.points.shape[1])

    def metric(self) -> np.ndarray:
        if self.distances is not None:
            return self.distances
        return pairwise_distances(self)

    def subset(self, idx) -> "PointCloud":
        idx = np.asarray(idx, dtype=int)
        pts = None if self.points is None else self.points[idx]
        d = None if self.distances is None else self.distances[np.ix_(idx, idx)]
        return PointCloud(points=pts, distances=d)


@dataclass(frozen=True, eq=False)
class FilterValues:
    values: np.ndarray
    provenance: str = "external"

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.size == 0:
            raise DegenerateInputError("filter has no values")
        if not np.isfinite(v).all():
            raise InputValidationError(f"filter '{self.provenance}' has non-finite values")
        object.__setattr__(self, "values", _frozen(v))

    def __len__(self) -> int:
        return int(self.values.shape[0])


# ----------------------------
# Metrics
# ----------------------------
def pairwise_distances(cloud: PointCloud) -> np.ndarray:
    if cloud.points is None:
        raise InputValidationError("point cloud has no coordinates")
    if cloud.size == 1:
        return np.zeros((1, 1))
    return squareform(pdist(cloud.points, metric="euclidean"))


def graph_geodesic_distances(complex_: "RipsComplex", distances) -> np.ndarray:
    """Shortest-path metric on the 1-skeleton, edges weighted by ambient length.

    Unreachable pairs come back as +inf.
    """
    d = np.asarray(distances, dtype=float)
    n = complex_.n_vertices
    if d.shape != (n, n):
        raise InputValidationError("distance matrix does not match the complex")
    e = complex_.edges
    if len(e) == 0:
        out = np.full((n, n), np.inf)
        np.fill_diagonal(out, 0.0)
        return out
    w = d[e[:, 0], e[:, 1]]
    # duplicate points give zero-length edges; keep them as edges
    w = np.maximum(w, np.finfo(float).tiny)
    g = coo_matrix((w, (e[:, 0], e[:, 1])), shape=(n, n)).tocsr()
    out = shortest_path(g, method="D", directed=False)
    out[d == 0] = 0.0
    return out


# ----------------------------
# Filters
# ----------------------------
def coordinate_filter(cloud: PointCloud, axis: int) -> FilterValues:
    if cloud.points is None:
        raise InputValidationError("coordinate filter needs coordinates")
    if not 0 <= axis < cloud.dim:
        raise InputValidationError(f"axis {axis} out of range for {cloud.dim}-dimensional points")
    return FilterValues(cloud.points[:, axis], provenance=f"coordinate-axis {axis}")


def pca_filter(cloud: PointCloud, component: int = 0) -> FilterValues:
    """Projection onto a principal axis; the first nonzero loading is made positive."""
    if cloud.points is None:
        raise InputValidationError("pca filter needs coordinates")
    if cloud.size < 2:
        raise DegenerateInputError("pca filter needs at least two points")
    if not 0 <= component < cloud.dim:
        raise InputValidationError(f"component {component} out of range for {cloud.dim}-dimensional points")
    if component >= cloud.size or not np.ptp(cloud.points, axis=0).any():
        raise DegenerateInputError(f"covariance is degenerate for principal component {component}")
    pca = PCA(n_components=component + 1, svd_solver="full").fit(cloud.points)
    variances = pca.explained_variance_
    if variances[component] <= PCA_TOL * max(1.0, variances[0]):
        raise DegenerateInputError(f"covariance is degenerate for principal component {component}")
    axis = pca.components_[component]
    lead = np.flatnonzero(np.abs(axis) > 1e-12)[0]
    if axis[lead] < 0:
        axis = -axis
    return FilterValues((cloud.points - pca.mean_) @ axis, provenance=f"pca-component {component}")


def eccentricity_filter(distances, p: float = 100.0) -> FilterValues:
    """ecc_p(x) = ((1/n) sum_x' d(x,x')^p)^(1/p), evaluated in log space."""
    if not p >= 1:
        raise InputValidationError(f"eccentricity exponent must be >= 1, got {p}")
    d = check_distance_matrix(distances)
    if not np.isfinite(d).all():
        raise InputValidationError("eccentricity needs a finite metric (is the complex connected?)")
    n = d.shape[0]
    with np.errstate(divide="ignore"):
        logs = p * np.log(d)
    lse = logsumexp(logs, axis=1)
    vals = np.exp((lse - np.log(n)) / p)
    vals[~np.isfinite(lse)] = 0.0
    return FilterValues(vals, provenance=f"eccentricity-{p:g}")


def external_filter(values) -> FilterValues:
    return FilterValues(values, provenance="external")
