"""Fused Gromov-Wasserstein distance between decorated Reeb graphs.

objective(pi) = alpha * L_gr(pi) + (1 - alpha) * L_bc(pi), minimized over couplings
of the uniform node measures by conditional gradient with exact line search.
The reported value is the square root of the minimized objective.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import partial
from itertools import combinations
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment, linprog
from scipy.sparse.csgraph import csgraph_from_dense, shortest_path
from scipy.spatial.distance import cdist

from .diagram_metrics import (
    ImageGrid,
    bottleneck_distance,
    default_cap,
    diagram_stats,
    persistence_image,
)
from .errors import InputValidationError, NumericalError
from .reeb import DecoratedReebGraph
from .services.workers import parallel_map

logger = logging.getLogger(__name__)

AttrMode = Literal["bottleneck", "image", "stats"]
ATTR_MODES = ("bottleneck", "image", "stats")
MARGINAL_TOL = 1e-8
DISCONNECTED_FACTOR = 10.0


# ----------------------------
# Types
# ----------------------------
@dataclass(frozen=True, eq=False)
class GraphCost:
    """Shortest-path node distances; ``disconnected`` marks pairs with no path."""

    matrix: np.ndarray
    disconnected: np.ndarray

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])

    def max_finite(self) -> float:
        vals = self.matrix[~self.disconnected]
        return float(vals.max()) if vals.size else 0.0

    def filled(self, value: float) -> "GraphCost":
        m = self.matrix.copy()
        m[self.disconnected] = value
        return GraphCost(m, self.disconnected)


@dataclass(frozen=True)
class SolverParams:
    max_iter: int = 200
    tol: float = 1e-9
    n_starts: int = 1
    seed: int = 0
    keep_iterates: bool = False


@dataclass(frozen=True, eq=False)
class FGWResult:
    value: float
    objective: float
    coupling: np.ndarray
    history: Tuple[float, ...] = ()
    iterates: Tuple[np.ndarray, ...] = field(default=())
    n_iter: int = 0

    def __iter__(self):
        # unpacks as (value, coupling)
        return iter((self.value, self.coupling))


# ----------------------------
# Structure and attribute costs
# ----------------------------
def shortest_path_costs(drg: DecoratedReebGraph) -> GraphCost:
    """All-pairs shortest paths, edge weight |mean_f(u) - mean_f(v)|.

    Disconnected pairs get 10 x the largest finite path length; fgw_distance
    re-fills them with the joint maximum over both compared graphs.
    """
    nodes = drg.skeleton.nodes
    n = len(nodes)
    f = np.array([node.mean_filter for node in nodes])
    dense = np.full((n, n), np.inf)
    for u, v in drg.skeleton.edges:
        w = abs(f[u] - f[v])
        dense[u, v] = dense[v, u] = w
    # explicit zero-weight edges survive because non-edges are marked by inf
    graph = csgraph_from_dense(dense, null_value=np.inf)
    sp = shortest_path(graph, method="D", directed=False)
    disconnected = ~np.isfinite(sp)
    cost = GraphCost(sp, disconnected)
    return cost.filled(DISCONNECTED_FACTOR * (cost.max_finite() or 1.0))


def _joint_fill(c1: GraphCost, c2: GraphCost) -> Tuple[np.ndarray, np.ndarray]:
    top = max(c1.max_finite(), c2.max_finite())
    fill = DISCONNECTED_FACTOR * (top if top > 0 else 1.0)
    return c1.filled(fill).matrix, c2.filled(fill).matrix


def node_vectors(drg: DecoratedReebGraph, attr_mode: str, cap: float, grid: Optional[ImageGrid]) -> np.ndarray:
    if attr_mode == "image":
        if drg.vectors is not None:
            return drg.vectors
        if grid is None:
            grid = ImageGrid.fit(drg.diagrams, cap)
        return np.stack([persistence_image(d, grid, cap).vector for d in drg.diagrams])
    if attr_mode == "stats":
        return np.stack([diagram_stats(d, cap) for d in drg.diagrams])
    raise InputValidationError(f"attribute mode '{attr_mode}' has no vector form")


def attribute_costs(
    drg1: DecoratedReebGraph,
    drg2: DecoratedReebGraph,
    attr_mode: str = "image",
    cap: Optional[float] = None,
    grid: Optional[ImageGrid] = None,
) -> np.ndarray:
    """|V1| x |V2| matrix of squared attribute distances."""
    if attr_mode not in ATTR_MODES:
        raise InputValidationError(f"unknown attribute mode '{attr_mode}'")
    if cap is None:
        cap = default_cap(list(drg1.diagrams) + list(drg2.diagrams))
    if attr_mode == "bottleneck":
        return np.array(
            [[bottleneck_distance(a, b, cap) ** 2 for b in drg2.diagrams] for a in drg1.diagrams]
        ).reshape(drg1.n_nodes, drg2.n_nodes)
    if attr_mode == "image" and grid is None and (drg1.vectors is None or drg2.vectors is None):
        grid = ImageGrid.fit(list(drg1.diagrams) + list(drg2.diagrams), cap)
    v1 = node_vectors(drg1, attr_mode, cap, grid)
    v2 = node_vectors(drg2, attr_mode, cap, grid)
    if v1.shape[1] != v2.shape[1]:
        raise InputValidationError("node vectors of the two graphs have different lengths")
    return cdist(v1, v2, metric="sqeuclidean")


# ----------------------------
# Losses
# ----------------------------
def _check_shapes(pi: np.ndarray, n: int, m: int) -> None:
    if pi.shape != (n, m):
        raise InputValidationError(f"coupling has shape {pi.shape}, expected {(n, m)}")


def _tensor_product(c1: np.ndarray, c2: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """L(C1, C2) (x) pi for the square loss, using pi's own marginals."""
    p, q = pi.sum(axis=1), pi.sum(axis=0)
    const = np.outer((c1**2) @ p, np.ones(len(q))) + np.outer(np.ones(len(p)), (c2**2) @ q)
    return const - 2.0 * c1 @ pi @ c2.T


def graph_loss(pi, c1, c2) -> float:
    c1 = c1.matrix if isinstance(c1, GraphCost) else np.asarray(c1, dtype=float)
    c2 = c2.matrix if isinstance(c2, GraphCost) else np.asarray(c2, dtype=float)
    pi = np.asarray(pi, dtype=float)
    _check_shapes(pi, c1.shape[0], c2.shape[0])
    return float(np.sum(_tensor_product(c1, c2, pi) * pi))


def barcode_loss(pi, costs) -> float:
    pi, costs = np.asarray(pi, dtype=float), np.asarray(costs, dtype=float)
    _check_shapes(pi, *costs.shape)
    return float(np.sum(costs * pi))


def fgw_objective(pi, c1, c2, costs, alpha: float) -> float:
    return alpha * graph_loss(pi, c1, c2) + (1.0 - alpha) * barcode_loss(pi, costs)


def is_coupling(pi, tol: float = MARGINAL_TOL) -> bool:
    """Nonnegative with uniform marginals 1/n (rows) and 1/m (columns) to ``tol``."""
    pi = np.asarray(pi, dtype=float)
    n, m = pi.shape
    return bool(
        np.all(pi >= -tol)
        and np.allclose(pi.sum(axis=1), 1.0 / n, rtol=0, atol=tol)
        and np.allclose(pi.sum(axis=0), 1.0 / m, rtol=0, atol=tol)
    )


# ----------------------------
# Solver
# ----------------------------
def transport_vertex(costs: np.ndarray) -> np.ndarray:
    """Exact optimal coupling of uniform measures for a linear cost.

    Scaled by n*m the marginals are integers, so the LP vertex is integral;
    rounding it restores exact marginals.
    """
    n, m = costs.shape
    if n == m:
        rows, cols = linear_sum_assignment(costs)
        out = np.zeros((n, m))
        out[rows, cols] = 1.0 / n
        return out
    # row sums then column sums of the row-major flattened plan
    a_eq = sparse.vstack(
        [sparse.kron(sparse.eye(n), np.ones((1, m))), sparse.kron(np.ones((1, n)), sparse.eye(m))], format="csr"
    )
    b_eq = np.concatenate([np.full(n, float(m)), np.full(m, float(n))])
    res = linprog(costs.reshape(-1), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs-ds")
    if res.status != 0:
        raise NumericalError(f"transport LP failed: {res.message}")
    plan = np.rint(res.x.reshape(n, m))
    if not (np.all(plan.sum(axis=1) == m) and np.all(plan.sum(axis=0) == n)):
        raise NumericalError("transport LP returned a non-integral vertex")
    return plan / (n * m)


def _line_search(c1, c2, costs, alpha, pi, delta, const) -> Tuple[float, float]:
    """Exact minimizer on [0, 1] of the objective along pi + tau * delta."""
    c1dc2 = c1 @ delta @ c2.T
    a = -2.0 * alpha * np.sum(c1dc2 * delta)
    b = alpha * (np.sum(const * delta) - 4.0 * np.sum((c1 @ pi @ c2.T) * delta)) + (1.0 - alpha) * np.sum(
        costs * delta
    )
    if a > 0:
        tau = min(1.0, max(0.0, -b / (2.0 * a)))
    else:
        tau = 1.0 if a + b < 0 else 0.0
    return tau, a * tau**2 + b * tau


def _conditional_gradient(c1, c2, costs, alpha, pi0, params: SolverParams):
    pi = pi0.copy()
    n, m = pi.shape
    p, q = np.full(n, 1.0 / n), np.full(m, 1.0 / m)
    const = np.outer((c1**2) @ p, np.ones(m)) + np.outer(np.ones(n), (c2**2) @ q)
    obj = fgw_objective(pi, c1, c2, costs, alpha)
    history = [obj]
    iterates = [pi.copy()] if params.keep_iterates else []
    it = 0
    for it in range(1, params.max_iter + 1):
        grad = alpha * (const - 4.0 * c1 @ pi @ c2.T) + (1.0 - alpha) * costs
        target = transport_vertex(grad)
        delta = target - pi
        tau, change = _line_search(c1, c2, costs, alpha, pi, delta, const)
        if tau <= 0 or change >= 0:
            break
        pi = pi + tau * delta
        new_obj = fgw_objective(pi, c1, c2, costs, alpha)
        history.append(new_obj)
        if params.keep_iterates:
            iterates.append(pi.copy())
        converged = abs(obj - new_obj) <= params.tol * max(abs(obj), 1e-300)
        obj = new_obj
        if converged:
            break
    return pi, obj, history, iterates, it


def monotone_coupling(f1: np.ndarray, f2: np.ndarray, reverse: bool = False) -> np.ndarray:
    """North-west corner coupling of the uniform measures with nodes taken in filter order.

    Depends only on the mean filter values, never on node ids. ``reverse`` walks
    the second graph from its top node down.
    """
    n, m = len(f1), len(f2)
    rows = np.argsort(f1, kind="stable")
    cols = np.argsort(f2, kind="stable")
    if reverse:
        cols = cols[::-1]
    # in units of 1/(n*m): each row holds m, each column n
    plan = np.zeros((n, m))
    left_row, left_col = m, n
    i = j = 0
    while i < n and j < m:
        take = min(left_row, left_col)
        plan[rows[i], cols[j]] += take
        left_row -= take
        left_col -= take
        if left_row == 0:
            i, left_row = i + 1, m
        if left_col == 0:
            j, left_col = j + 1, n
    return plan / (n * m)


def _starts(f1: np.ndarray, f2: np.ndarray, params: SolverParams) -> List[np.ndarray]:
    n, m = len(f1), len(f2)
    starts = [np.full((n, m), 1.0 / (n * m))]
    if n > 1 and m > 1:
        starts += [monotone_coupling(f1, f2), monotone_coupling(f1, f2, reverse=True)]
    rng = np.random.default_rng(params.seed)
    for _ in range(max(0, params.n_starts - 1)):
        starts.append(transport_vertex(rng.random((n, m))))
    return starts


def fgw_distance(
    drg1: DecoratedReebGraph,
    drg2: DecoratedReebGraph,
    alpha: float = 0.5,
    attr_mode: str = "image",
    params: SolverParams = SolverParams(),
    cap: Optional[float] = None,
    grid: Optional[ImageGrid] = None,
    costs: Optional[np.ndarray] = None,
    attr_weight: float = 1.0,
) -> FGWResult:
    """Best local optimum over the label-free starts (product coupling, the two
    filter-order couplings) and ``params.n_starts - 1`` seeded random vertices.

    ``attr_weight`` multiplies the attribute costs; it trades off against alpha
    but leaves the alpha = 0 and alpha = 1 optimal couplings unchanged.
    """
    if not 0.0 <= alpha <= 1.0:
        raise InputValidationError(f"alpha must be in [0, 1], got {alpha}")
    if not attr_weight > 0:
        raise InputValidationError(f"attribute weight must be positive, got {attr_weight}")
    if drg1.n_nodes == 0 or drg2.n_nodes == 0:
        raise InputValidationError("cannot compare an empty graph")
    if drg1.mode != drg2.mode:
        raise InputValidationError(f"decoration modes differ: '{drg1.mode}' vs '{drg2.mode}'")
    if drg1.degree != drg2.degree:
        raise InputValidationError(f"homology degrees differ: {drg1.degree} vs {drg2.degree}")

    c1, c2 = _joint_fill(shortest_path_costs(drg1), shortest_path_costs(drg2))
    if costs is None:
        costs = attribute_costs(drg1, drg2, attr_mode, cap, grid)
    costs = attr_weight * np.asarray(costs, dtype=float)
    if costs.shape != (drg1.n_nodes, drg2.n_nodes):
        raise InputValidationError(f"attribute costs have shape {costs.shape}, expected {(drg1.n_nodes, drg2.n_nodes)}")

    f1 = np.array([node.mean_filter for node in drg1.skeleton.nodes])
    f2 = np.array([node.mean_filter for node in drg2.skeleton.nodes])
    best = None
    for k, pi0 in enumerate(_starts(f1, f2, params)):
        pi, obj, history, iterates, n_iter = _conditional_gradient(c1, c2, costs, alpha, pi0, params)
        logger.debug("fgw start %d: objective %.6g after %d iterations", k, obj, n_iter)
        if best is None or obj < best.objective:
            best = FGWResult(
                value=float(np.sqrt(max(obj, 0.0))),
                objective=float(obj),
                coupling=pi,
                history=tuple(history),
                iterates=tuple(iterates),
                n_iter=n_iter,
            )
    if not is_coupling(best.coupling):
        raise NumericalError("solver left the coupling polytope")
    return best


def _pair_value(pair, drgs, alpha, attr_mode, params, cap, grid, attr_weight) -> float:
    i, j = pair
    return fgw_distance(drgs[i], drgs[j], alpha, attr_mode, params, cap, grid, attr_weight=attr_weight).value


def prepare_collection(
    drgs: Sequence[DecoratedReebGraph],
    attr_mode: str = "image",
    cap: Optional[float] = None,
    resolution: Tuple[int, int] = (20, 20),
    sigma: Optional[float] = None,
) -> Tuple[List[DecoratedReebGraph], float, Optional[ImageGrid]]:
    """Shared cap (and image grid, attaching node vectors) so pairs are comparable."""
    every = [d for g in drgs for d in g.diagrams]
    if cap is None:
        cap = default_cap(every)
    grid = None
    out = list(drgs)
    if attr_mode == "image":
        grid = ImageGrid.fit(every, cap, resolution, sigma)
        out = [g.with_vectors(np.stack([persistence_image(d, grid, cap).vector for d in g.diagrams])) for g in drgs]
    return out, cap, grid


def pairwise_fgw(
    drgs: Sequence[DecoratedReebGraph],
    alpha: float = 0.5,
    attr_mode: str = "image",
    params: SolverParams = SolverParams(),
    cap: Optional[float] = None,
    resolution: Tuple[int, int] = (20, 20),
    sigma: Optional[float] = None,
    n_jobs: Optional[int] = 1,
    attr_weight: float = 1.0,
) -> np.ndarray:
    """Symmetric matrix of FGW values; each unordered pair is solved once."""
    if len(drgs) < 2:
        raise InputValidationError("need at least two graphs to compare")
    prepared, cap, grid = prepare_collection(drgs, attr_mode, cap, resolution, sigma)
    pairs = list(combinations(range(len(prepared)), 2))
    job = partial(
        _pair_value,
        drgs=prepared,
        alpha=alpha,
        attr_mode=attr_mode,
        params=params,
        cap=cap,
        grid=grid,
        attr_weight=attr_weight,
    )
    values = parallel_map(job, pairs, n_jobs=n_jobs)
    out = np.zeros((len(prepared), len(prepared)))
    for (i, j), v in zip(pairs, values):
        out[i, j] = out[j, i] = v
    logger.info("pairwise fgw alpha=%g: %d pairs", alpha, len(pairs))
    return out
