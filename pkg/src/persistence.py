"""Persistent homology over GF(2) for filtrations of dimension <= 2."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .complex import RipsComplex, UnionFind, build_rips
from .errors import InputValidationError, UnsupportedDegreeError

logger = logging.getLogger(__name__)

Simplex = Tuple[int, ...]


# ----------------------------
# Types
# ----------------------------
@dataclass(frozen=True, eq=False)
class PersistenceDiagram:
    degree: int
    pairs: np.ndarray  # (k, 2) rows (birth, death); death may be +inf

    def __post_init__(self) -> None:
        p = np.asarray(self.pairs, dtype=float).reshape(-1, 2)
        if np.isnan(p).any():
            raise InputValidationError("diagram contains NaN")
        if np.any(p[:, 0] > p[:, 1]):
            raise InputValidationError("diagram has a pair with birth > death")
        if np.isinf(p[:, 0]).any():
            raise InputValidationError("diagram births must be finite")
        # canonical order so equal multisets compare equal
        p = p[np.lexsort((p[:, 1], p[:, 0]))] if len(p) else p
        p.setflags(write=False)
        object.__setattr__(self, "pairs", p)

    def __len__(self) -> int:
        return int(self.pairs.shape[0])

    @property
    def births(self) -> np.ndarray:
        return self.pairs[:, 0]

    @property
    def deaths(self) -> np.ndarray:
        return self.pairs[:, 1]

    def n_essential(self) -> int:
        return int(np.isinf(self.deaths).sum())

    def finite_max(self) -> float:
        """Largest finite birth or death (0.0 for an empty diagram)."""
        vals = self.pairs[np.isfinite(self.pairs)]
        return float(vals.max()) if vals.size else 0.0

    def capped(self, cap: float) -> np.ndarray:
        p = self.pairs.copy()
        p[:, 1] = np.minimum(p[:, 1], cap)
        return p

    def persistences(self, cap: float) -> np.ndarray:
        return np.minimum(self.deaths, cap) - self.births

    @classmethod
    def empty(cls, degree: int = 1) -> "PersistenceDiagram":
        return cls(degree, np.zeros((0, 2)))


@dataclass(frozen=True, eq=False)
class Filtration:
    """Simplices in insertion order, faces before cofaces, values nondecreasing."""

    simplices: Tuple[Simplex, ...]
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.simplices)

    @classmethod
    def from_values(cls, items: Iterable[Tuple[Simplex, float]]) -> "Filtration":
        items = sorted(((tuple(sorted(s)), float(v)) for s, v in items), key=lambda x: (x[1], len(x[0]), x[0]))
        vals = np.array([v for _, v in items], dtype=float)
        vals.setflags(write=False)
        return cls(tuple(s for s, _ in items), vals)

    def validate(self) -> None:
        index = {s: i for i, s in enumerate(self.simplices)}
        if np.any(np.diff(self.values) < 0):
            raise InputValidationError("filtration values are not sorted")
        for i, s in enumerate(self.simplices):
            if len(s) > 3:
                raise UnsupportedDegreeError("simplices above dimension 2 are not supported")
            if len(s) == 1:
                continue
            for f in _faces(s):
                j = index.get(f)
                if j is None or j > i:
                    raise InputValidationError(f"face {f} of {s} is missing or comes later")


def _faces(s: Simplex) -> List[Simplex]:
    if len(s) == 2:
        return [(s[0],), (s[1],)]
    return [(s[0], s[1]), (s[0], s[2]), (s[1], s[2])]


# ----------------------------
# Filtrations
# ----------------------------
def _filtration_from_complex(complex_: RipsComplex, vertex_values, edge_values, tri_values) -> Filtration:
    n = complex_.n_vertices
    items: List[Tuple[Simplex, float]] = [((v,), float(vertex_values[v])) for v in range(n)]
    items += [((int(a), int(b)), float(x)) for (a, b), x in zip(complex_.edges, edge_values)]
    items += [((int(a), int(b), int(c)), float(x)) for (a, b, c), x in zip(complex_.triangles, tri_values)]
    return Filtration.from_values(items)


def rips_filtration(distances, r_max: float) -> Filtration:
    """All simplices of diameter <= 2 r_max, valued at diameter / 2."""
    c = build_rips(distances, r_max, max_dim=2)
    return _filtration_from_complex(c, np.zeros(c.n_vertices), c.edge_values, c.triangle_values)


def distance_to_set_filtration(complex_: RipsComplex, seed: Sequence[int], distances) -> Filtration:
    """Sublevel filtration of the fixed complex by distance to ``seed``."""
    seed = np.unique(np.asarray(list(seed) if not isinstance(seed, np.ndarray) else seed, dtype=np.int64))
    if len(seed) == 0:
        raise InputValidationError("seed set is empty")
    d = np.asarray(distances, dtype=float)
    if d.shape != (complex_.n_vertices, complex_.n_vertices):
        raise InputValidationError("distance matrix does not match the complex")
    h = d[:, seed].min(axis=1)
    e, t = complex_.edges, complex_.triangles
    ev = np.maximum(h[e[:, 0]], h[e[:, 1]]) if len(e) else np.zeros(0)
    tv = np.maximum.reduce([h[t[:, 0]], h[t[:, 1]], h[t[:, 2]]]) if len(t) else np.zeros(0)
    return _filtration_from_complex(complex_, h, ev, tv)


# ----------------------------
# Reduction
# ----------------------------
def _pairs_by_degree(filtration: Filtration, max_degree: int) -> Dict[int, List[Tuple[float, float]]]:
    simplices, vals = filtration.simplices, filtration.values
    index = {s: i for i, s in enumerate(simplices)}
    out: Dict[int, List[Tuple[float, float]]] = {0: [], 1: []}

    # Edge columns: a union-find sweep gives the same pairing as reducing them
    # (elder rule, roots are the oldest vertex of each component).
    uf = UnionFind(len(simplices))
    positive: List[int] = []
    for i, s in enumerate(simplices):
        if len(s) != 2:
            continue
        ra, rb = uf.find(index[(s[0],)]), uf.find(index[(s[1],)])
        if ra == rb:
            positive.append(i)
            continue
        younger = max(ra, rb)
        uf.union(ra, rb)
        out[0].append((vals[younger], vals[i]))
    for i, s in enumerate(simplices):
        if len(s) == 1 and uf.find(i) == i:
            out[0].append((vals[i], np.inf))

    if max_degree < 1:
        return out

    # Triangle columns, left to right. Rows of negative edges are dropped
    # (they can never be pivots) and the sweep stops once every cycle is killed.
    positive_set = set(positive)
    unpaired = set(positive)
    pivots: Dict[int, set] = {}
    for i, s in enumerate(simplices):
        if not unpaired:
            break
        if len(s) != 3:
            continue
        col = {j for j in (index[f] for f in _faces(s)) if j in positive_set}
        while col:
            low = max(col)
            other = pivots.get(low)
            if other is None:
                pivots[low] = col
                unpaired.discard(low)
                out[1].append((vals[low], vals[i]))
                break
            col = col ^ other
    for j in sorted(unpaired):
        out[1].append((vals[j], np.inf))
    return out


def compute_persistence(filtration: Filtration, degree: int = 1) -> PersistenceDiagram:
    if degree not in (0, 1):
        raise UnsupportedDegreeError(f"homology degree {degree} is not supported (0 or 1)")
    pairs = _pairs_by_degree(filtration, degree)[degree]
    kept = [(b, d) for b, d in pairs if d > b]
    return PersistenceDiagram(degree, np.array(kept, dtype=float).reshape(-1, 2))


def total_persistence(diagram: PersistenceDiagram, cap: float) -> float:
    if not np.isfinite(cap):
        raise InputValidationError("cap must be finite")
    if len(diagram) == 0:
        return 0.0
    return float(np.sum(diagram.persistences(cap)))


def rips_diagram(distances, degree: int = 1, r_max: Optional[float] = None) -> PersistenceDiagram:
    """Rips persistence of a metric; ``r_max=None`` means the full filtration."""
    return compute_persistence(rips_filtration(distances, np.inf if r_max is None else r_max), degree)
