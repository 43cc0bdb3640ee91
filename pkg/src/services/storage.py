"""Every file format the tool reads or writes.

DRG files (JSON, schema "drg/1")::

    {"schema": "drg/1", "name": str, "mode": "local" | "barcode-transform",
     "params": {"scale", "n_bins", "degree", "filter", "m"},
     "bin_edges": [float], "n_points": int,
     "nodes": [{"id", "bin", "mean_filter", "members": [int],
                "centroid": [float] | null, "diagram": [[birth, death], ...]}],
     "edges": [[u, v], ...]}

Deaths equal to +inf are written as the string "inf". Floats are written with
``repr`` so finite values round-trip exactly.

Matrix CSVs carry one header row of identifiers; values use 12 significant digits.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import yaml

from ..errors import InputValidationError, StorageError
from ..geometry import PointCloud, check_distance_matrix
from ..persistence import PersistenceDiagram
from ..reeb import DecoratedReebGraph, DrgParams, ReebNode, ReebSkeleton

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]
DRG_SCHEMA = "drg/1"
FEATURES_SCHEMA = "feature-graphs/1"
FLOAT_FORMAT = "%.12g"


# ----------------------------
# Helpers
# ----------------------------
def _inf_token(x: float) -> Union[float, str]:
    return "inf" if np.isinf(x) else float(x)


def _from_token(x: Union[float, str]) -> float:
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "+inf"):
            return float("inf")
        raise InputValidationError(f"unexpected token '{x}' in diagram")
    return float(x)


def _existing(path: PathLike) -> Path:
    p = Path(path)
    if not p.exists():
        raise StorageError(f"file not found: {p}")
    return p


def _ensure_parent(path: PathLike) -> Path:
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise StorageError(f"cannot create directory {p.parent}: {e}") from e
    return p


def _read_numeric_table(path: PathLike, sep: str, what: str) -> np.ndarray:
    p = _existing(path)
    try:
        df = pd.read_csv(p, header=None, sep=sep, comment="#", engine="python")
    except pd.errors.EmptyDataError:
        raise InputValidationError(f"{what} file {p} is empty")
    except OSError as e:
        raise StorageError(f"cannot read {p}: {e}") from e
    df = df.dropna(axis=1, how="all")
    try:
        arr = df.to_numpy(dtype=float)
    except ValueError as e:
        raise InputValidationError(f"{what} file {p} has non-numeric entries: {e}") from e
    if arr.size == 0:
        raise InputValidationError(f"{what} file {p} is empty")
    if np.isnan(arr).any():
        raise InputValidationError(f"{what} file {p} has missing values")
    return arr


def write_text(path: PathLike, text: str) -> None:
    p = _ensure_parent(path)
    try:
        p.write_text(text, encoding="utf-8")
    except OSError as e:
        raise StorageError(f"cannot write {p}: {e}") from e


# ----------------------------
# Point clouds and metrics
# ----------------------------
def load_point_cloud(path: PathLike, fmt: str = "auto", distances: Optional[PathLike] = None) -> PointCloud:
    """CSV (comma separated) or XYZ (whitespace separated), one point per row."""
    if fmt == "auto":
        fmt = "xyz" if Path(path).suffix.lower() in (".xyz", ".txt") else "csv"
    if fmt not in ("csv", "xyz"):
        raise InputValidationError(f"unknown point format '{fmt}'")
    pts = _read_numeric_table(path, "," if fmt == "csv" else r"\s+", "point cloud")
    d = load_distance_matrix(distances) if distances is not None else None
    logger.info("loaded %d points from %s", len(pts), path)
    return PointCloud(points=pts, distances=d)


def load_distance_matrix(path: PathLike) -> np.ndarray:
    return check_distance_matrix(_read_numeric_table(path, ",", "distance matrix"), name=str(path))


def write_matrix_csv(path: PathLike, matrix: np.ndarray, labels: Sequence[str]) -> None:
    df = pd.DataFrame(np.asarray(matrix, dtype=float), columns=list(labels))
    write_text(path, df.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"))


def read_matrix_csv(path: PathLike) -> pd.DataFrame:
    p = _existing(path)
    return pd.read_csv(p)


def write_coordinates_csv(path: PathLike, coords: np.ndarray, labels: Sequence[str], classes: Optional[Sequence[str]] = None) -> None:
    coords = np.asarray(coords, dtype=float)
    df = pd.DataFrame(coords, columns=[f"x{k}" for k in range(coords.shape[1])])
    df.insert(0, "id", list(labels))
    if classes is not None:
        df.insert(1, "class", list(classes))
    write_text(path, df.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"))


# ----------------------------
# Diagrams
# ----------------------------
def write_diagram_csv(path: PathLike, diagrams: Sequence[PersistenceDiagram]) -> None:
    rows = [(d.degree, float(b), float(x)) for d in diagrams for b, x in d.pairs]
    df = pd.DataFrame(rows, columns=["degree", "birth", "death"])
    write_text(path, df.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"))


def read_diagram_csv(path: PathLike) -> Dict[int, PersistenceDiagram]:
    df = pd.read_csv(_existing(path))
    out: Dict[int, PersistenceDiagram] = {}
    for degree, grp in df.groupby("degree"):
        deaths = [_from_token(x) if isinstance(x, str) else float(x) for x in grp["death"]]
        out[int(degree)] = PersistenceDiagram(int(degree), np.column_stack([grp["birth"].to_numpy(float), deaths]))
    return out


# ----------------------------
# Decorated Reeb graphs
# ----------------------------
def drg_to_dict(drg: DecoratedReebGraph) -> Dict[str, Any]:
    sk = drg.skeleton
    return {
        "schema": DRG_SCHEMA,
        "name": drg.name,
        "mode": drg.mode,
        "params": {
            "scale": drg.params.scale,
            "n_bins": drg.params.n_bins,
            "degree": drg.params.degree,
            "filter": drg.params.filter,
            "m": drg.params.m,
        },
        "n_points": sk.n_points,
        "bin_edges": [float(x) for x in sk.bin_edges],
        "nodes": [
            {
                "id": node.id,
                "bin": node.bin,
                "mean_filter": node.mean_filter,
                "members": [int(x) for x in node.members],
                "centroid": None if node.centroid is None else [float(x) for x in node.centroid],
                "diagram": [[float(b), _inf_token(d)] for b, d in dgm.pairs],
            }
            for node, dgm in zip(sk.nodes, drg.diagrams)
        ],
        "edges": [[u, v] for u, v in sk.edges],
    }


def drg_from_dict(data: Dict[str, Any]) -> DecoratedReebGraph:
    if data.get("schema") != DRG_SCHEMA:
        raise InputValidationError(f"not a {DRG_SCHEMA} document (schema={data.get('schema')!r})")
    try:
        params = DrgParams(**data["params"])
        nodes, diagrams = [], []
        for rec in data["nodes"]:
            centroid = rec.get("centroid")
            nodes.append(
                ReebNode(
                    id=int(rec["id"]),
                    bin=int(rec["bin"]),
                    members=np.asarray(rec["members"], dtype=np.int64),
                    mean_filter=float(rec["mean_filter"]),
                    centroid=None if centroid is None else np.asarray(centroid, dtype=float),
                )
            )
            pairs = [[float(b), _from_token(d)] for b, d in rec["diagram"]]
            diagrams.append(PersistenceDiagram(params.degree, np.array(pairs, dtype=float).reshape(-1, 2)))
        skeleton = ReebSkeleton(
            nodes=tuple(nodes),
            edges=tuple((int(u), int(v)) for u, v in data["edges"]),
            bin_edges=np.asarray(data["bin_edges"], dtype=float),
            scale=float(params.scale),
            n_points=int(data["n_points"]),
        )
        return DecoratedReebGraph(skeleton, tuple(diagrams), data["mode"], params, name=data.get("name", "drg"))
    except (KeyError, TypeError) as e:
        raise InputValidationError(f"malformed DRG document: {e}") from e


def save_drg(path: PathLike, drg: DecoratedReebGraph) -> None:
    write_text(path, json.dumps(drg_to_dict(drg), indent=1, sort_keys=True) + "\n")


def load_drg(path: PathLike) -> DecoratedReebGraph:
    p = _existing(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise InputValidationError(f"{p} is not valid JSON: {e}") from e
    return drg_from_dict(data)


# ----------------------------
# Feature graphs, manifests
# ----------------------------
def write_feature_graphs(path: PathLike, records: List[Dict[str, Any]]) -> None:
    doc = {"schema": FEATURES_SCHEMA, "graphs": records}
    write_text(path, json.dumps(doc, indent=1, sort_keys=True) + "\n")


def read_feature_graphs(path: PathLike) -> List[Dict[str, Any]]:
    data = json.loads(_existing(path).read_text(encoding="utf-8"))
    if data.get("schema") != FEATURES_SCHEMA:
        raise InputValidationError(f"not a {FEATURES_SCHEMA} document")
    return data["graphs"]


def write_yaml(path: PathLike, data: Dict[str, Any]) -> None:
    write_text(path, yaml.safe_dump(data, sort_keys=True, default_flow_style=False))


def read_yaml(path: PathLike) -> Any:
    p = _existing(path)
    try:
        return yaml.safe_load(p.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise InputValidationError(f"{p} is not valid YAML: {e}") from e
