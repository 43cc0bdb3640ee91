"""Command line entry point.

    python -m src.main build-drg run.yaml
    python -m src.main compare run.yaml out/a.json out/b.json
    python -m src.main experiment run.yaml
    python -m src.main export-features run.yaml out/*.json

Exit codes: 0 ok, 1 invalid input or config, 2 file I/O, 3 numerical failure.
"""

from __future__ import annotations

import functools
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import click
import numpy as np

from .complex import build_rips
from .config import FilterConfig, RunConfig, load_run_config
from .errors import DrgError, InputValidationError, exit_code_for
from .experiments import export_feature_graphs, mds_embed
from .fgw import pairwise_fgw
from .geometry import (
    FilterValues,
    PointCloud,
    coordinate_filter,
    eccentricity_filter,
    graph_geodesic_distances,
    pca_filter,
)
from .jobs.alpha_sweep import alpha_tag, run_experiment
from .reeb import DecoratedReebGraph, build_drg, choose_scale, drg_summary
from .services.storage import (
    load_distance_matrix,
    load_drg,
    load_point_cloud,
    save_drg,
    write_coordinates_csv,
    write_diagram_csv,
    write_feature_graphs,
    write_matrix_csv,
)


# -----------------------
# Helpers
# -----------------------
def _guarded(fn):
    """Turn package errors into a one-line message and the documented exit code."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (DrgError, OSError) as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(exit_code_for(e))

    return wrapper


def _load_cloud(cfg: RunConfig) -> PointCloud:
    if cfg.input is None:
        raise InputValidationError("config has no 'input' section")
    inp = cfg.input
    if inp.points is None:
        return PointCloud(distances=load_distance_matrix(inp.distances))
    return load_point_cloud(inp.points, inp.format, inp.distances)


def make_filter(cloud: PointCloud, fcfg: FilterConfig, m: float = 2) -> FilterValues:
    if fcfg.kind == "coordinate":
        return coordinate_filter(cloud, fcfg.index)
    if fcfg.kind == "pca":
        return pca_filter(cloud, fcfg.index)
    d = cloud.metric()
    if fcfg.metric == "geodesic":
        scale = choose_scale(d, m) or 1.0
        d = graph_geodesic_distances(build_rips(d, scale, max_dim=1), d)
    filt = eccentricity_filter(d, fcfg.p)
    return FilterValues(filt.values, f"{filt.provenance}:{fcfg.metric}")


def _unique_labels(drgs: Sequence[DecoratedReebGraph]) -> List[str]:
    seen: dict = {}
    out = []
    for g in drgs:
        k = seen.get(g.name, 0)
        seen[g.name] = k + 1
        out.append(g.name if k == 0 else f"{g.name}#{k}")
    return out


def _load_drgs(paths: Sequence[str]) -> List[DecoratedReebGraph]:
    drgs = [load_drg(p) for p in paths]
    modes = {g.mode for g in drgs}
    if len(modes) > 1:
        raise InputValidationError(f"cannot mix decoration modes: {sorted(modes)}")
    return drgs


# -----------------------
# Commands
# -----------------------
@click.group()
@click.option("--threads", type=int, default=-1, show_default=True, help="Worker processes; -1 uses every core.")
@click.option("-v", "--verbose", count=True, help="-v info, -vv debug.")
@click.pass_context
def main(ctx: click.Context, threads: int, verbose: int) -> None:
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if threads == 0 or threads < -1:
        raise click.BadParameter("must be -1 or a positive count", param_hint="--threads")
    ctx.obj = {"threads": threads}


@main.command("build-drg")
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None, help="DRG file (default <output_dir>/<name>.json).")
@click.option("--diagrams/--no-diagrams", default=False, help="Also write one diagram CSV per node.")
@click.pass_obj
@_guarded
def build_drg_cmd(obj, config: str, output: Optional[str], diagrams: bool) -> None:
    """Estimate and decorate a Reeb graph from the configured point cloud."""
    cfg = load_run_config(config)
    cloud = _load_cloud(cfg)
    filt = make_filter(cloud, cfg.filter, cfg.drg.m)
    name = cfg.drg.name or (Path(cfg.input.points or cfg.input.distances).stem)
    drg = build_drg(
        cloud,
        filt,
        m=cfg.drg.m,
        n_bins=cfg.drg.n_bins,
        degree=cfg.drg.degree,
        mode=cfg.drg.mode,
        n_jobs=obj["threads"],
        name=name,
    )
    out = Path(output) if output else cfg.output_dir / f"{name}.json"
    save_drg(out, drg)
    if diagrams:
        for node, dgm in zip(drg.skeleton.nodes, drg.diagrams):
            write_diagram_csv(out.parent / f"{name}_node{node.id}.csv", [dgm])
    s = drg_summary(drg, cfg.attributes.cap)
    click.echo(f"{s['name']}: {s['nodes']} nodes | {s['edges']} edges | betti_1={s['betti_1']} | mode={s['mode']}")
    click.echo("total persistence per node: " + " ".join(f"{v:.4g}" for v in s["total_persistence"]))
    if "mean_births" in s:
        click.echo("mean birth per node: " + " ".join(f"{v:.4g}" for v in s["mean_births"]))
    click.echo(f"wrote {out}")


@main.command("compare")
@click.argument("config", type=click.Path(dir_okay=False))
@click.argument("drg_files", nargs=-1, required=True)
@click.pass_obj
@_guarded
def compare_cmd(obj, config: str, drg_files: Sequence[str]) -> None:
    """Pairwise FGW distances between saved DRGs, one matrix per alpha."""
    cfg = load_run_config(config)
    drgs = _load_drgs(drg_files)
    labels = _unique_labels(drgs)
    attrs = cfg.attributes
    for alpha in cfg.compare.alphas:
        d = pairwise_fgw(
            drgs,
            alpha,
            attrs.attr_mode,
            cfg.solver.params(),
            cap=attrs.cap,
            resolution=tuple(attrs.resolution),
            sigma=attrs.sigma,
            n_jobs=obj["threads"],
            attr_weight=attrs.weight,
        )
        tag = alpha_tag(alpha)
        write_matrix_csv(cfg.output_dir / f"distances_alpha_{tag}.csv", d, labels)
        if cfg.compare.mds:
            write_coordinates_csv(cfg.output_dir / f"mds_alpha_{tag}.csv", mds_embed(d, 2), labels)
        off = d[np.triu_indices(len(d), 1)]
        click.echo(f"alpha={tag}: {len(off)} pairs | min={off.min():.6g} | max={off.max():.6g}")
    click.echo(f"wrote {cfg.output_dir}")


@main.command("experiment")
@click.argument("config", type=click.Path(dir_okay=False))
@click.pass_obj
@_guarded
def experiment_cmd(obj, config: str) -> None:
    """Run the synthetic torus/cylinder alpha sweep and write the report bundle."""
    cfg = load_run_config(config)
    report = run_experiment(cfg, n_jobs=obj["threads"])
    for alpha in report.alphas:
        scores = report.separation[alpha]
        pairs = " | ".join(f"{k}={v:.2f}" for k, v in scores.items() if k != "all")
        click.echo(f"alpha={alpha_tag(alpha)}: 1-NN all={scores['all']:.2f} | {pairs}")
    click.echo(f"wrote {cfg.output_dir}")


@main.command("export-features")
@click.argument("config", type=click.Path(dir_okay=False))
@click.argument("drg_files", nargs=-1, required=True)
@_guarded
def export_features_cmd(config: str, drg_files: Sequence[str]) -> None:
    """Vector-attributed graphs (JSON) for external graph learning tools."""
    cfg = load_run_config(config)
    drgs = _load_drgs(drg_files)
    drgs = [g.renamed(label) for g, label in zip(drgs, _unique_labels(drgs))]
    records = export_feature_graphs(drgs, cap=cfg.export.cap, variant=cfg.export.variant)
    out = cfg.output_dir / "features.json"
    write_feature_graphs(out, records)
    click.echo(f"{len(records)} graphs ({cfg.export.variant}) -> {out}")


if __name__ == "__main__":
    main()
