"""Run configuration, loaded from one YAML file per invocation.

Example::

    output_dir: out/circle
    input: {points: data/circle.csv}
    filter: {kind: coordinate, index: 1}
    drg: {mode: local, m: 2, n_bins: 3, degree: 1}
    compare: {alphas: [0.0, 0.5, 1.0], mds: true}
    attributes: {attr_mode: image, resolution: [20, 20]}
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, model_validator

from .errors import ConfigError, InputValidationError
from .experiments import SHAPE_KINDS, FeatureVariant, PipelineParams, ShapeKind, ShapeSpec
from .fgw import SolverParams
from .services.storage import read_yaml


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class InputConfig(_Section):
    points: Optional[Path] = None
    distances: Optional[Path] = None
    format: Literal["auto", "csv", "xyz"] = "auto"

    @model_validator(mode="after")
    def _needs_something(self) -> "InputConfig":
        if self.points is None and self.distances is None:
            raise ValueError("input needs 'points' or 'distances'")
        return self


class FilterConfig(_Section):
    kind: Literal["coordinate", "pca", "eccentricity"] = "pca"
    index: int = Field(0, ge=0)
    p: float = Field(100.0, ge=1)
    metric: Literal["ambient", "geodesic"] = "ambient"


class DrgConfig(_Section):
    mode: Literal["local", "barcode-transform"] = "local"
    m: float = Field(2.0, ge=1)
    n_bins: PositiveInt = 10
    degree: Literal[0, 1] = 1
    name: Optional[str] = None


class AttributeConfig(_Section):
    attr_mode: Literal["bottleneck", "image", "stats"] = "image"
    cap: Optional[PositiveFloat] = None
    sigma: Optional[PositiveFloat] = None
    resolution: Tuple[PositiveInt, PositiveInt] = (20, 20)
    weight: PositiveFloat = 1.0


class SolverConfig(_Section):
    max_iter: PositiveInt = 200
    tol: PositiveFloat = 1e-9
    n_starts: PositiveInt = 1
    seed: int = 0

    def params(self) -> SolverParams:
        return SolverParams(max_iter=self.max_iter, tol=self.tol, n_starts=self.n_starts, seed=self.seed)


class CompareConfig(_Section):
    alphas: List[float] = Field(default_factory=lambda: [0.5], min_length=1)
    mds: bool = True

    @model_validator(mode="after")
    def _alpha_range(self) -> "CompareConfig":
        bad = [a for a in self.alphas if not 0.0 <= a <= 1.0]
        if bad:
            raise ValueError(f"alphas must lie in [0, 1], got {bad}")
        return self


class ExperimentConfig(_Section):
    classes: List[ShapeKind] = Field(default_factory=lambda: list(SHAPE_KINDS), min_length=2)
    samples_per_class: PositiveInt = 5
    points: Dict[ShapeKind, PositiveInt] = Field(
        default_factory=lambda: {"torus": 200, "solid-torus": 800, "cylinder": 200, "solid-cylinder": 800}
    )
    minor_radius: PositiveFloat = 1.0
    major_radius: PositiveFloat = 6.0
    cylinder_radius: PositiveFloat = 1.0
    length: PositiveFloat = 2 * math.pi * 7
    noise: float = Field(0.05, ge=0)
    rotate: bool = True
    seed: int = 0
    alphas: List[float] = Field(default_factory=lambda: [0.0, 0.25, 0.5, 1.0], min_length=1)
    pca_component: int = Field(0, ge=0)
    # pilot: 5 per class, 200/800 points, 10 bins, m = 2, 20x20 images
    attr_weight: PositiveFloat = 3.0

    @model_validator(mode="after")
    def _check(self) -> "ExperimentConfig":
        if len(set(self.classes)) < 2:
            raise ValueError("experiment needs at least two distinct classes")
        missing = [c for c in self.classes if c not in self.points]
        if missing:
            raise ValueError(f"no point count given for classes {missing}")
        bad = [a for a in self.alphas if not 0.0 <= a <= 1.0]
        if bad:
            raise ValueError(f"alphas must lie in [0, 1], got {bad}")
        return self

    def shape_specs(self) -> List[ShapeSpec]:
        """One spec per sample; seeds are consecutive from ``seed`` so every shape differs."""
        specs = []
        for c, kind in enumerate(self.classes):
            for k in range(self.samples_per_class):
                specs.append(
                    ShapeSpec(
                        kind=kind,
                        n_points=self.points[kind],
                        minor_radius=self.minor_radius,
                        major_radius=self.major_radius,
                        cylinder_radius=self.cylinder_radius,
                        length=self.length,
                        noise=self.noise,
                        rotate=self.rotate,
                        seed=self.seed + c * self.samples_per_class + k,
                    )
                )
        return specs


class ExportConfig(_Section):
    variant: FeatureVariant = "drg"
    cap: Optional[PositiveFloat] = None


class RunConfig(_Section):
    output_dir: Path = Path("out")
    input: Optional[InputConfig] = None
    filter: FilterConfig = FilterConfig()
    drg: DrgConfig = DrgConfig()
    attributes: AttributeConfig = AttributeConfig()
    solver: SolverConfig = SolverConfig()
    compare: CompareConfig = CompareConfig()
    experiment: ExperimentConfig = ExperimentConfig()
    export: ExportConfig = ExportConfig()

    def pipeline(self) -> PipelineParams:
        return PipelineParams(
            m=self.drg.m,
            n_bins=self.drg.n_bins,
            degree=self.drg.degree,
            pca_component=self.experiment.pca_component,
            attr_mode=self.attributes.attr_mode,
            resolution=tuple(self.attributes.resolution),
            sigma=self.attributes.sigma,
            cap=self.attributes.cap,
            attr_weight=self.experiment.attr_weight,
            solver=self.solver.params(),
        )


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def parse_run_config(data: Any, source: str = "<config>") -> RunConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{source}: {_format_errors(e)}") from e


def load_run_config(path) -> RunConfig:
    try:
        data = read_yaml(path)
    except InputValidationError as e:
        raise ConfigError(str(e)) from e
    cfg = parse_run_config(data, str(path))
    # relative input paths are resolved against the config file
    base = Path(path).resolve().parent
    if cfg.input is not None:
        updates: Dict[str, Any] = {}
        for key in ("points", "distances"):
            p = getattr(cfg.input, key)
            if p is not None and not p.is_absolute():
                updates[key] = base / p
        if updates:
            cfg = cfg.model_copy(update={"input": cfg.input.model_copy(update=updates)})
    return cfg
