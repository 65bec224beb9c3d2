"""Run configuration: pydantic models for the JSON config file and builders.

A config names one algebra, one spray and exactly one task; everything else
has defaults. ``--set a.b.c=value`` overrides are applied to the raw JSON
tree before validation. Indices in config files are 1-based.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Any, Iterable, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from spraylab.curves import CurveSpec
from spraylab.differentiation import Differentiation
from spraylab.errors import (
    ConfigError,
    DimensionError,
    InvalidAlgebraError,
    UnknownCatalogEntryError,
)
from spraylab.integrators import IntegratorConfig, IntegratorMethod
from spraylab.lie_algebra import LieAlgebra, catalog
from spraylab.spray_model import (
    DEFAULT_Y_FLOOR,
    CustomSpray,
    Monomial,
    QuadraticSpray,
    RandersSpray,
    RiemannianSpray,
    SprayField,
    ZeroSpray,
)

log = logging.getLogger(__name__)


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ── Algebra ──────────────────────────────────────────────────────────


class BracketEntry(_Block):
    i: int = Field(ge=1)
    j: int = Field(ge=1)
    coeffs: dict[int, float]


class AlgebraBlock(_Block):
    catalog: Optional[str] = None
    dimension: Optional[int] = Field(default=None, ge=1)
    brackets: list[BracketEntry] = []
    labels: list[str] = []

    @model_validator(mode="after")
    def _one_source(self) -> "AlgebraBlock":
        if (self.catalog is None) == (self.dimension is None):
            raise ValueError("give either a catalog name or a dimension with brackets")
        if self.catalog is not None and self.brackets:
            raise ValueError("brackets cannot be combined with a catalog algebra")
        return self


# ── Spray ────────────────────────────────────────────────────────────


class _SprayBase(_Block):
    y_scale: Optional[float] = Field(default=None, gt=0.0)


class ZeroSprayBlock(_SprayBase):
    type: Literal["zero"] = "zero"


class RiemannianSprayBlock(_SprayBase):
    type: Literal["riemannian"]
    metric: list[list[float]]


class RandersSprayBlock(_SprayBase):
    type: Literal["randers"]
    metric: list[list[float]]
    beta: list[float]


class QuadraticEntry(_Block):
    i: int = Field(ge=1)
    j: int = Field(ge=1)
    k: int = Field(ge=1)
    value: float


class QuadraticSprayBlock(_SprayBase):
    type: Literal["quadratic"]
    coeffs: list[QuadraticEntry]


class MonomialEntry(_Block):
    exponents: list[int]
    target: int = Field(ge=1)
    coefficient: float = 1.0


class DenominatorEntry(_Block):
    exponents: list[int]
    coefficient: float = 1.0


class CustomSprayBlock(_SprayBase):
    type: Literal["custom"]
    polynomial: list[MonomialEntry]
    denominator: list[DenominatorEntry] = []
    differentiation: Literal["dual", "finite_difference"] = "dual"


SprayBlock = Annotated[
    Union[ZeroSprayBlock, RiemannianSprayBlock, RandersSprayBlock, QuadraticSprayBlock, CustomSprayBlock],
    Field(discriminator="type"),
]


# ── Curves ───────────────────────────────────────────────────────────


class Leg(_Block):
    w: list[float]
    dt: float = Field(gt=0.0)


class ConstantCurveBlock(_Block):
    type: Literal["constant"]
    w: list[float]


class PiecewiseCurveBlock(_Block):
    type: Literal["piecewise"]
    legs: list[Leg] = Field(min_length=1)


class TableCurveBlock(_Block):
    type: Literal["table"]
    times: list[float] = Field(min_length=2)
    values: list[list[float]]


class ExpressionCurveBlock(_Block):
    type: Literal["expression"]
    components: list[str]


CurveBlock = Annotated[
    Union[ConstantCurveBlock, PiecewiseCurveBlock, TableCurveBlock, ExpressionCurveBlock],
    Field(discriminator="type"),
]


# ── Tasks ────────────────────────────────────────────────────────────


class GeodesicTask(_Block):
    type: Literal["geodesic"]
    y0: list[float]
    t_span: tuple[float, float]


class LinearTransportTask(_Block):
    """w0 transported along the geodesic through y0, or along ``curve`` as y(t)."""

    type: Literal["transport-linear"]
    w0: list[float]
    t_span: Optional[tuple[float, float]] = None
    y0: Optional[list[float]] = None
    curve: Optional[CurveBlock] = None

    @model_validator(mode="after")
    def _one_path(self) -> "LinearTransportTask":
        if (self.y0 is None) == (self.curve is None):
            raise ValueError("give either y0 (geodesic) or curve for y(t)")
        if self.y0 is not None and self.t_span is None:
            raise ValueError("a geodesic path needs t_span")
        return self


class NonlinearTransportTask(_Block):
    type: Literal["transport-nonlinear"]
    curve: CurveBlock
    y0: list[float]
    t_span: Optional[tuple[float, float]] = None


class OneParamFlowTask(_Block):
    type: Literal["one-param-flow"]
    w: list[float]
    t: float
    y0: list[float]


class CurvatureTask(_Block):
    type: Literal["curvature"]
    y: list[float]
    w: list[float]
    transport: bool = True
    t_probe: float = 0.0
    fd_step: float = Field(default=1e-4, gt=0.0)


class FlagTask(_Block):
    type: Literal["flag"]
    y: list[float]
    w: list[float]


class SCurvatureTask(_Block):
    type: Literal["s-curvature"]
    y: list[float]


class LandsbergTask(_Block):
    type: Literal["landsberg"]
    y: list[float]
    w: list[float]
    transport: bool = True
    fd_step: float = Field(default=1e-3, gt=0.0)


class HolonomyDimTask(_Block):
    type: Literal["holonomy-dim"]
    max_depth: int = Field(default=4, ge=1, le=5)
    n_samples: int = Field(default=8, ge=1)
    svd_tol: float = Field(default=1e-8, gt=0.0)
    word_cap: int = Field(default=2000, ge=1)


class LoopDefectTask(_Block):
    type: Literal["loop-defect"]
    w1: list[float]
    w2: list[float]
    y0: list[float]
    scales: list[float] = Field(default=[0.2, 0.1, 0.05], min_length=2)

    @model_validator(mode="after")
    def _positive_scales(self) -> "LoopDefectTask":
        if any(s <= 0.0 for s in self.scales):
            raise ValueError("loop scales must be positive")
        return self


class ReconstructTask(_Block):
    type: Literal["reconstruct"]
    y0: list[float]
    t_span: tuple[float, float]
    rep: Optional[str] = None
    g0_word: list[Leg] = []


class VerifyTask(_Block):
    type: Literal["verify"]
    suites: Optional[list[str]] = None
    n_random: int = Field(default=5, ge=1)


TaskBlock = Annotated[
    Union[
        GeodesicTask,
        LinearTransportTask,
        NonlinearTransportTask,
        OneParamFlowTask,
        CurvatureTask,
        FlagTask,
        SCurvatureTask,
        LandsbergTask,
        HolonomyDimTask,
        LoopDefectTask,
        ReconstructTask,
        VerifyTask,
    ],
    Field(discriminator="type"),
]

# ── Integrator / output / root ───────────────────────────────────────


class IntegratorBlock(_Block):
    method: Literal["rk4_fixed", "dopri_adaptive"] = "dopri_adaptive"
    step: float = Field(default=1e-2, gt=0.0)
    abs_tol: float = Field(default=1e-10, gt=0.0)
    rel_tol: float = Field(default=1e-10, gt=0.0)
    max_steps: int = Field(default=200_000, ge=1)
    max_step: Optional[float] = Field(default=None, gt=0.0)


class OutputBlock(_Block):
    format: Optional[Literal["csv", "json"]] = None
    path: Optional[str] = None
    precision: int = Field(default=17, ge=1, le=17)


class RunConfig(_Block):
    algebra: AlgebraBlock
    spray: SprayBlock = Field(default_factory=ZeroSprayBlock)
    task: TaskBlock
    integrator: IntegratorBlock = Field(default_factory=IntegratorBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)
    seed: int = Field(default=0, ge=0)


@dataclass(frozen=True)
class LoadedConfig:
    config: RunConfig
    raw: dict[str, Any]
    config_hash: str
    source: str = ""


# ── Loading ──────────────────────────────────────────────────────────


def parse_override(text: str) -> tuple[list[str], Any]:
    """``a.b.1=value`` → (["a", "b", "1"], parsed value)."""
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override {text!r} is not of the form key.path=value", "--set")
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    return key.strip().split("."), parsed


def apply_override(tree: dict[str, Any], path: list[str], value: Any) -> None:
    node: Any = tree
    dotted = ".".join(path)
    for depth, part in enumerate(path):
        last = depth == len(path) - 1
        if isinstance(node, list):
            try:
                index = int(part)
                if last:
                    node[index] = value
                else:
                    node = node[index]
            except (ValueError, IndexError):
                raise ConfigError(f"no list element {part!r}", dotted) from None
        elif isinstance(node, dict):
            if last:
                node[part] = value
            else:
                node = node.setdefault(part, {})
        else:
            raise ConfigError(f"cannot descend into a {type(node).__name__}", dotted)


def config_hash(raw: dict[str, Any]) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _field_path(loc: Iterable[Any]) -> str:
    return ".".join(str(part) for part in loc)


def validate_config(raw: dict[str, Any], source: str = "") -> LoadedConfig:
    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as exc:
        errors = exc.errors()
        first = errors[0]
        details = "; ".join(f"{_field_path(e['loc']) or '<root>'}: {e['msg']}" for e in errors)
        raise ConfigError(details, _field_path(first["loc"])) from None
    check_dimensions(config)
    return LoadedConfig(config, raw, config_hash(raw), source)


def load_config(
    path: str | Path,
    overrides: Iterable[str] = (),
    force_task: str | None = None,
) -> LoadedConfig:
    """Read, override and validate a config; ``force_task`` replaces a different task block."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"invalid JSON in {path} at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    for override in overrides:
        keys, value = parse_override(override)
        apply_override(raw, keys, value)
    if force_task is not None:
        task = raw.get("task")
        if not (isinstance(task, dict) and task.get("type") == force_task):
            raw["task"] = {"type": force_task}
    loaded = validate_config(raw, str(path))
    log.info("loaded %s task from %s (hash %s)", loaded.config.task.type, path, loaded.config_hash[:12])
    return loaded


# ── Dimension checks ─────────────────────────────────────────────────


def _check_length(values: Any, n: int, where: str) -> None:
    if values is not None and len(values) != n:
        raise ConfigError(f"expected {n} components, got {len(values)}", where)


def _check_curve(curve: Any, n: int, where: str) -> None:
    if curve is None:
        return
    if isinstance(curve, ConstantCurveBlock):
        _check_length(curve.w, n, f"{where}.w")
    elif isinstance(curve, PiecewiseCurveBlock):
        for k, leg in enumerate(curve.legs):
            _check_length(leg.w, n, f"{where}.legs.{k}.w")
    elif isinstance(curve, TableCurveBlock):
        if len(curve.values) != len(curve.times):
            raise ConfigError(
                f"{len(curve.values)} value rows for {len(curve.times)} times", f"{where}.values"
            )
        for k, row in enumerate(curve.values):
            _check_length(row, n, f"{where}.values.{k}")
    elif isinstance(curve, ExpressionCurveBlock):
        _check_length(curve.components, n, f"{where}.components")


def _check_span(task: Any) -> None:
    curve = getattr(task, "curve", None)
    if isinstance(curve, (ConstantCurveBlock, ExpressionCurveBlock)) and task.t_span is None:
        raise ConfigError(f"a {curve.type} curve has no natural span to integrate over", "task.t_span")


def algebra_dimension(block: AlgebraBlock) -> int:
    if block.dimension is not None:
        return block.dimension
    try:
        return catalog(block.catalog).dim
    except UnknownCatalogEntryError as exc:
        raise ConfigError(str(exc), "algebra.catalog") from None


def check_dimensions(config: RunConfig) -> None:
    n = algebra_dimension(config.algebra)
    task = config.task
    for name in ("y0", "w0", "y", "w", "w1", "w2"):
        if isinstance(getattr(task, name, None), list):
            _check_length(getattr(task, name), n, f"task.{name}")
    _check_curve(getattr(task, "curve", None), n, "task.curve")
    _check_span(task)
    for k, leg in enumerate(getattr(task, "g0_word", [])):
        _check_length(leg.w, n, f"task.g0_word.{k}.w")


# ── Builders ─────────────────────────────────────────────────────────


def build_algebra(block: AlgebraBlock) -> LieAlgebra:
    try:
        if block.catalog is not None:
            return catalog(block.catalog)
        brackets = [(b.i, b.j, b.coeffs) for b in block.brackets]
        return LieAlgebra.from_brackets(block.dimension, brackets, block.labels, name="custom")
    except UnknownCatalogEntryError as exc:
        raise ConfigError(str(exc), "algebra.catalog") from None
    except InvalidAlgebraError as exc:
        raise ConfigError(str(exc), "algebra.brackets") from None


def task_scale(task: Any) -> float:
    """Norm of the task's initial vector, 1 when it has none."""
    for name in ("y0", "y"):
        value = getattr(task, name, None)
        if isinstance(value, list):
            norm = float(np.linalg.norm(value))
            if norm > 0.0:
                return norm
    return 1.0


def build_spray(block: Any, algebra: LieAlgebra, scale: float = 1.0) -> SprayField:
    scale = block.y_scale if block.y_scale is not None else scale
    kwargs: dict[str, Any] = {"y_floor": DEFAULT_Y_FLOOR * scale}
    n = algebra.dim
    try:
        if isinstance(block, ZeroSprayBlock):
            return ZeroSpray(algebra, **kwargs)
        if isinstance(block, RiemannianSprayBlock):
            return RiemannianSpray(algebra, block.metric, **kwargs)
        if isinstance(block, RandersSprayBlock):
            return RandersSpray(algebra, block.metric, block.beta, **kwargs)
        if isinstance(block, QuadraticSprayBlock):
            t = np.zeros((n, n, n))
            for entry in block.coeffs:
                t[entry.i - 1, entry.j - 1, entry.k - 1] += entry.value
            return QuadraticSpray(algebra, t, **kwargs)
        terms = [Monomial(tuple(m.exponents), m.coefficient, m.target - 1) for m in block.polynomial]
        denominator = [Monomial(tuple(m.exponents), m.coefficient) for m in block.denominator]
        return CustomSpray(
            algebra,
            terms=terms,
            denominator=denominator,
            differentiation=Differentiation(block.differentiation),
            **kwargs,
        )
    except IndexError:
        raise ConfigError(f"spray index outside 1..{n}", "spray.coeffs") from None
    except ValueError as exc:
        raise ConfigError(str(exc), "spray") from None


def build_integrator(block: IntegratorBlock) -> IntegratorConfig:
    return IntegratorConfig(
        method=IntegratorMethod(block.method),
        step=block.step,
        abs_tol=block.abs_tol,
        rel_tol=block.rel_tol,
        max_steps=block.max_steps,
        max_step=block.max_step,
    )


def build_curve(block: Any) -> CurveSpec:
    try:
        if isinstance(block, ConstantCurveBlock):
            return CurveSpec.constant(block.w)
        if isinstance(block, PiecewiseCurveBlock):
            return CurveSpec.piecewise([(leg.w, leg.dt) for leg in block.legs])
        if isinstance(block, TableCurveBlock):
            return CurveSpec.table(block.times, block.values)
        return CurveSpec.expression(block.components)
    except (DimensionError, ValueError) as exc:
        raise ConfigError(str(exc), "task.curve") from None


def legs(entries: Iterable[Leg]) -> list[tuple[np.ndarray, float]]:
    return [(np.asarray(leg.w, dtype=float), leg.dt) for leg in entries]
