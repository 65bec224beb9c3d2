"""Command-line front end.

    spraylab run <config.json> [--set key.path=value]... [-v]
    spraylab verify <config.json> [--set ...]
    spraylab catalog

Exit status: 0 on success, 2 for anything wrong with the config, 3 for
numerical failures (a ``.status.json`` file next to the artifact says which).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from spraylab import __version__, curvature, holonomy, transport
from spraylab.config import (
    LoadedConfig,
    RunConfig,
    build_algebra,
    build_curve,
    build_integrator,
    build_spray,
    legs,
    load_config,
    task_scale,
)
from spraylab.emit import Provenance, save_csv, save_json, write_status
from spraylab.errors import (
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_VALIDATION,
    ConfigError,
    DomainExitError,
    IntegrationError,
    SprayLabError,
)
from spraylab.group_curves import (
    REP_NAMES,
    catalog_rep,
    left_invariance_check,
    reconstruct_curve,
    verify_rep,
)
from spraylab.integrators import IntegrationStatus, IntegratorConfig, Trajectory, TrajectoryKind
from spraylab.lie_algebra import CATALOG_NAMES, LieAlgebra, catalog
from spraylab.spray_model import SprayField
from spraylab.verification import run_suites

log = logging.getLogger(__name__)

LOG_FORMAT = "[%(name)s] %(levelname)s %(message)s"
LOG_LEVEL_ENV = "SPRAYLAB_LOG_LEVEL"

TABLE_TASKS = frozenset(
    {"geodesic", "transport-linear", "transport-nonlinear", "loop-defect", "reconstruct"}
)


@dataclass
class TaskResult:
    """Either a table (header + rows) or a JSON document, plus run status."""

    header: list[str] | None = None
    rows: np.ndarray | None = None
    document: dict[str, Any] | None = None
    status: str = "ok"
    exit_code: int = EXIT_OK
    message: str = ""
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass
class RunContext:
    config: RunConfig
    algebra: LieAlgebra
    spray: SprayField
    integrator: IntegratorConfig

    @property
    def task(self) -> Any:
        return self.config.task


# ── Task handlers ────────────────────────────────────────────────────


def _trajectory_table(traj: Trajectory, prefix: str) -> tuple[list[str], np.ndarray]:
    n = traj.states.shape[1]
    header = ["t"] + [f"{prefix}{i + 1}" for i in range(n)]
    return header, np.column_stack([traj.times, traj.states])


def _trajectory_result(traj: Trajectory, prefix: str, extra: dict[str, Any] | None = None) -> TaskResult:
    header, rows = _trajectory_table(traj, prefix)
    result = TaskResult(header, rows, extra=dict(extra or {}))
    result.extra["terminus"] = traj.terminus
    if traj.status is IntegrationStatus.DOMAIN_EXIT:
        result.status, result.exit_code, result.message = "domain_exit", EXIT_NUMERICAL, traj.message
    return result


def _geodesic(ctx: RunContext) -> TaskResult:
    task = ctx.task
    traj = transport.geodesic_flow(ctx.spray, task.y0, task.t_span, ctx.integrator)
    extra = {}
    if ctx.spray.is_metric and len(traj) > 0:
        norms = np.array([ctx.spray.finsler_norm(y) for y in traj.states])
        extra["finsler_norm_drift"] = float(np.max(np.abs(norms - norms[0])) / norms[0])
    return _trajectory_result(traj, "y", extra)


def _transport_linear(ctx: RunContext) -> TaskResult:
    task = ctx.task
    if task.curve is not None:
        path = build_curve(task.curve)
        traj = transport.linear_transport(ctx.spray, path, task.w0, ctx.integrator, task.t_span)
        return _trajectory_result(traj, "w")
    geodesic = transport.geodesic_flow(ctx.spray, task.y0, task.t_span, ctx.integrator)
    if geodesic.status is IntegrationStatus.DOMAIN_EXIT:
        return _trajectory_result(geodesic, "y")
    traj = transport.linear_transport(ctx.spray, geodesic, task.w0, ctx.integrator)
    return _trajectory_result(traj, "w")


def _transport_nonlinear(ctx: RunContext) -> TaskResult:
    task = ctx.task
    curve = build_curve(task.curve)
    traj = transport.nonlinear_transport(ctx.spray, curve, task.y0, task.t_span, ctx.integrator)
    return _trajectory_result(traj, "y")


def _one_param_flow(ctx: RunContext) -> TaskResult:
    task = ctx.task
    y = transport.one_param_flow(ctx.spray, task.w, task.t, task.y0, ctx.integrator)
    return TaskResult(document={"w": task.w, "t": task.t, "y0": task.y0, "y": y})


def _curvature(ctx: RunContext) -> TaskResult:
    task = ctx.task
    if not task.transport:
        return TaskResult(document=curvature.curvature_report(ctx.spray, task.y, task.w).to_dict())
    via_transport = curvature.riemann_via_transport(
        ctx.spray, task.y, task.w, task.t_probe, ctx.integrator, task.fd_step
    )
    document = curvature.curvature_report(ctx.spray, via_transport.y, via_transport.w).to_dict()
    document["residual_vs_transport"] = via_transport.residual_vs_transport
    document["R_transport"] = via_transport.R
    if task.t_probe:
        document["t_probe"] = task.t_probe
    return TaskResult(document=document)


def _flag(ctx: RunContext) -> TaskResult:
    task = ctx.task
    r = curvature.riemann(ctx.spray, task.y, task.w)
    k = curvature.flag_curvature(ctx.spray, task.y, task.w)
    return TaskResult(document={"y": task.y, "w": task.w, "R": r, "flag": k})


def _s_curvature(ctx: RunContext) -> TaskResult:
    task = ctx.task
    return TaskResult(document={"y": task.y, "S": curvature.s_curvature(ctx.spray, task.y)})


def _landsberg(ctx: RunContext) -> TaskResult:
    task = ctx.task
    value = curvature.landsberg(ctx.spray, task.y, task.w)
    document: dict[str, Any] = {"y": task.y, "w": task.w, "L": value}
    if task.transport:
        other = curvature.landsberg_via_transport(
            ctx.spray, task.y, task.w, ctx.integrator, task.fd_step
        )
        document["L_transport"] = other
        document["residual_vs_transport"] = abs(other - value)
    return TaskResult(document=document)


def _holonomy_dim(ctx: RunContext) -> TaskResult:
    task = ctx.task
    profile = holonomy.rank_profile(
        ctx.spray,
        task.max_depth,
        task.n_samples,
        task.svd_tol,
        ctx.config.seed,
        task.word_cap,
    )
    document = {
        "label": holonomy.RANK_LABEL,
        "depths": [e.depth_used for e in profile],
        "ranks": [e.rank for e in profile],
        "words_evaluated": [e.words_evaluated for e in profile],
        "singular_values": [e.singular_values for e in profile],
        "sample_points": profile[-1].sample_points,
        "seed": ctx.config.seed,
        "svd_tol": task.svd_tol,
        "n_samples": task.n_samples,
    }
    return TaskResult(document=document)


def _loop_defect(ctx: RunContext) -> TaskResult:
    task = ctx.task
    report = holonomy.loop_defect_ladder(
        ctx.spray, task.w1, task.w2, task.y0, task.scales, ctx.integrator
    )
    header, rows = report.table()
    return TaskResult(
        header,
        rows,
        document=report.to_dict(),
        extra={"slope": report.slope, "alignment": report.alignment},
    )


def _reconstruct(ctx: RunContext) -> TaskResult:
    task = ctx.task
    name = task.rep or ctx.algebra.name
    try:
        rep = catalog_rep(name)
    except SprayLabError as exc:
        raise ConfigError(str(exc), "task.rep") from None
    if rep.dim != ctx.algebra.dim:
        raise ConfigError(
            f"representation {name} has {rep.dim} generators, algebra has dimension {ctx.algebra.dim}",
            "task.rep",
        )
    geodesic = transport.geodesic_flow(ctx.spray, task.y0, task.t_span, ctx.integrator)
    if geodesic.status is IntegrationStatus.DOMAIN_EXIT:
        return _trajectory_result(geodesic, "y")
    curve = reconstruct_curve(rep, geodesic, ctx.integrator)
    header, rows = curve.table()
    extra: dict[str, Any] = {
        "rep": rep.name,
        "rep_residual": verify_rep(ctx.algebra, rep),
        "unitarity_defect": curve.unitarity_defect(),
        "determinant_defect": curve.determinant_defect(),
    }
    if task.g0_word:
        extra["left_invariance_residual"] = left_invariance_check(
            rep, ctx.spray, task.y0, legs(task.g0_word), task.t_span, ctx.integrator
        )
    return TaskResult(header, rows, extra=extra)


def _verify(ctx: RunContext) -> TaskResult:
    task = ctx.task
    report = run_suites(ctx.spray, task.suites, task.n_random, ctx.config.seed, ctx.integrator)
    result = TaskResult(document=report.to_dict())
    if not report.passed:
        result.status = "fail"
        result.exit_code = EXIT_NUMERICAL
        result.message = f"failing suites: {', '.join(report.failures)}"
    return result


TASKS: dict[str, Callable[[RunContext], TaskResult]] = {
    "geodesic": _geodesic,
    "transport-linear": _transport_linear,
    "transport-nonlinear": _transport_nonlinear,
    "one-param-flow": _one_param_flow,
    "curvature": _curvature,
    "flag": _flag,
    "s-curvature": _s_curvature,
    "landsberg": _landsberg,
    "holonomy-dim": _holonomy_dim,
    "loop-defect": _loop_defect,
    "reconstruct": _reconstruct,
    "verify": _verify,
}


# ── Running ──────────────────────────────────────────────────────────


def output_format(config: RunConfig) -> str:
    if config.output.format is not None:
        return config.output.format
    return "csv" if config.task.type in TABLE_TASKS else "json"


def artifact_path(config: RunConfig) -> Path:
    if config.output.path:
        return Path(config.output.path)
    return Path(f"{config.task.type}.{output_format(config)}")


def _emit(result: TaskResult, config: RunConfig, provenance: Provenance, path: Path) -> None:
    fmt, precision = output_format(config), config.output.precision
    if fmt == "csv":
        if result.header is None:
            raise ConfigError(f"task {config.task.type} produces a JSON document, not a table", "output.format")
        save_csv(path, result.header, result.rows, provenance, precision)
        return
    if result.document is not None:
        document = dict(result.document)
    else:
        document = {"columns": result.header, "rows": result.rows}
    if result.extra:
        document.update(result.extra)
    save_json(path, document, provenance, precision)


def execute(loaded: LoadedConfig) -> int:
    config = loaded.config
    provenance = Provenance(loaded.config_hash, config.seed, config.task.type)
    path = artifact_path(config)
    try:
        algebra = build_algebra(config.algebra)
        spray = build_spray(config.spray, algebra, task_scale(config.task))
        ctx = RunContext(config, algebra, spray, build_integrator(config.integrator))
        result = TASKS[config.task.type](ctx)
        _emit(result, config, provenance, path)
    except IntegrationError as exc:
        log.error("%s", exc)
        extra = {}
        if isinstance(exc.partial, Trajectory):
            prefix = "w" if exc.partial.kind is TrajectoryKind.LINEAR_PARALLEL else "y"
            header, rows = _trajectory_table(exc.partial, prefix)
            # partial trajectories are always tables
            partial_path = path if path.suffix == ".csv" else path.with_suffix(".partial.csv")
            save_csv(partial_path, header, rows, provenance, config.output.precision)
            extra["partial"] = str(partial_path)
        status = "domain_exit" if isinstance(exc, DomainExitError) else "failed"
        write_status(path, status, exc.exit_code, provenance, str(exc), extra=extra)
        return exc.exit_code
    except SprayLabError as exc:
        log.error("%s", exc)
        write_status(path, "error", exc.exit_code, provenance, str(exc), getattr(exc, "field_path", ""))
        return exc.exit_code
    write_status(path, result.status, result.exit_code, provenance, result.message, extra=result.extra)
    if result.exit_code == EXIT_OK:
        print(f"✅ {config.task.type}: {path}")
    else:
        print(f"⚠️  {config.task.type}: {result.status} ({result.message}); see {path}")
    return result.exit_code


def _catalog_listing() -> dict[str, Any]:
    algebras = {}
    for name in CATALOG_NAMES:
        algebra = catalog("abelian_3" if name == "abelian_n" else name)
        algebras[name] = {
            "dimension": "n" if name == "abelian_n" else algebra.dim,
            "labels": list(algebra.labels) if name != "abelian_n" else [],
            "center_dimension": "n" if name == "abelian_n" else len(algebra.center()),
            "unimodular": algebra.is_unimodular(),
        }
    reps = {}
    for name in REP_NAMES:
        rep = catalog_rep("abelian_3" if name == "abelian_n" else name)
        reps[name] = {"matrix_size": "n" if name == "abelian_n" else rep.m, "complex": rep.is_complex}
    return {"version": __version__, "algebras": algebras, "representations": reps}


# ── Entry point ──────────────────────────────────────────────────────


def _configure_logging(verbosity: int) -> None:
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(verbosity, 2)]
    env_level = os.environ.get(LOG_LEVEL_ENV)
    if env_level:
        level = logging.getLevelName(env_level.upper())
        if not isinstance(level, int):
            level = logging.WARNING
    logging.basicConfig(format=LOG_FORMAT, level=level, stream=sys.stderr, force=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spraylab", description="Left-invariant spray geometry on Lie groups."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "run the task named in a config file"),
        ("verify", "run the invariant suites for a config's algebra and spray"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("config", help="path to a JSON config")
        cmd.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config leaf by dotted path, e.g. task.t_span.1=5",
        )
        cmd.add_argument("-v", "--verbose", action="count", default=0)
    catalog_cmd = sub.add_parser("catalog", help="list catalog algebras and representations")
    catalog_cmd.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    if args.command == "catalog":
        print(json.dumps(_catalog_listing(), indent=2, sort_keys=True))
        return EXIT_OK
    force_task = "verify" if args.command == "verify" else None
    try:
        loaded = load_config(args.config, args.overrides, force_task=force_task)
    except SprayLabError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", EXIT_VALIDATION)
    return execute(loaded)
