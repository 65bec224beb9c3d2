"""Invariant suites run by the ``verify`` task.

Each suite measures the worst violation of one identity over random inputs
and compares it against a fixed tolerance. Metric-only suites are skipped
for other spray variants.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable

import numpy as np

from spraylab import curvature, holonomy, transport
from spraylab.curves import CurveSpec
from spraylab.errors import ConfigError, SprayLabError
from spraylab.integrators import IntegratorConfig
from spraylab.spray_model import SprayField

log = logging.getLogger(__name__)


class SuiteStatus(Enum):
    PASS = "pass"
    FAIL = "fail"
    SKIPPED = "skipped"
    ERROR = "error"


@dataclass(frozen=True)
class SuiteResult:
    name: str
    status: SuiteStatus
    max_error: float | None = None
    tolerance: float | None = None
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status.value,
            "max_error": self.max_error,
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class VerificationReport:
    results: list[SuiteResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.status in (SuiteStatus.PASS, SuiteStatus.SKIPPED) for r in self.results)

    @property
    def failures(self) -> list[str]:
        return [r.name for r in self.results if r.status in (SuiteStatus.FAIL, SuiteStatus.ERROR)]

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "suites": {r.name: r.to_dict() for r in self.results},
        }


@dataclass
class _Context:
    spray: SprayField
    rng: np.random.Generator
    n_random: int
    cfg: IntegratorConfig

    def vector(self) -> np.ndarray:
        v = self.rng.standard_normal(self.spray.dim)
        return v / np.linalg.norm(v)

    def vectors(self, k: int) -> Iterable[tuple[np.ndarray, ...]]:
        for _ in range(self.n_random):
            yield tuple(self.vector() for _ in range(k))


@dataclass(frozen=True)
class _Suite:
    check: Callable[[_Context], float]
    tolerance: float
    metric_only: bool = False
    # cap on random cases for suites that integrate
    max_cases: int | None = None


SUITES: dict[str, _Suite] = {}


def _suite(name: str, tolerance: float, metric_only: bool = False, max_cases: int | None = None):
    def register(fn: Callable[[_Context], float]) -> Callable[[_Context], float]:
        SUITES[name] = _Suite(fn, tolerance, metric_only, max_cases)
        return fn

    return register


def _rel(a: Any, b: Any) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / (1.0 + np.linalg.norm(b)))


# ── Algebra ──────────────────────────────────────────────────────────


@_suite("jacobi", 1e-8)
def _jacobi(ctx: _Context) -> float:
    return ctx.spray.algebra.jacobi_defect()


@_suite("bilinearity", 1e-12)
def _bilinearity(ctx: _Context) -> float:
    bracket = ctx.spray.algebra.bracket
    worst = 0.0
    for x, y, z in ctx.vectors(3):
        alpha, beta = ctx.rng.standard_normal(2)
        lhs = bracket(alpha * x + beta * y, z)
        worst = max(worst, _rel(lhs, alpha * bracket(x, z) + beta * bracket(y, z)), _rel(bracket(x, x), 0.0))
    return worst


@_suite("ad_consistency", 1e-12)
def _ad_consistency(ctx: _Context) -> float:
    algebra = ctx.spray.algebra
    return max(_rel(algebra.ad_matrix(x) @ w, algebra.bracket(x, w)) for x, w in ctx.vectors(2))


# ── Spray ────────────────────────────────────────────────────────────


@_suite("homogeneity", 1e-8)
def _homogeneity(ctx: _Context) -> float:
    spray = ctx.spray
    worst = 0.0
    for y, w in ctx.vectors(2):
        eta, n = spray.eta(y), spray.connection(y, w)
        for lam in (0.5, 2.0, 3.0):
            worst = max(
                worst,
                _rel(spray.eta(lam * y), lam**2 * eta),
                _rel(spray.connection(lam * y, w), lam * n),
            )
    return worst


@_suite("euler_identity", 1e-8)
def _euler_identity(ctx: _Context) -> float:
    spray = ctx.spray
    worst = 0.0
    for (y,) in ctx.vectors(1):
        eta = spray.eta(y)
        worst = max(worst, _rel(spray.connection(y, y), eta), _rel(spray.d_eta(y, y), 2.0 * eta))
    return worst


@_suite("linearity", 1e-10)
def _linearity(ctx: _Context) -> float:
    spray = ctx.spray
    worst = 0.0
    for y, u, v in ctx.vectors(3):
        alpha, beta = ctx.rng.standard_normal(2)
        lhs = spray.connection(y, alpha * u + beta * v)
        worst = max(worst, _rel(lhs, alpha * spray.connection(y, u) + beta * spray.connection(y, v)))
    return worst


# ── Curvature ────────────────────────────────────────────────────────


@_suite("flagpole", 1e-8)
def _flagpole(ctx: _Context) -> float:
    return max(_rel(curvature.riemann(ctx.spray, y, y), 0.0) for (y,) in ctx.vectors(1))


@_suite("dual_route", 1e-5, max_cases=2)
def _dual_route(ctx: _Context) -> float:
    worst = 0.0
    for y, w in ctx.vectors(2):
        report = curvature.riemann_via_transport(ctx.spray, y, w, cfg=ctx.cfg)
        worst = max(worst, report.residual_vs_transport / (1.0 + np.linalg.norm(report.R)))
    return worst


# ── Transport ────────────────────────────────────────────────────────


@_suite("semigroup", 1e-7, max_cases=3)
def _semigroup(ctx: _Context) -> float:
    spray, cfg = ctx.spray, ctx.cfg
    worst = 0.0
    for w, y in ctx.vectors(2):
        twice = transport.one_param_flow(spray, w, 1.0, transport.one_param_flow(spray, w, 1.0, y, cfg), cfg)
        worst = max(worst, _rel(twice, transport.one_param_flow(spray, w, 2.0, y, cfg)))
    return worst


@_suite("reversal", 1e-7, max_cases=3)
def _reversal(ctx: _Context) -> float:
    spray, cfg = ctx.spray, ctx.cfg
    worst = 0.0
    for w1, w2, y in ctx.vectors(3):
        curve = CurveSpec.piecewise([(w1, 0.7), (w2, 0.5)])
        forward = transport.nonlinear_transport(spray, curve, y, None, cfg).final_state
        back = transport.nonlinear_transport(spray, curve.reversed(0.0, curve.duration), forward, None, cfg)
        worst = max(worst, _rel(back.final_state, y))
    return worst


@_suite("geodesic_self_transport", 1e-7, max_cases=3)
def _geodesic_self_transport(ctx: _Context) -> float:
    spray, cfg = ctx.spray, ctx.cfg
    worst = 0.0
    for (y,) in ctx.vectors(1):
        geodesic = transport.geodesic_flow(spray, y, (0.0, 2.0), cfg)
        w = transport.linear_transport(spray, geodesic, y, cfg)
        worst = max(worst, _rel(w.final_state, geodesic.final_state))
    return worst


@_suite("metric_conservation", 1e-6, metric_only=True, max_cases=3)
def _metric_conservation(ctx: _Context) -> float:
    spray, cfg = ctx.spray, ctx.cfg
    worst = 0.0
    for (y,) in ctx.vectors(1):
        geodesic = transport.geodesic_flow(spray, y, (0.0, 5.0), cfg)
        norms = np.array([spray.finsler_norm(state) for state in geodesic.states])
        worst = max(worst, float(np.max(np.abs(norms - norms[0])) / norms[0]))
    return worst


# ── Holonomy ─────────────────────────────────────────────────────────


@_suite("antisymmetry", 1e-9)
def _antisymmetry(ctx: _Context) -> float:
    spray = ctx.spray
    worst = 0.0
    for w1, w2, y in ctx.vectors(3):
        forward = holonomy.generator_bracket(spray, w1, w2, y)
        worst = max(worst, _rel(forward, -holonomy.generator_bracket(spray, w2, w1, y)))
    return worst


# ── Runner ───────────────────────────────────────────────────────────


def run_suites(
    spray: SprayField,
    suites: Iterable[str] | None = None,
    n_random: int = 5,
    seed: int = 0,
    cfg: IntegratorConfig | None = None,
) -> VerificationReport:
    names = list(SUITES) if suites is None else list(suites)
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise ConfigError(
            f"unknown suites {unknown} (known: {', '.join(SUITES)})", "task.suites"
        )
    cfg = cfg or IntegratorConfig()
    results = []
    for name in names:
        suite = SUITES[name]
        if suite.metric_only and not spray.is_metric:
            results.append(SuiteResult(name, SuiteStatus.SKIPPED, detail="needs a metric spray"))
            continue
        cases = n_random if suite.max_cases is None else min(n_random, suite.max_cases)
        ctx = _Context(spray, np.random.default_rng([seed, len(results)]), cases, cfg)
        try:
            error = float(suite.check(ctx))
        except SprayLabError as exc:
            log.warning("suite %s raised %s", name, exc)
            results.append(SuiteResult(name, SuiteStatus.ERROR, tolerance=suite.tolerance, detail=str(exc)))
            continue
        status = SuiteStatus.PASS if error <= suite.tolerance else SuiteStatus.FAIL
        results.append(SuiteResult(name, status, error, suite.tolerance))
        log.info("suite %s: %s (max error %.3e, tolerance %.0e)", name, status.value, error, suite.tolerance)
    return VerificationReport(results)
