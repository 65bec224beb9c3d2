"""Algebra-level flows of a left-invariant spray.

* geodesics:              y′ = −η(y)
* linear transport:       w′ = −N(y(t), w) − [y(t), w]
* nonlinear transport:    y′ = −N(y, w(t))

where w(t) in the nonlinear case is the left logarithmic derivative of the
curve on the group. Constant w gives the one-parameter flow of −N(·, w);
broken one-parameter-subgroup paths (``loop_transport``) compose those flows.
"""

from __future__ import annotations

import logging
from typing import Any, Sequence

import numpy as np

from spraylab.curves import CurveKind, CurveSpec
from spraylab.errors import DimensionError, DomainExitError, SpanError
from spraylab.integrators import (
    IntegrationStatus,
    IntegratorConfig,
    Trajectory,
    TrajectoryKind,
    integrate,
    integrate_segments,
)
from spraylab.spray_model import SprayField

log = logging.getLogger(__name__)


def _vector(spray: SprayField, x: Any, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (spray.dim,):
        raise DimensionError(f"{what} has shape {x.shape}, algebra {spray.algebra.name} has dimension {spray.dim}")
    return x


def _curve_span(curve: CurveSpec, t_span: Sequence[float] | None) -> tuple[float, float]:
    if t_span is not None:
        return float(t_span[0]), float(t_span[1])
    if curve.kind is CurveKind.PIECEWISE:
        return 0.0, curve.duration
    if curve.kind is CurveKind.TABLE:
        return float(curve.times[0]), float(curve.times[-1])
    raise SpanError(f"a t_span is required for {curve.kind.value} curves")


def geodesic_flow(
    spray: SprayField,
    y0: Any,
    t_span: Sequence[float],
    cfg: IntegratorConfig | None = None,
) -> Trajectory:
    """Velocity y(t) of the geodesic through the identity with ẏ(0) = y0."""
    y0 = _vector(spray, y0, "y0")
    spray.eta(y0)
    traj = integrate(
        lambda _t, y: -spray.eta(y),
        y0,
        t_span,
        cfg,
        kind=TrajectoryKind.GEODESIC_VELOCITY,
        floor=spray.y_floor,
    )
    log.debug("geodesic from %s: %d nodes, %s", y0.tolist(), len(traj), traj.status.value)
    return traj


def linear_transport(
    spray: SprayField,
    y_path: Trajectory | CurveSpec,
    w0: Any,
    cfg: IntegratorConfig | None = None,
    t_span: Sequence[float] | None = None,
) -> Trajectory:
    """Linearly parallel field w(t) along the curve with left velocity y(t).

    ``y_path`` is usually a geodesic trajectory; its full span is used unless
    ``t_span`` (which may run backwards) says otherwise. A CurveSpec also works
    as y(t).
    """
    w0 = _vector(spray, w0, "w0")
    bracket, connection = spray.algebra.bracket, spray.connection

    def field(y_of_t):
        def rhs(t: float, w: np.ndarray) -> np.ndarray:
            y = y_of_t(t)
            return -(connection(y, w) + bracket(y, w))

        return rhs

    if isinstance(y_path, Trajectory):
        if t_span is None:
            t0, t1 = y_path.origin, y_path.terminus
        else:
            t0, t1 = float(t_span[0]), float(t_span[1])
        lo, hi = y_path.span
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if min(t0, t1) < lo - slack or max(t0, t1) > hi + slack:
            raise SpanError(f"transport span [{t0}, {t1}] not covered by y(t) on [{lo}, {hi}]")
        segments = [(t0, t1, field(y_path.at))]
    else:
        t0, t1 = _curve_span(y_path, t_span)
        segments = [(a, b, field(fn)) for a, b, fn in y_path.pieces(t0, t1)]
    return integrate_segments(segments, w0, cfg, kind=TrajectoryKind.LINEAR_PARALLEL)


def parallel_along_geodesic(
    spray: SprayField,
    y0: Any,
    w0: Any,
    t_span: Sequence[float],
    cfg: IntegratorConfig | None = None,
) -> tuple[Trajectory, Trajectory]:
    """Geodesic velocity and a linearly parallel field integrated as one system.

    Both trajectories share their nodes, which finite-difference stencils rely on.
    """
    y0 = _vector(spray, y0, "y0")
    w0 = _vector(spray, w0, "w0")
    n = spray.dim
    spray.eta(y0)
    bracket, connection = spray.algebra.bracket, spray.connection

    def rhs(_t: float, state: np.ndarray) -> np.ndarray:
        y, w = state[:n], state[n:]
        return np.concatenate([-spray.eta(y), -(connection(y, w) + bracket(y, w))])

    joint = integrate(rhs, np.concatenate([y0, w0]), t_span, cfg)

    def part(sl: slice, kind: TrajectoryKind) -> Trajectory:
        return Trajectory(
            joint.times,
            joint.states[:, sl],
            joint.slopes[:, :, sl],
            kind,
            joint.status,
            joint.origin,
            joint.terminus,
            joint.message,
        )

    return (
        part(slice(0, n), TrajectoryKind.GEODESIC_VELOCITY),
        part(slice(n, 2 * n), TrajectoryKind.LINEAR_PARALLEL),
    )


def nonlinear_transport(
    spray: SprayField,
    curve: CurveSpec,
    y0: Any,
    t_span: Sequence[float] | None = None,
    cfg: IntegratorConfig | None = None,
) -> Trajectory:
    """Nonlinear parallel translation of y0 along the curve with left derivative w(t).

    Piecewise curves are integrated leg by leg, so corners are exact.
    """
    y0 = _vector(spray, y0, "y0")
    if curve.dim != spray.dim:
        raise DimensionError(f"curve has dimension {curve.dim}, algebra has {spray.dim}")
    spray.eta(y0)
    t0, t1 = _curve_span(curve, t_span)
    connection = spray.connection
    segments = [
        (a, b, lambda t, y, fn=fn: -connection(y, fn(t)))
        for a, b, fn in curve.pieces(t0, t1)
    ]
    return integrate_segments(
        segments, y0, cfg, kind=TrajectoryKind.NONLINEAR_PARALLEL, floor=spray.y_floor
    )


def _endpoint(traj: Trajectory, what: str) -> np.ndarray:
    if traj.status is IntegrationStatus.DOMAIN_EXIT:
        raise DomainExitError(f"{what} left the domain: {traj.message}", partial=traj)
    return traj.final_state


def one_param_flow(
    spray: SprayField,
    w: Any,
    t: float,
    y0: Any,
    cfg: IntegratorConfig | None = None,
) -> np.ndarray:
    """ρ_t(y0) for the flow ρ generated by −N(·, w)."""
    w = _vector(spray, w, "w")
    y0 = _vector(spray, y0, "y0")
    if t == 0.0:
        spray.eta(y0)
        return y0.copy()
    traj = nonlinear_transport(spray, CurveSpec.constant(w), y0, (0.0, float(t)), cfg)
    return _endpoint(traj, "one-parameter flow")


def loop_transport(
    spray: SprayField,
    legs: Sequence[tuple[Any, float]],
    y0: Any,
    cfg: IntegratorConfig | None = None,
) -> np.ndarray:
    """Compose one-parameter flows along the legs ``(w_i, Δt_i)`` in order."""
    for _, dt in legs:
        if not float(dt) > 0.0:
            raise ValueError(f"loop leg durations must be positive, got {dt}")
    curve = CurveSpec.piecewise(legs)
    traj = nonlinear_transport(spray, curve, y0, None, cfg)
    return _endpoint(traj, "loop transport")
