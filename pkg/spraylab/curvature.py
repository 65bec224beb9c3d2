"""Riemann, flag, S- and Landsberg curvature of left-invariant sprays.

The Riemann operator is evaluated algebraically,

    R_y(w) = DN(η, y, w) − N(y, N(y, w)) + N(y, [y, w]) − [y, N(y, w)],

and, independently, by differentiating a linearly parallel field w(t) along
the geodesic with velocity y(t): the fields

    N(t) = w′(t) + Dη(y(t), w(t)),    R(t) = −N′(t) − Dη(y(t), N(t))

are the successive brackets of the geodesic field with w. Time derivatives
use 5-point central differences on RK4 nodes, so the stencil never
interpolates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np

from spraylab.errors import DegenerateFlagError, DomainExitError
from spraylab.integrators import IntegrationStatus, IntegratorConfig, Trajectory
from spraylab.spray_model import SprayField
from spraylab.transport import parallel_along_geodesic

log = logging.getLogger(__name__)

FLAG_DENOMINATOR_FLOOR = 1e-12
RIEMANN_FD_STEP = 1e-4
LANDSBERG_FD_STEP = 1e-3


class CurvatureMethod(Enum):
    ALGEBRAIC = "algebraic"
    TRANSPORT_DOUBLE_BRACKET = "transport_double_bracket"


@dataclass(frozen=True, eq=False)
class CurvatureReport:
    y: np.ndarray
    w: np.ndarray
    R: np.ndarray
    method: CurvatureMethod
    flag: float | None = None
    residual_vs_transport: float | None = None
    t_probe: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "y": self.y.tolist(),
            "w": self.w.tolist(),
            "R": self.R.tolist(),
            "method": self.method.value,
        }
        if self.flag is not None:
            out["flag"] = self.flag
        if self.residual_vs_transport is not None:
            out["residual_vs_transport"] = self.residual_vs_transport
        if self.t_probe:
            out["t_probe"] = self.t_probe
        return out


# ── Algebraic route ──────────────────────────────────────────────────


def dn_direction(spray: SprayField, y: Any, w: Any) -> Any:
    """DN(η, y, w): derivative of N(·, w) at y in the direction η(y)."""
    y = spray.algebra.check_vector(y, "y")
    w = spray.algebra.check_vector(w, "w")
    return spray.derivative(lambda z: spray.connection(z, w), y, spray.eta(y))


def riemann(spray: SprayField, y: Any, w: Any) -> np.ndarray:
    bracket, connection = spray.algebra.bracket, spray.connection
    n_w = connection(y, w)
    return np.asarray(
        dn_direction(spray, y, w)
        - connection(y, n_w)
        + connection(y, bracket(y, w))
        - bracket(y, n_w),
        dtype=float,
    )


def _flag_value(spray: SprayField, y: np.ndarray, w: np.ndarray, r: np.ndarray) -> float:
    spray._require_metric("flag_curvature")
    g = spray.fundamental_tensor(y)
    denominator = g(y, y) * g(w, w) - g(y, w) ** 2
    if denominator < FLAG_DENOMINATOR_FLOOR:
        raise DegenerateFlagError(
            f"degenerate flag: g_y(y,y)g_y(w,w) − g_y(y,w)² = {denominator:.3e} < {FLAG_DENOMINATOR_FLOOR:g}"
        )
    return g(r, w) / denominator


def flag_curvature(spray: SprayField, y: Any, w: Any) -> float:
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    return _flag_value(spray, y, w, riemann(spray, y, w))


def _optional_flag(spray: SprayField, y: np.ndarray, w: np.ndarray, r: np.ndarray) -> float | None:
    if not spray.is_metric:
        return None
    try:
        return _flag_value(spray, y, w, r)
    except DegenerateFlagError:
        return None


def curvature_report(spray: SprayField, y: Any, w: Any) -> CurvatureReport:
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    r = riemann(spray, y, w)
    return CurvatureReport(y, w, r, CurvatureMethod.ALGEBRAIC, _optional_flag(spray, y, w, r))


def s_curvature(spray: SprayField, y: Any) -> float:
    """S(y) = Tr N(y, ·) + Tr ad(y)."""
    algebra = spray.algebra
    trace_n = sum(float(spray.connection(y, e)[i]) for i, e in enumerate(algebra.basis()))
    return trace_n + float(np.trace(algebra.ad_matrix(y)))


def landsberg(spray: SprayField, y: Any, w: Any) -> float:
    """L_y(w, w, w) = 3 C_y(w, w, [w, y] − N(y, w)) − C′_y(w, w, w, η(y))."""
    spray._require_metric("landsberg")
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    eta = np.asarray(spray.eta(y), dtype=float)
    z = spray.algebra.bracket(w, y) - spray.connection(y, w)
    return float(3.0 * spray.cartan_form(y, w, w, z) - spray.cartan_derivative(y, w, w, w, eta))


# ── Transport route ──────────────────────────────────────────────────


def _central5(values: np.ndarray, i: int, h: float) -> np.ndarray:
    return (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2]) / (12.0 * h)


def _probe_state(
    spray: SprayField, y0: Any, w0: Any, t_probe: float, cfg: IntegratorConfig | None
) -> tuple[np.ndarray, np.ndarray]:
    y0 = np.asarray(y0, dtype=float)
    w0 = np.asarray(w0, dtype=float)
    if t_probe == 0.0:
        return y0, w0
    y_traj, w_traj = parallel_along_geodesic(spray, y0, w0, (0.0, t_probe), cfg)
    _require_complete(y_traj)
    return y_traj.final_state, w_traj.final_state


def _require_complete(traj: Trajectory) -> None:
    if traj.status is IntegrationStatus.DOMAIN_EXIT:
        raise DomainExitError(f"geodesic left the domain: {traj.message}", partial=traj)


def _stencil(
    spray: SprayField, y: np.ndarray, w: np.ndarray, h: float, reach: int
) -> tuple[np.ndarray, np.ndarray]:
    """y and w at t = k·h for k = −reach..reach, all on RK4 nodes."""
    rk4 = IntegratorConfig.rk4(h)
    ys, ws = [], []
    for end in (-reach * h, reach * h):
        y_traj, w_traj = parallel_along_geodesic(spray, y, w, (0.0, end), rk4)
        _require_complete(y_traj)
        ys.append(y_traj.states)
        ws.append(w_traj.states)
    # backward nodes are stored increasing in time and end at t = 0
    y_nodes = np.concatenate([ys[0][:-1], ys[1]])
    w_nodes = np.concatenate([ws[0][:-1], ws[1]])
    if len(y_nodes) != 2 * reach + 1:
        raise RuntimeError(f"stencil has {len(y_nodes)} nodes, expected {2 * reach + 1}")
    return y_nodes, w_nodes


def riemann_via_transport(
    spray: SprayField,
    y0: Any,
    w0: Any,
    t_probe: float = 0.0,
    cfg: IntegratorConfig | None = None,
    fd_step: float = RIEMANN_FD_STEP,
) -> CurvatureReport:
    """R at the probe time from w(t) transported along the geodesic through y0.

    ``residual_vs_transport`` compares against :func:`riemann` at the same point.
    """
    y, w = _probe_state(spray, y0, w0, t_probe, cfg)
    h = float(fd_step)
    y_nodes, w_nodes = _stencil(spray, y, w, h, 4)
    d_eta = spray.d_eta
    # N at k = −2..2 (node indices 2..6)
    n_nodes = np.array(
        [_central5(w_nodes, i, h) + d_eta(y_nodes[i], w_nodes[i]) for i in range(2, 7)]
    )
    r = -_central5(n_nodes, 2, h) - np.asarray(d_eta(y, n_nodes[2]), dtype=float)
    r_algebraic = riemann(spray, y, w)
    residual = float(np.linalg.norm(r - r_algebraic))
    log.info("transport curvature at t=%g: residual %.3e vs algebraic", t_probe, residual)
    return CurvatureReport(
        y,
        w,
        r,
        CurvatureMethod.TRANSPORT_DOUBLE_BRACKET,
        _optional_flag(spray, y, w, r),
        residual,
        float(t_probe),
    )


def landsberg_via_transport(
    spray: SprayField,
    y0: Any,
    w0: Any,
    cfg: IntegratorConfig | None = None,
    fd_step: float = LANDSBERG_FD_STEP,
    t_probe: float = 0.0,
) -> float:
    """d/dt C_{y(t)}(w(t), w(t), w(t)) for w linearly parallel along the geodesic."""
    spray._require_metric("landsberg_via_transport")
    y, w = _probe_state(spray, y0, w0, t_probe, cfg)
    h = float(fd_step)
    y_nodes, w_nodes = _stencil(spray, y, w, h, 2)
    values = np.array(
        [float(spray.cartan_form(yk, wk, wk, wk)) for yk, wk in zip(y_nodes, w_nodes)]
    )
    return float(_central5(values, 2, h))
