"""Explicit Runge–Kutta engines and the trajectories they produce.

Two methods: classical RK4 on a uniform grid (used for order checks and for
finite-difference stencils, where nodes must land on exact times) and
Dormand–Prince 5(4) with step-size control (the default). Both integrate
backwards when ``t1 < t0``. Every accepted step stores the slopes at both of
its ends, which is all the cubic Hermite dense output needs; keeping both
ends per interval lets piecewise right-hand sides interpolate correctly on
either side of a corner.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from spraylab.errors import DomainError, IntegrationError, SpanError

log = logging.getLogger(__name__)

Rhs = Callable[[float, np.ndarray], np.ndarray]

# Dormand–Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
# fifth-order minus embedded fourth-order weights; last entry multiplies the FSAL stage
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 10.0


class IntegratorMethod(Enum):
    RK4_FIXED = "rk4_fixed"
    DOPRI_ADAPTIVE = "dopri_adaptive"


class IntegrationStatus(Enum):
    COMPLETED = "completed"
    DOMAIN_EXIT = "domain_exit"
    FAILED = "failed"


class TrajectoryKind(Enum):
    GEODESIC_VELOCITY = "geodesic_velocity"
    LINEAR_PARALLEL = "linear_parallel"
    NONLINEAR_PARALLEL = "nonlinear_parallel"
    MATRIX = "matrix"


@dataclass(frozen=True)
class IntegratorConfig:
    method: IntegratorMethod = IntegratorMethod.DOPRI_ADAPTIVE
    step: float = 1e-2
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_steps: int = 200_000
    max_step: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", IntegratorMethod(self.method))
        for name in ("step", "abs_tol", "rel_tol"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"integrator {name} must be positive, got {getattr(self, name)}")
        if self.max_steps < 1:
            raise ValueError(f"integrator max_steps must be positive, got {self.max_steps}")
        if self.max_step is not None and not self.max_step > 0.0:
            raise ValueError(f"integrator max_step must be positive, got {self.max_step}")

    @classmethod
    def rk4(cls, step: float, max_steps: int = 1_000_000) -> "IntegratorConfig":
        return cls(method=IntegratorMethod.RK4_FIXED, step=step, max_steps=max_steps)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-sampled solution with cubic Hermite dense output.

    ``times`` is strictly increasing even for backward runs; ``origin`` and
    ``terminus`` record where the integration started and where it stopped.
    ``slopes[k]`` holds the derivative at the left and right end of interval k.
    """

    times: np.ndarray
    states: np.ndarray
    slopes: np.ndarray
    kind: TrajectoryKind | None = None
    status: IntegrationStatus = IntegrationStatus.COMPLETED
    origin: float = 0.0
    terminus: float = 0.0
    message: str = ""

    def __post_init__(self) -> None:
        if len(self.times) != len(self.states) or len(self.slopes) != max(len(self.times) - 1, 0):
            raise ValueError("trajectory arrays have inconsistent lengths")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    @property
    def completed(self) -> bool:
        return self.status is IntegrationStatus.COMPLETED

    @property
    def initial_state(self) -> np.ndarray:
        return self.at(self.origin)

    @property
    def final_state(self) -> np.ndarray:
        return self.at(self.terminus)

    def with_kind(self, kind: TrajectoryKind) -> "Trajectory":
        return Trajectory(
            self.times, self.states, self.slopes, kind, self.status, self.origin, self.terminus, self.message
        )

    def at(self, t: float) -> np.ndarray:
        times = self.times
        lo, hi = float(times[0]), float(times[-1])
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if t < lo - slack or t > hi + slack:
            raise SpanError(f"time {t} outside trajectory span [{lo}, {hi}]")
        if len(times) == 1:
            return self.states[0].copy()
        t = min(max(t, lo), hi)
        k = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2))
        h = times[k + 1] - times[k]
        s = (t - times[k]) / h
        m0, m1 = self.slopes[k]
        return (
            (1 + 2 * s) * (1 - s) ** 2 * self.states[k]
            + s * (1 - s) ** 2 * h * m0
            + s * s * (3 - 2 * s) * self.states[k + 1]
            + s * s * (s - 1) * h * m1
        )


class _DomainExit(Exception):
    pass


class _Run:
    """Mutable node accumulator for one integration."""

    def __init__(self, config: IntegratorConfig, floor: float | None):
        self.config = config
        self.floor = floor
        self.times: list[float] = []
        self.states: list[np.ndarray] = []
        self.slopes: list[tuple[np.ndarray, np.ndarray]] = []
        self.accepted = 0
        self.rejected = 0

    def start(self, t: float, y: np.ndarray) -> None:
        self.times.append(t)
        self.states.append(y)

    def count(self) -> None:
        if self.accepted + self.rejected >= self.config.max_steps:
            raise IntegrationError(
                f"max_steps={self.config.max_steps} exceeded at t={self.times[-1]:.6g}"
            )

    def accept(self, t: float, y: np.ndarray, slope_start: np.ndarray, slope_end: np.ndarray) -> None:
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite state at t={t:.6g}")
        if self.floor is not None and np.linalg.norm(y) < self.floor:
            raise _DomainExit(f"|y| fell below y_floor={self.floor:.1e} near t={t:.6g}")
        self.times.append(t)
        self.states.append(y)
        self.slopes.append((slope_start, slope_end))
        self.accepted += 1

    def trajectory(
        self,
        kind: TrajectoryKind | None,
        status: IntegrationStatus,
        message: str,
        origin: float,
    ) -> Trajectory:
        times = np.array(self.times, dtype=float)
        states = np.array(self.states)
        if self.slopes:
            slopes = np.array([np.stack(pair) for pair in self.slopes])
        else:
            slopes = np.zeros((0, 2) + states.shape[1:], dtype=states.dtype)
        terminus = float(times[-1])
        if len(times) > 1 and times[-1] < times[0]:
            times, states = times[::-1].copy(), states[::-1].copy()
            slopes = slopes[::-1, ::-1].copy()
        return Trajectory(times, states, slopes, kind, status, origin, terminus, message)


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.abs(x) ** 2)))


def _rk4_segment(run: _Run, rhs: Rhs, a: float, b: float, y: np.ndarray) -> np.ndarray:
    n = max(1, math.ceil(abs(b - a) / run.config.step - 1e-9))
    h_nominal = (b - a) / n
    t = a
    k1 = rhs(t, y)
    for i in range(n):
        run.count()
        t_next = b if i == n - 1 else a + (i + 1) * h_nominal
        h = t_next - t
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t_next, y + h * k3)
        y_next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        k1_next = rhs(t_next, y_next)
        run.accept(t_next, y_next, k1, k1_next)
        t, y, k1 = t_next, y_next, k1_next
    return y


def _initial_step(
    rhs: Rhs, t: float, y: np.ndarray, f0: np.ndarray, direction: float, span: float, config: IntegratorConfig
) -> float:
    """Starting step; never larger than ``span`` so the trial evaluation stays inside the segment."""
    scale = config.abs_tol + config.rel_tol * np.abs(y)
    d0, d1 = _rms(y / scale), _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = rhs(t + direction * h0, y + direction * h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, span)


def _dopri_segment(run: _Run, rhs: Rhs, a: float, b: float, y: np.ndarray) -> np.ndarray:
    config = run.config
    direction = 1.0 if b > a else -1.0
    max_step = config.max_step if config.max_step is not None else math.inf
    t = a
    k1 = rhs(t, y)
    h = min(_initial_step(rhs, t, y, k1, direction, abs(b - a), config), max_step)
    rejected_last = False
    while direction * (b - t) > 0.0:
        run.count()
        remaining = abs(b - t)
        h = min(h, max_step)
        if h >= remaining * (1.0 - 1e-12):
            t_next = b
        else:
            t_next = t + direction * h
        step = t_next - t
        if abs(step) <= 1e-14 * max(1.0, abs(t)):
            raise IntegrationError(f"step size underflow at t={t:.6g}")

        k = [k1]
        for stage in range(1, 6):
            increment = sum(coef * k_j for coef, k_j in zip(_A[stage], k))
            k.append(rhs(t + _C[stage] * step, y + step * increment))
        y_next = y + step * sum(coef * k_j for coef, k_j in zip(_B, k))
        k7 = rhs(t_next, y_next)
        k.append(k7)
        err_vec = step * sum(coef * k_j for coef, k_j in zip(_E, k))
        scale = config.abs_tol + config.rel_tol * np.maximum(np.abs(y), np.abs(y_next))
        err = _rms(err_vec / scale)

        if np.isfinite(err) and err <= 1.0:
            run.accept(t_next, y_next, k1, k7)
            t, y, k1 = t_next, y_next, k7
            fac_max = 1.0 if rejected_last else FAC_MAX
            fac = fac_max if err == 0.0 else min(fac_max, max(FAC_MIN, SAFETY * err ** -0.2))
            h = abs(step) * fac
            rejected_last = False
        else:
            run.rejected += 1
            fac = FAC_MIN if not np.isfinite(err) else max(FAC_MIN, SAFETY * err ** -0.2)
            h = abs(step) * fac
            rejected_last = True
    return y


_STEPPERS = {
    IntegratorMethod.RK4_FIXED: _rk4_segment,
    IntegratorMethod.DOPRI_ADAPTIVE: _dopri_segment,
}


def integrate_segments(
    segments: Sequence[tuple[float, float, Rhs]],
    y0: np.ndarray,
    config: IntegratorConfig | None = None,
    *,
    kind: TrajectoryKind | None = None,
    floor: float | None = None,
) -> Trajectory:
    """Integrate consecutive segments ``(a, b, rhs)``; each rhs is smooth on its own [a, b].

    Falling below ``floor`` (or an rhs raising :class:`DomainError`) ends the
    run with status ``domain_exit``; other failures raise
    :class:`IntegrationError` carrying the partial trajectory.
    """
    config = config or IntegratorConfig()
    stepper = _STEPPERS[config.method]
    y = np.array(y0, dtype=np.result_type(np.asarray(y0), float))
    origin = float(segments[0][0]) if segments else 0.0
    run = _Run(config, floor)
    run.start(origin, y)
    status, message = IntegrationStatus.COMPLETED, ""
    try:
        for a, b, rhs in segments:
            if b != a:
                y = stepper(run, rhs, float(a), float(b), y)
    except (_DomainExit, DomainError) as exc:
        status, message = IntegrationStatus.DOMAIN_EXIT, str(exc)
        log.warning("domain exit: %s", message)
    except IntegrationError as exc:
        exc.partial = run.trajectory(kind, IntegrationStatus.FAILED, str(exc), origin)
        log.warning("integration failed: %s", exc)
        raise
    log.debug(
        "%s: %d accepted, %d rejected steps",
        config.method.value,
        run.accepted,
        run.rejected,
    )
    return run.trajectory(kind, status, message, origin)


def integrate(
    rhs: Rhs,
    y0: np.ndarray,
    t_span: Sequence[float],
    config: IntegratorConfig | None = None,
    *,
    kind: TrajectoryKind | None = None,
    floor: float | None = None,
) -> Trajectory:
    t0, t1 = float(t_span[0]), float(t_span[1])
    return integrate_segments([(t0, t1, rhs)], y0, config, kind=kind, floor=floor)
