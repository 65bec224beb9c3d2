"""Group curves from algebra data, for matrix groups.

A curve c(t) with left velocity y(t) = (L_{c(t)⁻¹})_* ċ(t) solves
C′ = C·ρ(y(t)) in any matrix representation ρ. The ODE is integrated with
the ordinary engines, so drift off the group is measured rather than
suppressed (see :meth:`GroupCurve.unitarity_defect`).
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np
from scipy.linalg import expm

from spraylab.curves import CurveSpec
from spraylab.errors import DimensionError, DomainExitError, SpanError, UnknownCatalogEntryError
from spraylab.integrators import (
    IntegrationStatus,
    IntegratorConfig,
    Trajectory,
    TrajectoryKind,
    integrate_segments,
)
from spraylab.lie_algebra import LieAlgebra
from spraylab.spray_model import SprayField
from spraylab.transport import geodesic_flow

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MatrixRep:
    """``rho[i]`` is the m×m matrix representing e_i."""

    rho: np.ndarray
    name: str = "custom"

    def __post_init__(self) -> None:
        rho = np.array(self.rho)
        if rho.ndim != 3 or rho.shape[1] != rho.shape[2]:
            raise DimensionError(f"representation must have shape (n, m, m), got {rho.shape}")
        if not np.iscomplexobj(rho):
            rho = rho.astype(float)
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @property
    def m(self) -> int:
        return self.rho.shape[1]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.rho)

    def __call__(self, y: Any) -> np.ndarray:
        return np.einsum("i,ijk->jk", np.asarray(y, dtype=float), self.rho)


def _unit(m: int, i: int, j: int) -> np.ndarray:
    e = np.zeros((m, m))
    e[i, j] = 1.0
    return e


_PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ]
)

_REPS: dict[str, Callable[[], MatrixRep]] = {
    "su2": lambda: MatrixRep(-0.5j * _PAULI, "su2"),
    "heisenberg3": lambda: MatrixRep(
        np.array([_unit(3, 0, 1), _unit(3, 1, 2), _unit(3, 0, 2)]), "heisenberg3"
    ),
    "sl2r": lambda: MatrixRep(
        np.array([np.diag([1.0, -1.0]), _unit(2, 0, 1), _unit(2, 1, 0)]), "sl2r"
    ),
    "e2": lambda: MatrixRep(
        np.array([_unit(3, 1, 0) - _unit(3, 0, 1), _unit(3, 0, 2), _unit(3, 1, 2)]), "e2"
    ),
    "solvable2": lambda: MatrixRep(np.array([_unit(2, 0, 0), _unit(2, 0, 1)]), "solvable2"),
}

_ABELIAN = re.compile(r"abelian_(\d+)$")

REP_NAMES = ("abelian_n",) + tuple(_REPS)


def catalog_rep(name: str) -> MatrixRep:
    """Faithful matrix representation of a catalog algebra."""
    match = _ABELIAN.match(name)
    if match and int(match.group(1)) >= 1:
        n = int(match.group(1))
        return MatrixRep(np.array([_unit(n, i, i) for i in range(n)]), name)
    try:
        builder = _REPS[name]
    except KeyError:
        raise UnknownCatalogEntryError(
            f"no matrix representation for '{name}' (known: {', '.join(REP_NAMES)})"
        ) from None
    return builder()


def verify_rep(algebra: LieAlgebra, rep: MatrixRep) -> float:
    """max over i, j of ‖ρ([e_i, e_j]) − [ρ_i, ρ_j]‖_∞."""
    if rep.dim != algebra.dim:
        raise DimensionError(f"representation has {rep.dim} generators, algebra has dimension {algebra.dim}")
    rho = rep.rho
    residual = 0.0
    for i in range(algebra.dim):
        for j in range(algebra.dim):
            commutator = rho[i] @ rho[j] - rho[j] @ rho[i]
            image = np.einsum("k,kab->ab", algebra.c[i, j], rho)
            residual = max(residual, float(np.max(np.abs(image - commutator))))
    return residual


@dataclass(frozen=True, eq=False)
class GroupCurve:
    rep: MatrixRep
    trajectory: Trajectory

    @property
    def times(self) -> np.ndarray:
        return self.trajectory.times

    @property
    def matrices(self) -> np.ndarray:
        m = self.rep.m
        return self.trajectory.states.reshape(-1, m, m)

    def at(self, t: float) -> np.ndarray:
        m = self.rep.m
        return self.trajectory.at(t).reshape(m, m)

    @property
    def final(self) -> np.ndarray:
        return self.at(self.trajectory.terminus)

    def unitarity_defect(self) -> float:
        """max_t ‖C*C − I‖_∞ (meaningful for compact reps such as su2)."""
        eye = np.eye(self.rep.m)
        return float(max(np.max(np.abs(c.conj().T @ c - eye)) for c in self.matrices))

    def determinant_defect(self) -> float:
        return float(max(abs(np.linalg.det(c) - 1.0) for c in self.matrices))

    def table(self) -> tuple[list[str], np.ndarray]:
        m = self.rep.m
        names = [f"c{i + 1}{j + 1}" for i in range(m) for j in range(m)]
        flat = self.trajectory.states
        if self.rep.is_complex:
            header = ["t"] + [f"{n}_{part}" for n in names for part in ("re", "im")]
            interleaved = np.stack([flat.real, flat.imag], axis=-1).reshape(len(flat), -1)
            return header, np.column_stack([self.times, interleaved])
        return ["t"] + names, np.column_stack([self.times, flat.real])


def reconstruct_curve(
    rep: MatrixRep,
    y_path: Trajectory | CurveSpec,
    cfg: IntegratorConfig | None = None,
    initial: Any = None,
    t_span: Sequence[float] | None = None,
) -> GroupCurve:
    """Solve C′ = C·ρ(y(t)) with C(t0) = ``initial`` (identity by default).

    Trajectory inputs are integrated node to node so kinks in y(t) fall on
    segment boundaries.
    """
    m = rep.m
    c0 = np.eye(m) if initial is None else np.asarray(initial)
    if c0.shape != (m, m):
        raise DimensionError(f"initial matrix must have shape {(m, m)}, got {c0.shape}")
    dtype = np.result_type(c0, rep.rho, float)

    def field(y_of_t: Callable[[float], np.ndarray]):
        def rhs(t: float, flat: np.ndarray) -> np.ndarray:
            return (flat.reshape(m, m) @ rep(y_of_t(t))).ravel()

        return rhs

    if isinstance(y_path, Trajectory):
        if y_path.states.shape[1] != rep.dim:
            raise DimensionError(f"trajectory has dimension {y_path.states.shape[1]}, representation {rep.dim}")
        nodes = list(y_path.times)
        if y_path.terminus < y_path.origin:
            nodes.reverse()
        segments = [(a, b, field(y_path.at)) for a, b in zip(nodes[:-1], nodes[1:])]
        if not segments:
            segments = [(y_path.origin, y_path.origin, field(y_path.at))]
    else:
        if y_path.dim != rep.dim:
            raise DimensionError(f"curve has dimension {y_path.dim}, representation {rep.dim}")
        if t_span is None:
            raise SpanError("reconstructing from a CurveSpec needs a t_span")
        segments = [(a, b, field(fn)) for a, b, fn in y_path.pieces(float(t_span[0]), float(t_span[1]))]
    traj = integrate_segments(segments, c0.astype(dtype).ravel(), cfg, kind=TrajectoryKind.MATRIX)
    log.debug("reconstructed %s curve over %d nodes", rep.name, len(traj))
    return GroupCurve(rep, traj)


def word_element(rep: MatrixRep, word: Sequence[tuple[Any, float]]) -> np.ndarray:
    """exp(Δt_1 ρ(w_1)) · exp(Δt_2 ρ(w_2)) ⋯"""
    g = np.eye(rep.m, dtype=rep.rho.dtype)
    for w, dt in word:
        g = g @ expm(float(dt) * rep(w))
    return g


def left_invariance_check(
    rep: MatrixRep,
    spray: SprayField,
    y0: Any,
    g0_word: Sequence[tuple[Any, float]],
    t_span: float | Sequence[float],
    cfg: IntegratorConfig | None = None,
) -> float:
    """max_t ‖g0·C(t) − C_{g0}(t)‖_∞ where C_{g0} starts at g0 with the same y(t).

    A bare number T means the span (0, T). Both curves use y(t0) = y0.
    """
    if rep.dim != spray.dim:
        raise DimensionError(f"representation has {rep.dim} generators, spray algebra has dimension {spray.dim}")
    t0, t1 = (0.0, float(t_span)) if np.isscalar(t_span) else (float(t_span[0]), float(t_span[1]))
    y_traj = geodesic_flow(spray, y0, (t0, t1), cfg)
    if y_traj.status is IntegrationStatus.DOMAIN_EXIT:
        raise DomainExitError(f"geodesic left the domain: {y_traj.message}", partial=y_traj)
    g0 = word_element(rep, g0_word)
    from_identity = reconstruct_curve(rep, y_traj, cfg)
    from_g0 = reconstruct_curve(rep, y_traj, cfg, initial=g0)
    residual = max(
        float(np.max(np.abs(g0 @ from_identity.at(t) - from_g0.at(t)))) for t in y_traj.times
    )
    log.info("left-invariance residual %.3e over [%g, %g]", residual, t0, t1)
    return residual
