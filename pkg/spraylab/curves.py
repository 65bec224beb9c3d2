"""Group curves encoded by their left logarithmic derivative w(t)."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Sequence

import numpy as np
import sympy

from spraylab.errors import DimensionError

WFunction = Callable[[float], np.ndarray]


class CurveKind(Enum):
    CONSTANT = "constant"
    PIECEWISE = "piecewise"
    TABLE = "table"
    EXPRESSION = "expression"
    CALLABLE = "callable"


@dataclass(frozen=True, eq=False)
class CurveSpec:
    """w(t) = (L_{c(t)⁻¹})_* ċ(t), in one of several encodings.

    Piecewise schedules start at t = 0, are right-continuous at their
    breakpoints and vanish after the last leg.
    """

    kind: CurveKind
    dim: int
    value: np.ndarray | None = None
    legs: tuple[tuple[np.ndarray, float], ...] = ()
    times: np.ndarray | None = None
    values: np.ndarray | None = None
    function: WFunction | None = None
    source: tuple[str, ...] = field(default=())

    # ── Constructors ─────────────────────────────────────────────────

    @classmethod
    def constant(cls, w: Any) -> "CurveSpec":
        w = np.array(w, dtype=float)
        if w.ndim != 1:
            raise DimensionError(f"constant curve needs a vector, got shape {w.shape}")
        w.setflags(write=False)
        return cls(CurveKind.CONSTANT, len(w), value=w)

    @classmethod
    def piecewise(cls, legs: Sequence[tuple[Any, float]]) -> "CurveSpec":
        if not legs:
            raise ValueError("piecewise curve needs at least one leg")
        parsed = []
        for w, dt in legs:
            w = np.array(w, dtype=float)
            if not float(dt) > 0.0:
                raise ValueError(f"leg durations must be positive, got {dt}")
            w.setflags(write=False)
            parsed.append((w, float(dt)))
        dims = {len(w) for w, _ in parsed}
        if len(dims) != 1:
            raise DimensionError(f"legs have mixed dimensions {sorted(dims)}")
        return cls(CurveKind.PIECEWISE, dims.pop(), legs=tuple(parsed))

    @classmethod
    def table(cls, times: Any, values: Any) -> "CurveSpec":
        times = np.array(times, dtype=float)
        values = np.array(values, dtype=float)
        if times.ndim != 1 or len(times) < 2 or np.any(np.diff(times) <= 0.0):
            raise ValueError("table times must be a strictly increasing sequence of at least 2 entries")
        if values.ndim != 2 or values.shape[0] != len(times):
            raise DimensionError(
                f"table values must have shape ({len(times)}, n), got {values.shape}"
            )
        times.setflags(write=False)
        values.setflags(write=False)
        return cls(CurveKind.TABLE, values.shape[1], times=times, values=values)

    @classmethod
    def expression(cls, components: Sequence[str]) -> "CurveSpec":
        """Analytic w(t) from one sympy expression per component, e.g. ``"cos(t)"``."""
        t = sympy.Symbol("t", real=True)
        exprs = []
        for text in components:
            try:
                expr = sympy.sympify(text, locals={"t": t})
            except (sympy.SympifyError, SyntaxError, TypeError) as exc:
                raise ValueError(f"cannot parse curve component {text!r}: {exc}") from None
            extra = expr.free_symbols - {t}
            if extra:
                names = ", ".join(sorted(str(s) for s in extra))
                raise ValueError(f"curve component {text!r} uses unknown symbols: {names}")
            exprs.append(expr)
        fns = [sympy.lambdify(t, expr, modules="numpy") for expr in exprs]

        def w_of_t(s: float) -> np.ndarray:
            return np.array([float(fn(s)) for fn in fns])

        return cls(
            CurveKind.EXPRESSION,
            len(exprs),
            function=w_of_t,
            source=tuple(str(e) for e in exprs),
        )

    @classmethod
    def from_callable(cls, fn: WFunction, dim: int) -> "CurveSpec":
        return cls(CurveKind.CALLABLE, int(dim), function=fn)

    # ── Evaluation ───────────────────────────────────────────────────

    @property
    def duration(self) -> float:
        if self.kind is not CurveKind.PIECEWISE:
            raise ValueError(f"{self.kind.value} curves have no intrinsic duration")
        return float(sum(dt for _, dt in self.legs))

    def breakpoints(self) -> list[float]:
        if self.kind is CurveKind.PIECEWISE:
            return list(np.cumsum([0.0] + [dt for _, dt in self.legs]))
        if self.kind is CurveKind.TABLE:
            return list(self.times)
        return []

    def __call__(self, t: float) -> np.ndarray:
        kind = self.kind
        if kind is CurveKind.CONSTANT:
            return self.value
        if kind is CurveKind.PIECEWISE:
            start = 0.0
            for w, dt in self.legs:
                if start <= t < start + dt:
                    return w
                start += dt
            return np.zeros(self.dim)
        if kind is CurveKind.TABLE:
            return np.array([np.interp(t, self.times, column) for column in self.values.T])
        return np.asarray(self.function(t), dtype=float)

    def pieces(self, t0: float, t1: float) -> list[tuple[float, float, WFunction]]:
        """Split [t0, t1] (either orientation) at corners; each piece is smooth."""
        lo, hi = min(t0, t1), max(t0, t1)
        cuts = [lo] + [b for b in self.breakpoints() if lo < b < hi] + [hi]
        pieces: list[tuple[float, float, WFunction]] = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            if self.kind is CurveKind.PIECEWISE:
                # one-sided: the leg active on the open interval
                frozen = self(0.5 * (a + b))
                pieces.append((a, b, lambda _t, w=frozen: w))
            else:
                pieces.append((a, b, self))
        if t1 < t0:
            pieces = [(b, a, fn) for a, b, fn in reversed(pieces)]
        return pieces

    def reversed(self, t0: float, t1: float) -> "CurveSpec":
        """Curve traversing [t0, t1] backwards over the same time window."""
        if self.kind is CurveKind.PIECEWISE:
            return CurveSpec.piecewise([(-w, dt) for w, dt in reversed(self.legs)])
        if self.kind is CurveKind.CONSTANT:
            return CurveSpec.constant(-self.value)
        return CurveSpec.from_callable(lambda t: -self(t0 + t1 - t), self.dim)
