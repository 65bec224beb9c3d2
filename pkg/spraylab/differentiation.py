"""Directional derivatives: tagged dual numbers with a finite-difference fallback.

A :class:`Dual` carries a primal part ``re`` and a tangent part ``du``. Both are
numpy arrays (or floats) or, for higher derivatives, further duals. Every
perturbation gets a fresh integer tag and a dual only ever wraps parts with
smaller tags, so nested derivatives never mix up their directions. Operations
split operands at the largest tag present; an operand without that tag is a
constant at that level.

Only the primitives the spray evaluators need are provided: arithmetic,
``sqrt``, ``bilinear``/``linear`` maps, ``solve`` and ``stack``.
"""

from __future__ import annotations

import itertools
from enum import Enum
from typing import Any, Callable, Iterable, Sequence

import numpy as np

_next_tag = itertools.count(1).__next__

# cbrt(eps): balances truncation against rounding for central differences.
FD_BASE_STEP = float(np.cbrt(np.finfo(float).eps))


class Differentiation(Enum):
    DUAL = "dual"
    FINITE_DIFFERENCE = "finite_difference"


class Dual:
    """Truncated first-order jet ``re + du·ε`` with ``ε² = 0``."""

    __slots__ = ("re", "du", "tag")
    # Make ndarray operators return NotImplemented so our reflected ops run.
    __array_ufunc__ = None

    def __init__(self, re: Any, du: Any, tag: int):
        self.re = re
        self.du = du
        self.tag = tag

    @property
    def shape(self) -> tuple[int, ...]:
        return np.shape(primal(self))

    def __len__(self) -> int:
        return self.shape[0]

    def __getitem__(self, index: Any) -> "Dual":
        return Dual(self.re[index], self.du[index], self.tag)

    def __repr__(self) -> str:
        return f"Dual(tag={self.tag}, re={self.re!r}, du={self.du!r})"

    # ---------- arithmetic ----------
    def __neg__(self) -> "Dual":
        return Dual(-self.re, -self.du, self.tag)

    def __add__(self, other: Any) -> "Dual":
        return _add(self, other)

    def __radd__(self, other: Any) -> "Dual":
        return _add(other, self)

    def __sub__(self, other: Any) -> "Dual":
        return _add(self, -other)

    def __rsub__(self, other: Any) -> "Dual":
        return _add(other, -self)

    def __mul__(self, other: Any) -> "Dual":
        return _mul(self, other)

    def __rmul__(self, other: Any) -> "Dual":
        return _mul(other, self)

    def __truediv__(self, other: Any) -> "Dual":
        return _div(self, other)

    def __rtruediv__(self, other: Any) -> "Dual":
        return _div(other, self)

    def __matmul__(self, other: Any) -> "Dual":
        return bilinear(np.matmul, self, other)

    def __rmatmul__(self, other: Any) -> "Dual":
        return bilinear(np.matmul, other, self)

    def __pow__(self, power: int) -> Any:
        if not isinstance(power, (int, np.integer)) or power < 0:
            raise TypeError("Dual only supports non-negative integer powers")
        result: Any = 1.0
        for _ in range(int(power)):
            result = result * self
        return result


# ── Tag bookkeeping ─────────────────────────────────────────────────


def _outer_tag(*values: Any) -> int:
    return max((v.tag for v in values if isinstance(v, Dual)), default=0)


def _split(value: Any, tag: int) -> tuple[Any, Any]:
    if isinstance(value, Dual) and value.tag == tag:
        return value.re, value.du
    return value, None


def _sum_terms(*terms: Any) -> Any:
    total = None
    for term in terms:
        if term is None:
            continue
        total = term if total is None else total + term
    return total


def _add(a: Any, b: Any) -> Dual:
    tag = _outer_tag(a, b)
    a_re, a_du = _split(a, tag)
    b_re, b_du = _split(b, tag)
    return Dual(a_re + b_re, _sum_terms(a_du, b_du), tag)


def _mul(a: Any, b: Any) -> Dual:
    tag = _outer_tag(a, b)
    a_re, a_du = _split(a, tag)
    b_re, b_du = _split(b, tag)
    du = _sum_terms(
        None if a_du is None else a_du * b_re,
        None if b_du is None else a_re * b_du,
    )
    return Dual(a_re * b_re, du, tag)


def _div(a: Any, b: Any) -> Dual:
    tag = _outer_tag(a, b)
    a_re, a_du = _split(a, tag)
    b_re, b_du = _split(b, tag)
    quotient = a_re / b_re
    du = _sum_terms(
        None if a_du is None else a_du / b_re,
        None if b_du is None else -(quotient * b_du) / b_re,
    )
    return Dual(quotient, du, tag)


# ── Generic primitives (plain arrays or duals) ─────────────────────


def is_dual(value: Any) -> bool:
    return isinstance(value, Dual)


def primal(value: Any) -> Any:
    """Innermost real value of a (possibly nested) dual."""
    while isinstance(value, Dual):
        value = value.re
    return value


def as_operand(value: Any) -> Any:
    """Plain inputs become float arrays; duals pass through untouched."""
    if isinstance(value, Dual):
        return value
    return np.asarray(value, dtype=float)


def linear(fn: Callable[[np.ndarray], np.ndarray], x: Any) -> Any:
    """Apply a linear map defined on plain arrays to a plain or dual operand."""
    if isinstance(x, Dual):
        return Dual(linear(fn, x.re), linear(fn, x.du), x.tag)
    return fn(x)


def bilinear(fn: Callable[[Any, Any], Any], a: Any, b: Any) -> Any:
    """Apply a bilinear map defined on plain arrays with the product rule."""
    tag = _outer_tag(a, b)
    if tag == 0:
        return fn(a, b)
    a_re, a_du = _split(a, tag)
    b_re, b_du = _split(b, tag)
    du = _sum_terms(
        None if a_du is None else bilinear(fn, a_du, b_re),
        None if b_du is None else bilinear(fn, a_re, b_du),
    )
    return Dual(bilinear(fn, a_re, b_re), du, tag)


def sqrt(x: Any) -> Any:
    if isinstance(x, Dual):
        root = sqrt(x.re)
        return Dual(root, x.du / (2.0 * root), x.tag)
    return np.sqrt(x)


def solve(a: Any, b: Any) -> Any:
    """Solve ``a x = b``; tangents follow ``x' = a⁻¹ (b' − a' x)``."""
    tag = _outer_tag(a, b)
    if tag == 0:
        return np.linalg.solve(a, b)
    a_re, a_du = _split(a, tag)
    b_re, b_du = _split(b, tag)
    x_re = solve(a_re, b_re)
    rhs = b_du
    if a_du is not None:
        correction = bilinear(np.matmul, a_du, x_re)
        rhs = -correction if rhs is None else rhs - correction
    return Dual(x_re, solve(a_re, rhs), tag)


def stack(items: Iterable[Any], axis: int = 0) -> Any:
    items = list(items)
    tag = _outer_tag(*items)
    if tag == 0:
        return np.stack([np.asarray(item, dtype=float) for item in items], axis=axis)
    parts = [_split(item, tag) for item in items]
    re = stack([re for re, _ in parts], axis)
    du = stack(
        [du if du is not None else np.zeros(np.shape(primal(re))) for re, du in parts],
        axis,
    )
    return Dual(re, du, tag)


def total(x: Any) -> Any:
    return linear(np.sum, x)


# ── Derivatives ─────────────────────────────────────────────────────


def tangent(value: Any, tag: int) -> Any:
    """Coefficient of the ``tag`` perturbation in ``value`` (zero if absent)."""
    if isinstance(value, Dual) and value.tag == tag:
        return value.du
    return np.zeros(np.shape(primal(value)))


def directional(f: Callable[[Any], Any], y: Any, v: Any) -> Any:
    """Forward-mode derivative of ``f`` at ``y`` in direction ``v``."""
    tag = _next_tag()
    return tangent(f(Dual(as_operand(y), as_operand(v), tag)), tag)


def central_difference(f: Callable[[Any], Any], y: Any, v: Any) -> np.ndarray:
    """Central difference with one Richardson level; never steps across 0."""
    y = np.asarray(primal(y), dtype=float)
    v = np.asarray(primal(v), dtype=float)
    v_norm = float(np.linalg.norm(v))
    if v_norm == 0.0:
        return np.zeros(np.shape(f(y)))
    y_norm = float(np.linalg.norm(y))
    h = FD_BASE_STEP * max(1.0, y_norm) / v_norm
    if y_norm > 0.0:
        h = min(h, 0.25 * y_norm / v_norm)
    coarse = (np.asarray(f(y + h * v)) - np.asarray(f(y - h * v))) / (2.0 * h)
    fine = (np.asarray(f(y + 0.5 * h * v)) - np.asarray(f(y - 0.5 * h * v))) / h
    return (4.0 * fine - coarse) / 3.0


def derivative(
    f: Callable[[Any], Any],
    y: Any,
    v: Any,
    method: Differentiation = Differentiation.DUAL,
) -> Any:
    if method is Differentiation.DUAL:
        return directional(f, y, v)
    return central_difference(f, y, v)


def nested_derivative(
    f: Callable[[Any], Any],
    y: Any,
    directions: Sequence[Any],
    method: Differentiation = Differentiation.DUAL,
) -> Any:
    """k-th derivative ``Dᵏf(y)[v1, ..., vk]``."""
    if not directions:
        return f(y)
    first, rest = directions[0], directions[1:]
    return derivative(lambda z: nested_derivative(f, z, rest, method), y, first, method)
