"""Spray vector fields η of left-invariant sprays and their metric tensors.

A spray on a Lie group that is invariant under left translations is fixed by
its value at the identity: a positively 2-homogeneous map η on the algebra
minus the origin. Geodesics are integral curves of −η and every transport
equation goes through the connection operator

    N(y, w) = ½·Dη(y, w) − ½·[y, w].

Metric variants derive η from the fundamental tensor g_y of F through

    g_y(η(y), u) = g_y(y, [u, y])   for all u.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from itertools import combinations_with_replacement, permutations
from typing import Any, Callable, Iterable

import numpy as np

from spraylab import differentiation as ad
from spraylab.differentiation import Differentiation
from spraylab.errors import (
    DimensionError,
    DomainError,
    RegularityError,
    UnsupportedVariantError,
)
from spraylab.lie_algebra import LieAlgebra

log = logging.getLogger(__name__)

DEFAULT_Y_FLOOR = 1e-8
# Custom rational sprays: denominators below this are treated as vanishing.
DENOMINATOR_FLOOR = 1e-300


class SprayVariant(Enum):
    ZERO = "zero"
    RIEMANNIAN = "riemannian"
    RANDERS = "randers"
    QUADRATIC = "quadratic"
    CUSTOM = "custom"


METRIC_VARIANTS = frozenset({SprayVariant.RIEMANNIAN, SprayVariant.RANDERS})


@dataclass(frozen=True)
class FundamentalTensor:
    """g_y(u, v) = ½ ∂²/∂s∂t F²(y + su + tv) at 0."""

    y: np.ndarray
    g: np.ndarray

    def __call__(self, u: Any, v: Any) -> float:
        return float(np.asarray(u, dtype=float) @ self.g @ np.asarray(v, dtype=float))


@dataclass(frozen=True)
class CartanTensor:
    """C_y (rank 3) and its derivative C′_y (rank 4, last slot = direction)."""

    y: np.ndarray
    C: np.ndarray
    C_prime: np.ndarray

    def __call__(self, u: Any, v: Any, w: Any) -> float:
        return float(np.einsum("ijk,i,j,k->", self.C, u, v, w))

    def derivative(self, u: Any, v: Any, w: Any, z: Any) -> float:
        return float(np.einsum("ijkl,i,j,k,l->", self.C_prime, u, v, w, z))


class SprayField:
    """Base spray: subclasses supply ``_eta`` (dual-aware)."""

    variant: SprayVariant

    def __init__(
        self,
        algebra: LieAlgebra,
        *,
        y_floor: float = DEFAULT_Y_FLOOR,
        differentiation: Differentiation = Differentiation.DUAL,
    ):
        if not y_floor > 0.0:
            raise ValueError(f"y_floor must be positive, got {y_floor}")
        self.algebra = algebra
        self.y_floor = float(y_floor)
        self.differentiation = differentiation

    def __repr__(self) -> str:
        return f"{type(self).__name__}(algebra={self.algebra.name}, y_floor={self.y_floor:g})"

    @property
    def dim(self) -> int:
        return self.algebra.dim

    @property
    def is_metric(self) -> bool:
        return self.variant in METRIC_VARIANTS

    def _check_domain(self, y: Any) -> Any:
        y = self.algebra.check_vector(y, "base point")
        norm = float(np.linalg.norm(ad.primal(y)))
        if norm < self.y_floor:
            raise DomainError(
                f"spray undefined near 0: |y| = {norm:.3e} < y_floor = {self.y_floor:.1e}"
            )
        return y

    def derivative(self, f: Callable[[Any], Any], y: Any, v: Any) -> Any:
        """Directional derivative with this spray's differentiation scheme."""
        return ad.derivative(f, y, v, self.differentiation)

    # ── η and N ──────────────────────────────────────────────────────

    def _eta(self, y: Any) -> Any:
        raise NotImplementedError

    def eta(self, y: Any) -> Any:
        y = self._check_domain(y)
        try:
            return self._eta(y)
        except np.linalg.LinAlgError as exc:
            raise RegularityError(
                f"fundamental tensor is singular at y = {np.asarray(ad.primal(y)).tolist()}"
            ) from exc

    def d_eta(self, y: Any, w: Any) -> Any:
        y = self._check_domain(y)
        w = self.algebra.check_vector(w, "direction")
        return self.derivative(self.eta, y, w)

    def connection(self, y: Any, w: Any) -> Any:
        """N(y, w) = ½ Dη(y, w) − ½ [y, w]."""
        y = self._check_domain(y)
        w = self.algebra.check_vector(w, "direction")
        return 0.5 * self.d_eta(y, w) - 0.5 * self.algebra.bracket(y, w)

    # ── Metric data ──────────────────────────────────────────────────

    def _require_metric(self, what: str) -> None:
        if not self.is_metric:
            raise UnsupportedVariantError(
                f"{what} needs a metric spray (riemannian or randers), got {self.variant.value}"
            )

    def half_energy(self, y: Any) -> Any:
        self._require_metric("half_energy")
        raise NotImplementedError

    def finsler_norm(self, y: Any) -> float:
        self._require_metric("finsler_norm")
        y = np.asarray(ad.primal(self._check_domain(y)), dtype=float)
        return float(np.sqrt(2.0 * self.half_energy(y)))

    def fundamental_tensor(self, y: Any) -> FundamentalTensor:
        self._require_metric("fundamental_tensor")
        raise NotImplementedError

    def cartan_tensor(self, y: Any) -> CartanTensor:
        self._require_metric("cartan_tensor")
        raise NotImplementedError


class ZeroSpray(SprayField):
    """Canonical bi-invariant spray: geodesics are one-parameter subgroups."""

    variant = SprayVariant.ZERO

    def _eta(self, y: Any) -> np.ndarray:
        return np.zeros(self.dim)

    def d_eta(self, y: Any, w: Any) -> np.ndarray:
        self._check_domain(y)
        self.algebra.check_vector(w, "direction")
        return np.zeros(self.dim)

    def connection(self, y: Any, w: Any) -> Any:
        y = self._check_domain(y)
        return -0.5 * self.algebra.bracket(y, w)


class QuadraticSpray(SprayField):
    """η(y)^k = T[i, j, k] yⁱ yʲ (affine sprays)."""

    variant = SprayVariant.QUADRATIC

    def __init__(self, algebra: LieAlgebra, coefficients: Any, **kwargs: Any):
        super().__init__(algebra, **kwargs)
        t = np.array(coefficients, dtype=float)
        n = algebra.dim
        if t.shape != (n, n, n):
            raise DimensionError(f"quadratic coefficients must have shape {(n, n, n)}, got {t.shape}")
        t.setflags(write=False)
        self.coefficients = t

    def _eta(self, y: Any) -> Any:
        t = self.coefficients
        return ad.bilinear(lambda a, b: np.einsum("i,j,ijk->k", a, b, t), y, y)


@dataclass(frozen=True)
class Monomial:
    """coefficient · Π yᵢ^exponents[i], feeding component ``target`` (0-based)."""

    exponents: tuple[int, ...]
    coefficient: float
    target: int | None = None

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    def evaluate(self, y: Any) -> Any:
        value: Any = self.coefficient
        for i, power in enumerate(self.exponents):
            if power:
                value = value * y[i] ** power
        return value


class CustomSpray(SprayField):
    """User-supplied η: polynomial (optionally over a scalar polynomial) or callable."""

    variant = SprayVariant.CUSTOM

    def __init__(
        self,
        algebra: LieAlgebra,
        *,
        terms: Iterable[Monomial] = (),
        denominator: Iterable[Monomial] = (),
        function: Callable[[Any], Any] | None = None,
        **kwargs: Any,
    ):
        super().__init__(algebra, **kwargs)
        self.terms = tuple(terms)
        self.denominator = tuple(denominator)
        self.function = function
        if function is None:
            self._validate_terms()

    def _validate_terms(self) -> None:
        n = self.dim
        for term in self.terms + self.denominator:
            if len(term.exponents) != n or any(p < 0 for p in term.exponents):
                raise DimensionError(
                    f"monomial exponents {term.exponents} need {n} non-negative entries"
                )
        for term in self.terms:
            if term.target is None or not 0 <= term.target < n:
                raise DimensionError(f"monomial target {term.target} outside 0..{n - 1}")
        den_degrees = {term.degree for term in self.denominator} or {0}
        if len(den_degrees) != 1:
            raise ValueError(f"denominator is not homogeneous (degrees {sorted(den_degrees)})")
        expected = den_degrees.pop() + 2
        bad = [term.exponents for term in self.terms if term.degree != expected]
        if bad:
            raise ValueError(
                f"custom spray must be 2-homogeneous: numerator monomials need degree {expected}, got {bad}"
            )

    def _eta(self, y: Any) -> Any:
        if self.function is not None:
            return self.function(y)
        components: list[Any] = [0.0] * self.dim
        for term in self.terms:
            components[term.target] = components[term.target] + term.evaluate(y)
        numerator = ad.stack(components)
        if not self.denominator:
            return numerator
        denominator = sum(term.evaluate(y) for term in self.denominator)
        if abs(float(ad.primal(denominator))) < DENOMINATOR_FLOOR:
            raise RegularityError(
                f"custom spray denominator vanishes at y = {np.asarray(ad.primal(y)).tolist()}"
            )
        return numerator / denominator


# ── Metric sprays ────────────────────────────────────────────────────


def _checked_metric(algebra: LieAlgebra, metric: Any) -> np.ndarray:
    q = np.array(metric, dtype=float)
    n = algebra.dim
    if q.shape != (n, n):
        raise DimensionError(f"metric must have shape {(n, n)}, got {q.shape}")
    if np.max(np.abs(q - q.T)) > 1e-12 * max(1.0, np.max(np.abs(q))):
        raise RegularityError("metric matrix is not symmetric")
    try:
        np.linalg.cholesky(q)
    except np.linalg.LinAlgError as exc:
        raise RegularityError("metric matrix is not positive definite") from exc
    q.setflags(write=False)
    return q


class MetricSpray(SprayField):
    """Spray of a Finsler function F, given through ½F² (``half_energy``)."""

    def half_energy(self, y: Any) -> Any:
        raise NotImplementedError

    def _gradient(self, y: Any) -> Any:
        """∂(½F²)/∂y, i.e. the covector g_y(y, ·)."""
        return ad.stack([self.derivative(self.half_energy, y, e) for e in self.algebra.basis()])

    def _hessian(self, y: Any) -> Any:
        basis = self.algebra.basis()
        n = len(basis)
        entries: dict[tuple[int, int], Any] = {}
        for k, l in combinations_with_replacement(range(n), 2):
            entries[k, l] = ad.nested_derivative(
                self.half_energy, y, [basis[k], basis[l]], self.differentiation
            )
        rows = [ad.stack([entries[min(k, l), max(k, l)] for l in range(n)]) for k in range(n)]
        return ad.stack(rows)

    def _eta(self, y: Any) -> Any:
        c = self.algebra.c
        # row i holds [e_i, y]
        shifted = ad.linear(lambda a: np.einsum("ijk,j->ik", c, a), y)
        rhs = ad.bilinear(np.matmul, shifted, self._gradient(y))
        return ad.solve(self._hessian(y), rhs)

    def _plain_point(self, y: Any) -> np.ndarray:
        return np.asarray(ad.primal(self._check_domain(y)), dtype=float)

    def fundamental_tensor(self, y: Any) -> FundamentalTensor:
        y = self._plain_point(y)
        g = np.asarray(self._hessian(y), dtype=float)
        g = 0.5 * (g + g.T)
        smallest = float(np.linalg.eigvalsh(g)[0])
        if smallest <= 0.0:
            raise RegularityError(
                f"fundamental tensor not positive definite at y = {y.tolist()} (min eigenvalue {smallest:.3e})"
            )
        return FundamentalTensor(y, g)

    def cartan_form(self, y: Any, u: Any, v: Any, w: Any) -> Any:
        """C_y(u, v, w) evaluated directly, without building the full array."""
        y = self._check_domain(y)
        return 0.5 * ad.nested_derivative(self.half_energy, y, [u, v, w], self.differentiation)

    def cartan_derivative(self, y: Any, u: Any, v: Any, w: Any, z: Any) -> Any:
        """C′_y(u, v, w, z): derivative of C_y(u, v, w) as y moves along z."""
        y = self._check_domain(y)
        return 0.5 * ad.nested_derivative(self.half_energy, y, [u, v, w, z], self.differentiation)

    def cartan_tensor(self, y: Any) -> CartanTensor:
        y = self._plain_point(y)
        n = self.dim
        basis = self.algebra.basis()
        C = np.zeros((n,) * 3)
        C_prime = np.zeros((n,) * 4)
        for rank, out in ((3, C), (4, C_prime)):
            for index in combinations_with_replacement(range(n), rank):
                value = 0.5 * float(
                    ad.nested_derivative(
                        self.half_energy, y, [basis[i] for i in index], self.differentiation
                    )
                )
                for perm in set(permutations(index)):
                    out[perm] = value
        return CartanTensor(y, C, C_prime)


class RiemannianSpray(MetricSpray):
    """F(y)² = yᵀQy; g_y ≡ Q."""

    variant = SprayVariant.RIEMANNIAN

    def __init__(self, algebra: LieAlgebra, metric: Any, **kwargs: Any):
        super().__init__(algebra, **kwargs)
        self.metric = _checked_metric(algebra, metric)

    def half_energy(self, y: Any) -> Any:
        q = self.metric
        return 0.5 * ad.bilinear(lambda a, b: a @ q @ b, y, y)

    def _gradient(self, y: Any) -> Any:
        q = self.metric
        return ad.linear(lambda a: q @ a, y)

    def _hessian(self, y: Any) -> np.ndarray:
        return self.metric

    def cartan_form(self, y: Any, u: Any, v: Any, w: Any) -> float:
        self._check_domain(y)
        return 0.0

    def cartan_derivative(self, y: Any, u: Any, v: Any, w: Any, z: Any) -> float:
        self._check_domain(y)
        return 0.0

    def cartan_tensor(self, y: Any) -> CartanTensor:
        y = self._plain_point(y)
        n = self.dim
        return CartanTensor(y, np.zeros((n,) * 3), np.zeros((n,) * 4))


class RandersSpray(MetricSpray):
    """F(y) = √(yᵀQy) + b·y with √(bᵀQ⁻¹b) < 1."""

    variant = SprayVariant.RANDERS

    def __init__(self, algebra: LieAlgebra, metric: Any, beta: Any, **kwargs: Any):
        super().__init__(algebra, **kwargs)
        self.metric = _checked_metric(algebra, metric)
        b = np.array(beta, dtype=float)
        if b.shape != (algebra.dim,):
            raise DimensionError(f"beta must have {algebra.dim} components, got shape {b.shape}")
        b_norm = float(np.sqrt(b @ np.linalg.solve(self.metric, b)))
        if b_norm >= 1.0:
            raise RegularityError(f"randers spray needs |b| < 1 in the metric, got {b_norm:.6g}")
        b.setflags(write=False)
        self.beta = b
        self.beta_norm = b_norm
        log.debug("randers spray on %s with |b| = %.6g", algebra.name, b_norm)

    def half_energy(self, y: Any) -> Any:
        q, b = self.metric, self.beta
        alpha = ad.sqrt(ad.bilinear(lambda u, v: u @ q @ v, y, y))
        f = alpha + ad.linear(lambda u: b @ u, y)
        return 0.5 * f * f

