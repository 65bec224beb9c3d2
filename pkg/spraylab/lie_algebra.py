"""Finite-dimensional real Lie algebras given by structure constants."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping

import numpy as np
from scipy.linalg import null_space

from spraylab import differentiation as ad
from spraylab.errors import DimensionError, InvalidAlgebraError, UnknownCatalogEntryError

log = logging.getLogger(__name__)

JACOBI_TOLERANCE = 1e-8
CENTER_RCOND = 1e-10


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    """Lie algebra with ``c[i, j, k]`` = coefficient of e_k in [e_i, e_j].

    Immutable after construction; bracket and ad accept dual numbers so spray
    evaluators can be differentiated through them.
    """

    c: np.ndarray
    labels: tuple[str, ...] = ()
    name: str = "custom"

    def __post_init__(self) -> None:
        c = np.array(self.c, dtype=float)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]) or c.shape[0] < 1:
            raise InvalidAlgebraError(f"structure constants must have shape (n, n, n), got {c.shape}")
        c.setflags(write=False)
        n = c.shape[0]
        labels = tuple(self.labels) if self.labels else tuple(f"e{i + 1}" for i in range(n))
        if len(labels) != n:
            raise InvalidAlgebraError(f"expected {n} labels, got {len(labels)}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    # ── Construction ─────────────────────────────────────────────────

    @classmethod
    def from_structure_constants(
        cls,
        c: Any,
        labels: Iterable[str] = (),
        name: str = "custom",
        validate: bool = True,
    ) -> "LieAlgebra":
        """Antisymmetrize ``c`` and (optionally) reject Jacobi violations."""
        c = np.asarray(c, dtype=float)
        if c.ndim != 3:
            raise InvalidAlgebraError(f"structure constants must be a rank-3 array, got ndim={c.ndim}")
        algebra = cls(0.5 * (c - c.transpose(1, 0, 2)), tuple(labels), name)
        log.debug("built algebra %s of dimension %d", name, algebra.dim)
        if validate:
            defect = algebra.jacobi_defect()
            if defect > JACOBI_TOLERANCE:
                raise InvalidAlgebraError(
                    f"Jacobi identity violated (defect {defect:.3e} > {JACOBI_TOLERANCE:g})"
                )
        return algebra

    @classmethod
    def from_brackets(
        cls,
        dimension: int,
        brackets: Iterable[tuple[int, int, Mapping[int, float]]],
        labels: Iterable[str] = (),
        name: str = "custom",
    ) -> "LieAlgebra":
        """Build from 1-based ``(i, j, {k: value})`` entries for [e_i, e_j].

        A pair given in one orientation gets its antisymmetric partner filled
        in; pairs given both ways are averaged by the antisymmetrization.
        """
        if dimension < 1:
            raise InvalidAlgebraError(f"dimension must be positive, got {dimension}")
        raw = np.zeros((dimension, dimension, dimension))
        given: set[tuple[int, int]] = set()
        for i, j, coeffs in brackets:
            for k, value in coeffs.items():
                for index in (i, j, int(k)):
                    if not 1 <= index <= dimension:
                        raise InvalidAlgebraError(
                            f"bracket index {index} outside 1..{dimension}"
                        )
                raw[i - 1, j - 1, int(k) - 1] += float(value)
            given.add((i - 1, j - 1))
        for i, j in given:
            if (j, i) not in given:
                raw[j, i] = -raw[i, j]
        return cls.from_structure_constants(raw, labels, name)

    # ── Operations ───────────────────────────────────────────────────

    def check_vector(self, x: Any, what: str = "vector") -> Any:
        x = ad.as_operand(x)
        shape = np.shape(ad.primal(x))
        if shape != (self.dim,):
            raise DimensionError(f"{what} has shape {shape}, algebra {self.name} has dimension {self.dim}")
        return x

    def basis(self) -> list[np.ndarray]:
        return list(np.eye(self.dim))

    def bracket(self, x: Any, y: Any) -> Any:
        x = self.check_vector(x, "left bracket argument")
        y = self.check_vector(y, "right bracket argument")
        c = self.c
        return ad.bilinear(lambda a, b: np.einsum("i,j,ijk->k", a, b, c), x, y)

    def ad_matrix(self, x: Any) -> Any:
        """Matrix ``M`` with ``M @ w == bracket(x, w)``."""
        x = self.check_vector(x)
        c = self.c
        return ad.linear(lambda a: np.einsum("i,ijk->kj", a, c), x)

    def jacobi_defect(self) -> float:
        c = self.c
        cyclic = (
            np.einsum("ijm,mkl->ijkl", c, c)
            + np.einsum("jkm,mil->ijkl", c, c)
            + np.einsum("kim,mjl->ijkl", c, c)
        )
        return float(np.max(np.abs(cyclic)))

    def center(self) -> list[np.ndarray]:
        stacked = np.vstack([self.ad_matrix(e) for e in self.basis()])
        kernel = null_space(stacked, rcond=CENTER_RCOND)
        return [kernel[:, k] for k in range(kernel.shape[1])]

    def killing_form(self) -> np.ndarray:
        ads = [self.ad_matrix(e) for e in self.basis()]
        return np.array([[np.trace(a @ b) for b in ads] for a in ads])

    def is_unimodular(self, tol: float = 1e-12) -> bool:
        return all(abs(np.trace(self.ad_matrix(e))) <= tol for e in self.basis())

    def is_ad_invariant(self, metric: Any, tol: float = 1e-12) -> bool:
        """True when <[x,y],z> + <y,[x,z]> vanishes on all basis triples."""
        q = np.asarray(metric, dtype=float)
        return all(
            np.max(np.abs(m.T @ q + q @ m)) <= tol
            for m in (self.ad_matrix(e) for e in self.basis())
        )


# ── Catalog ──────────────────────────────────────────────────────────


def _from_table(name: str, dimension: int, table: dict[tuple[int, int], dict[int, float]]) -> LieAlgebra:
    brackets = [(i, j, coeffs) for (i, j), coeffs in table.items()]
    return LieAlgebra.from_brackets(dimension, brackets, name=name)


def _abelian(n: int) -> LieAlgebra:
    return LieAlgebra(np.zeros((n, n, n)), name=f"abelian_{n}")


_CATALOG: dict[str, Callable[[], LieAlgebra]] = {
    "su2": lambda: _from_table("su2", 3, {(1, 2): {3: 1.0}, (2, 3): {1: 1.0}, (3, 1): {2: 1.0}}),
    "heisenberg3": lambda: _from_table("heisenberg3", 3, {(1, 2): {3: 1.0}}),
    # basis (h, e, f)
    "sl2r": lambda: _from_table(
        "sl2r", 3, {(1, 2): {2: 2.0}, (1, 3): {3: -2.0}, (2, 3): {1: 1.0}}
    ),
    # rotation e1, translations e2, e3
    "e2": lambda: _from_table("e2", 3, {(1, 2): {3: 1.0}, (1, 3): {2: -1.0}}),
    "solvable2": lambda: _from_table("solvable2", 2, {(1, 2): {2: 1.0}}),
}

_ABELIAN = re.compile(r"abelian_(\d+)$")

CATALOG_NAMES = ("abelian_n",) + tuple(_CATALOG)


def catalog(name: str) -> LieAlgebra:
    """Catalog algebra by name: abelian_<n>, heisenberg3, su2, sl2r, e2, solvable2."""
    match = _ABELIAN.match(name)
    if match and int(match.group(1)) >= 1:
        return _abelian(int(match.group(1)))
    try:
        builder = _CATALOG[name]
    except KeyError:
        raise UnknownCatalogEntryError(
            f"unknown algebra '{name}' (known: {', '.join(CATALOG_NAMES)})"
        ) from None
    return builder()
