"""Evidence about the Lie algebra generated by the fields N(·, v).

Nonlinear parallel translation along broken one-parameter-subgroup paths is
generated by the flows of −N(·, v), so iterated brackets of the fields
y ↦ N(y, e_i) span the tangent directions reachable by holonomy. Ranks are
computed numerically from samples on the unit sphere and are only ever a
lower bound on the dimension of that algebra.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Sequence

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from spraylab.errors import WordLimitError
from spraylab.integrators import IntegratorConfig
from spraylab.spray_model import SprayField
from spraylab.transport import loop_transport

log = logging.getLogger(__name__)

DEFAULT_WORD_CAP = 2000
DEFAULT_DEPTH_CAP = 5
DEFAULT_SVD_TOL = 1e-8
DEFAULT_SAMPLES = 8
# singular values below this count as zero even when they dominate
RANK_ABSOLUTE_FLOOR = 1e-12
RANK_LABEL = "generator-algebra rank lower bound"

Field = Callable[[Any], Any]


@dataclass(frozen=True)
class BracketWord:
    """Leaf ``i`` is the field N(·, e_i) (0-based); nodes are vector-field brackets."""

    leaf: int | None = None
    left: "BracketWord | None" = None
    right: "BracketWord | None" = None

    def __post_init__(self) -> None:
        as_leaf = self.leaf is not None and self.left is None and self.right is None
        as_node = self.leaf is None and self.left is not None and self.right is not None
        if not (as_leaf or as_node):
            raise ValueError("a word is either a leaf or a bracket of two words")

    @classmethod
    def bracket(cls, left: "BracketWord", right: "BracketWord") -> "BracketWord":
        return cls(left=left, right=right)

    @property
    def is_leaf(self) -> bool:
        return self.leaf is not None

    @cached_property
    def depth(self) -> int:
        if self.is_leaf:
            return 1
        return 1 + max(self.left.depth, self.right.depth)

    @cached_property
    def key(self) -> str:
        if self.is_leaf:
            return f"{self.leaf:04d}"
        return f"({self.left.key},{self.right.key})"

    def leaves(self) -> list[int]:
        if self.is_leaf:
            return [self.leaf]
        return self.left.leaves() + self.right.leaves()

    def __str__(self) -> str:
        if self.is_leaf:
            return str(self.leaf + 1)
        return f"[{self.left},{self.right}]"


def canonical_bracket(a: BracketWord, b: BracketWord) -> bool:
    """Left-heavy ordering: deeper word on the left, ties broken by key; drops [X, X]."""
    if a.depth != b.depth:
        return a.depth > b.depth
    return a.key < b.key


def generate_words(n_basis: int, max_depth: int, word_cap: int = DEFAULT_WORD_CAP) -> list[BracketWord]:
    """All canonical words of depth ≤ max_depth, ordered by depth."""
    if max_depth < 1:
        raise ValueError(f"max_depth must be at least 1, got {max_depth}")
    if n_basis < 1:
        raise ValueError(f"n_basis must be at least 1, got {n_basis}")
    levels: list[list[BracketWord]] = [[BracketWord(leaf=i) for i in range(n_basis)]]
    words = list(levels[0])
    for depth in range(2, max_depth + 1):
        top = levels[-1]
        lower = [w for level in levels[:-1] for w in level]
        new: list[BracketWord] = []
        for a in top:
            new.extend(BracketWord.bracket(a, b) for b in lower)
        for i, a in enumerate(top):
            for b in top[i + 1:]:
                x, y = (a, b) if canonical_bracket(a, b) else (b, a)
                new.append(BracketWord.bracket(x, y))
        if len(words) + len(new) > word_cap:
            raise WordLimitError(
                f"{len(words) + len(new)} words at depth {depth} exceed the cap of {word_cap}; "
                f"lower max_depth to {depth - 1} or raise word_cap"
            )
        levels.append(new)
        words.extend(new)
    log.info("generated %d words up to depth %d over %d generators", len(words), max_depth, n_basis)
    return words


# ── Vector-field evaluation ──────────────────────────────────────────


def vf_bracket(spray: SprayField, x: Field, y: Field) -> Field:
    """[X, Y](z) = DY(z; X(z)) − DX(z; Y(z))."""

    def evaluate(z: Any) -> Any:
        return spray.derivative(y, z, x(z)) - spray.derivative(x, z, y(z))

    return evaluate


def _generator(spray: SprayField, w: np.ndarray) -> Field:
    return lambda z: spray.connection(z, w)


def word_field(spray: SprayField, word: BracketWord) -> Field:
    if word.is_leaf:
        if not 0 <= word.leaf < spray.dim:
            raise ValueError(f"leaf {word.leaf + 1} outside 1..{spray.dim}")
        return _generator(spray, np.eye(spray.dim)[word.leaf])
    return vf_bracket(spray, word_field(spray, word.left), word_field(spray, word.right))


def vf_eval(
    spray: SprayField, word: BracketWord, y: Any, depth_cap: int = DEFAULT_DEPTH_CAP
) -> np.ndarray:
    if word.depth > depth_cap:
        raise WordLimitError(f"word {word} has depth {word.depth} above the cap of {depth_cap}")
    y = spray._check_domain(y)
    return np.asarray(word_field(spray, word)(y), dtype=float)


def generator_bracket(spray: SprayField, w1: Any, w2: Any, y: Any) -> np.ndarray:
    """[N(·, w1), N(·, w2)](y) for arbitrary algebra vectors."""
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    y = spray._check_domain(y)
    field = vf_bracket(spray, _generator(spray, w1), _generator(spray, w2))
    return np.asarray(field(y), dtype=float)


# ── Rank estimation ──────────────────────────────────────────────────


def sample_points(n: int, n_samples: int, seed: int = 0) -> np.ndarray:
    """Deterministic quasi-random points on the unit sphere of ℝⁿ."""
    if n_samples < 1:
        raise ValueError(f"n_samples must be at least 1, got {n_samples}")
    u = qmc.Halton(d=n, scramble=True, seed=seed).random(n_samples)
    eps = np.finfo(float).eps
    gauss = ndtri(np.clip(u, eps, 1.0 - eps))
    norms = np.linalg.norm(gauss, axis=1, keepdims=True)
    return gauss / norms


@dataclass(frozen=True, eq=False)
class DimensionEstimate:
    depth_used: int
    sample_points: np.ndarray
    singular_values: np.ndarray
    rank: int
    tolerance: float
    words_evaluated: int
    label: str = field(default=RANK_LABEL)

    def to_dict(self) -> dict[str, Any]:
        return {
            "depth": self.depth_used,
            "rank": self.rank,
            "label": self.label,
            "words_evaluated": self.words_evaluated,
            "tolerance": self.tolerance,
            "singular_values": self.singular_values.tolist(),
            "sample_points": self.sample_points.tolist(),
        }


def _numerical_rank(matrix: np.ndarray, svd_tol: float) -> tuple[np.ndarray, int]:
    if matrix.size == 0:
        return np.zeros(0), 0
    s = np.linalg.svd(matrix, compute_uv=False)
    cutoff = max(svd_tol * (s[0] if len(s) else 0.0), RANK_ABSOLUTE_FLOOR)
    return s, int(np.sum(s > cutoff))


def _evaluation_matrix(
    spray: SprayField,
    words: Sequence[BracketWord],
    points: np.ndarray,
) -> np.ndarray:
    """Row per word: its values at all sample points, concatenated."""
    fields = [word_field(spray, word) for word in words]

    def at_point(y: np.ndarray) -> np.ndarray:
        return np.array([np.asarray(f(y), dtype=float) for f in fields]).reshape(len(fields), -1)

    return np.hstack([at_point(y) for y in points])


def rank_profile(
    spray: SprayField,
    max_depth: int,
    n_samples: int = DEFAULT_SAMPLES,
    svd_tol: float = DEFAULT_SVD_TOL,
    seed: int = 0,
    word_cap: int = DEFAULT_WORD_CAP,
    depth_cap: int = DEFAULT_DEPTH_CAP,
) -> list[DimensionEstimate]:
    """Rank at every depth 1..max_depth from one evaluation pass; non-decreasing."""
    if max_depth > depth_cap:
        raise WordLimitError(f"max_depth {max_depth} above the depth cap of {depth_cap}")
    words = generate_words(spray.dim, max_depth, word_cap)
    points = sample_points(spray.dim, n_samples, seed)
    for y in points:
        spray._check_domain(y)
    matrix = _evaluation_matrix(spray, words, points)
    depths = np.array([word.depth for word in words])
    profile = []
    for depth in range(1, max_depth + 1):
        rows = matrix[depths <= depth]
        s, rank = _numerical_rank(rows, svd_tol)
        profile.append(DimensionEstimate(depth, points, s, rank, svd_tol, len(rows)))
        log.info("depth %d: rank %d from %d words", depth, rank, len(rows))
    return profile


def dim_estimate(
    spray: SprayField,
    max_depth: int,
    n_samples: int = DEFAULT_SAMPLES,
    svd_tol: float = DEFAULT_SVD_TOL,
    seed: int = 0,
    word_cap: int = DEFAULT_WORD_CAP,
) -> DimensionEstimate:
    return rank_profile(spray, max_depth, n_samples, svd_tol, seed, word_cap)[-1]


# ── Loop defects ─────────────────────────────────────────────────────


def commutator_legs(w1: Any, w2: Any, scale: float) -> list[tuple[np.ndarray, float]]:
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    return [(w1, scale), (w2, scale), (-w1, scale), (-w2, scale)]


def loop_defect(
    spray: SprayField,
    w1: Any,
    w2: Any,
    scale: float,
    y0: Any,
    cfg: IntegratorConfig | None = None,
) -> np.ndarray:
    """Transport around the commutator loop of exp(s·w1), exp(s·w2), minus y0."""
    if not scale > 0.0:
        raise ValueError(f"loop scale must be positive, got {scale}")
    y0 = np.asarray(y0, dtype=float)
    return loop_transport(spray, commutator_legs(w1, w2, scale), y0, cfg) - y0


@dataclass(frozen=True, eq=False)
class LoopDefectReport:
    scales: np.ndarray
    defects: np.ndarray
    slope: float
    alignment: float | None
    bracket: np.ndarray

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.defects, axis=1)

    def table(self) -> tuple[list[str], np.ndarray]:
        n = self.defects.shape[1]
        header = ["scale", "norm"] + [f"d{i + 1}" for i in range(n)]
        return header, np.column_stack([self.scales, self.norms, self.defects])

    def to_dict(self) -> dict[str, Any]:
        return {
            "scales": self.scales.tolist(),
            "defects": self.defects.tolist(),
            "norms": self.norms.tolist(),
            "slope": self.slope,
            "alignment": self.alignment,
            "bracket": self.bracket.tolist(),
        }


def loop_defect_ladder(
    spray: SprayField,
    w1: Any,
    w2: Any,
    y0: Any,
    scales: Sequence[float] = (0.2, 0.1, 0.05),
    cfg: IntegratorConfig | None = None,
) -> LoopDefectReport:
    """Defects over a ladder of scales, their log-log slope, and the alignment
    of the smallest-scale defect with [N(·, w1), N(·, w2)](y0).
    """
    scales = np.asarray(scales, dtype=float)
    if len(scales) < 2:
        raise ValueError("a defect ladder needs at least two scales")
    defects = np.array([loop_defect(spray, w1, w2, s, y0, cfg) for s in scales])
    norms = np.linalg.norm(defects, axis=1)
    if np.all(norms > 0.0):
        slope = float(np.polyfit(np.log(scales), np.log(norms), 1)[0])
    else:
        slope = math.nan
    bracket = generator_bracket(spray, w1, w2, y0)
    smallest = defects[int(np.argmin(scales))]
    denominator = float(np.linalg.norm(smallest) * np.linalg.norm(bracket))
    alignment = float(smallest @ bracket) / denominator if denominator > 0.0 else None
    log.info("loop defect slope %.4f, alignment %s", slope, alignment)
    return LoopDefectReport(scales, defects, slope, alignment, bracket)
