"""Points, decay schedules, cost functions, and exact decayed-cost evaluation.

All types here are immutable values and all operations are pure, so they can
be shared freely between threads and between the streaming sketches.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np


class DimensionMismatchError(ValueError):
    """Raised when points of different dimensions are combined."""


@dataclass(frozen=True)
class Point:
    """A point in Euclidean space, held as a tuple of finite coordinates."""

    coords: tuple[float, ...]

    def __post_init__(self) -> None:
        coords = tuple(float(c) for c in self.coords)
        if not coords:
            raise ValueError("point needs at least one coordinate")
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"non-finite coordinate in {coords}")
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        return len(self.coords)


def point(*coords: float) -> Point:
    return Point(tuple(coords))


@dataclass(frozen=True)
class WeightedPoint:
    """A point with a nonnegative weight and its position in the stream."""

    point: Point
    weight: float
    arrival_index: int = 1

    def __post_init__(self) -> None:
        if self.weight < 0:
            raise ValueError(f"negative weight {self.weight}")
        if self.arrival_index < 1:
            raise ValueError(f"arrival index must be positive, got {self.arrival_index}")


@dataclass(frozen=True)
class PolynomialDecay:
    """Weight of the t-th most recent element is t**(-s)."""

    s: float

    def __post_init__(self) -> None:
        if self.s < 0:
            raise ValueError(f"decay exponent must be nonnegative, got {self.s}")


@dataclass(frozen=True)
class ExponentialDecay:
    """Weights halve every `half_life` steps.

    Weights are consumed in base-2 log domain: the element arriving at index t
    has log2-weight t / half_life.  Only weight ratios ever matter, and the
    linear value 2**(t/h) overflows doubles on long streams, so no caller works
    with linear exponential weights directly.
    """

    half_life: float

    def __post_init__(self) -> None:
        if self.half_life <= 0:
            raise ValueError(f"half-life must be positive, got {self.half_life}")


DecayFunction = Union[PolynomialDecay, ExponentialDecay]


def decay_weight(decay: DecayFunction, t: int, now: int) -> float:
    """Weight of the element that arrived at index t, seen from index `now`.

    Polynomial decay returns the plain weight (now - t + 1)**(-s).  Exponential
    decay returns the base-2 log-weight t / half_life (see ExponentialDecay).
    """
    if t < 1:
        raise ValueError(f"arrival index must be positive, got {t}")
    if t > now:
        raise ValueError(f"arrival index {t} is after current time {now}")
    if isinstance(decay, PolynomialDecay):
        return float(now - t + 1) ** (-decay.s)
    return t / decay.half_life


@dataclass(frozen=True)
class CostFunction:
    """Per-point clustering cost: distance, squared distance, or a robust loss.

    `triangle_factor` is the smallest lambda for which the transformed
    distance satisfies d(x,z) <= lambda * (d(x,y) + d(y,z)).  Plain distance
    gives 1, squared distance gives 2, and the Huber loss also gives 2 (its
    quadratic branch dominates).
    """

    kind: str
    triangle_factor: float
    huber_threshold: float | None = None

    def apply(self, dists: np.ndarray) -> np.ndarray:
        """Transform Euclidean distances into per-point costs."""
        if self.kind == "kmedian":
            return dists
        if self.kind == "kmeans":
            return dists * dists
        if self.kind == "huber":
            thr = self.huber_threshold
            assert thr is not None
            quad = 0.5 * dists * dists
            lin = thr * (dists - 0.5 * thr)
            return np.where(dists <= thr, quad, lin)
        raise ValueError(f"unknown cost kind {self.kind!r}")


K_MEDIAN = CostFunction("kmedian", 1.0)
K_MEANS = CostFunction("kmeans", 2.0)


def huber(threshold: float) -> CostFunction:
    if threshold <= 0:
        raise ValueError(f"Huber threshold must be positive, got {threshold}")
    return CostFunction("huber", 2.0, huber_threshold=threshold)


def cost_function_by_name(name: str, huber_threshold: float = 1.0) -> CostFunction:
    if name == "kmedian":
        return K_MEDIAN
    if name == "kmeans":
        return K_MEANS
    if name == "huber":
        return huber(huber_threshold)
    raise ValueError(f"unknown cost function {name!r}")


@dataclass(frozen=True)
class QuerySpace:
    """A weighted point set paired with a cost function and center count."""

    points: tuple[WeightedPoint, ...]
    cost: CostFunction
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")


def distance(p: Point, q: Point) -> float:
    """Euclidean distance."""
    if p.dim != q.dim:
        raise DimensionMismatchError(f"dimension mismatch: {p.dim} vs {q.dim}")
    return math.dist(p.coords, q.coords)


def coords_matrix(points: Sequence[Point]) -> np.ndarray:
    """Stack points into an (n, d) array, checking dimensions agree."""
    if not points:
        return np.empty((0, 0))
    dim = points[0].dim
    for p in points:
        if p.dim != dim:
            raise DimensionMismatchError(f"dimension mismatch: {p.dim} vs {dim}")
    return np.array([p.coords for p in points], dtype=float)


def weighted_arrays(points: Sequence[WeightedPoint]) -> tuple[np.ndarray, np.ndarray]:
    mat = coords_matrix([wp.point for wp in points])
    w = np.array([wp.weight for wp in points], dtype=float)
    return mat, w


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(len(a), len(b)) matrix of Euclidean distances."""
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def min_cost_to_centers(mat: np.ndarray, centers: np.ndarray, cost: CostFunction) -> np.ndarray:
    """Per-point cost to the nearest center."""
    return cost.apply(pairwise_distances(mat, centers)).min(axis=1)


def weighted_cost(
    points: Sequence[WeightedPoint], cost: CostFunction, centers: Sequence[Point]
) -> float:
    """Sum over points of weight times cost to the nearest center."""
    if not centers:
        raise ValueError("at least one center required")
    if not points:
        return 0.0
    mat, w = weighted_arrays(points)
    cmat = coords_matrix(list(centers))
    if cmat.shape[1] != mat.shape[1]:
        raise DimensionMismatchError(
            f"dimension mismatch: points {mat.shape[1]} vs centers {cmat.shape[1]}"
        )
    return float(w @ min_cost_to_centers(mat, cmat, cost))


def decayed_cost(qs: QuerySpace, centers: Sequence[Point]) -> float:
    """Exact cost of a candidate center set against a materialized query space."""
    return weighted_cost(qs.points, qs.cost, centers)
