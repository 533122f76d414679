"""Offline black boxes: coreset construction and constant-approximate k-median.

Both are randomized but fully deterministic given their seed.  The coreset
constructor is sensitivity sampling over a D^2-seeded bicriteria solution; the
k-median solver is weighted single-swap local search over the input points
(discrete medians), whose certified approximation constant is
LOCAL_SEARCH_APPROX.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    CostFunction,
    Point,
    WeightedPoint,
    min_cost_to_centers,
    pairwise_distances,
    weighted_arrays,
    weighted_cost,
)

# Single-swap local search for k-median is a 5-approximation; every downstream
# constant is derived from this symbol rather than from a hard-coded value.
LOCAL_SEARCH_APPROX = 5.0

DEFAULT_FAILURE_PROB = 0.05

# Relative improvement a swap must achieve for local search to accept it.
SWAP_TOL = 1e-4

# Leading constant of the sensitivity-sampling size budget.
SAMPLE_CONSTANT = 2.0


@dataclass(frozen=True)
class Coreset:
    """A weighted summary together with the epsilon it guarantees."""

    entries: tuple[WeightedPoint, ...]
    epsilon: float
    source_size: int

    def __post_init__(self) -> None:
        if not (0 <= self.epsilon < 1):
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")

    @property
    def total_weight(self) -> float:
        return sum(e.weight for e in self.entries)


@dataclass(frozen=True)
class KmResult:
    """Centers returned by the offline k-median solver plus their exact cost."""

    centers: tuple[Point, ...]
    lambda_cost: float


def _as_rng(rng_seed: int | np.random.Generator) -> np.random.Generator:
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed
    return np.random.default_rng(rng_seed)


def _coalesce(points: Sequence[WeightedPoint]) -> list[WeightedPoint]:
    """Merge coincident points, summing weights; keeps first arrival index."""
    merged: dict[tuple[float, ...], WeightedPoint] = {}
    for wp in points:
        prev = merged.get(wp.point.coords)
        if prev is None:
            merged[wp.point.coords] = wp
        else:
            merged[wp.point.coords] = WeightedPoint(
                prev.point, prev.weight + wp.weight, prev.arrival_index
            )
    return list(merged.values())


def coreset_size_budget(
    n: int, k: int, dim: int, epsilon: float, failure_prob: float = DEFAULT_FAILURE_PROB
) -> int:
    """Sample count for sensitivity sampling; monotone in 1/epsilon and log n."""
    terms = k * dim * max(math.log2(k), 1.0) + math.log2(1.0 / failure_prob)
    return math.ceil(SAMPLE_CONSTANT * terms / (epsilon * epsilon))


def d2_seeding(
    points: Sequence[WeightedPoint],
    cost: CostFunction,
    k: int,
    rng_seed: int | np.random.Generator = 0,
) -> list[Point]:
    """Weighted D^2 seeding: the first seed is drawn proportionally to weight,
    each later seed proportionally to weight times squared distance to the
    current seed set.  Squared distance is used for every cost function; it is
    the usual bicriteria initializer and concentrates sharply enough that well
    separated clusters are each hit with high probability.

    Returns k distinct seeds whenever k distinct points exist.
    """
    if not points:
        raise ValueError("d2_seeding needs a nonempty input")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    rng = _as_rng(rng_seed)
    pts = _coalesce(points)
    mat, w = weighted_arrays(pts)
    n = len(pts)
    if w.sum() <= 0:
        w = np.ones(n)

    first = int(rng.choice(n, p=w / w.sum()))
    chosen = [first]
    best = pairwise_distances(mat, mat[first : first + 1])[:, 0] ** 2
    while len(chosen) < min(k, n):
        scores = w * best
        total = scores.sum()
        if total <= 0:
            # All remaining mass sits on the seeds; fill with arbitrary
            # distinct points so the promised seed count is met.
            remaining = [i for i in range(n) if i not in chosen]
            idx = remaining[0]
        else:
            idx = int(rng.choice(n, p=scores / total))
        if idx in chosen:
            continue
        chosen.append(idx)
        dist_new = pairwise_distances(mat, mat[idx : idx + 1])[:, 0] ** 2
        best = np.minimum(best, dist_new)
    return [pts[i].point for i in chosen]


def cs_ram(
    points: Sequence[WeightedPoint],
    cost: CostFunction,
    k: int,
    epsilon: float,
    rng_seed: int | np.random.Generator = 0,
    failure_prob: float = DEFAULT_FAILURE_PROB,
) -> Coreset:
    """Offline coreset construction via sensitivity sampling.

    When the sample budget is no smaller than the number of distinct input
    points (or k covers them all), the input is returned verbatim as an exact
    0-coreset.  The sampled summary has its total weight rescaled to match the
    input exactly, so constant queries are preserved without error.
    """
    if not points:
        raise ValueError("cs_ram needs a nonempty input")
    if not (0 < epsilon < 1):
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    rng = _as_rng(rng_seed)
    source_size = len(points)
    pts = _coalesce(points)
    n = len(pts)
    dim = pts[0].point.dim
    budget = coreset_size_budget(n, k, dim, epsilon, failure_prob)
    if k >= n or budget >= n:
        return Coreset(tuple(pts), 0.0, source_size)

    mat, w = weighted_arrays(pts)
    total_weight = float(w.sum())
    seeds = d2_seeding(pts, cost, min(2 * k, n), rng)
    seed_mat = np.array([s.coords for s in seeds])
    dists = cost.apply(pairwise_distances(mat, seed_mat))
    assignment = dists.argmin(axis=1)
    point_cost = w * dists[np.arange(n), assignment]
    total_cost = float(point_cost.sum())

    cluster_weight = np.zeros(len(seeds))
    np.add.at(cluster_weight, assignment, w)
    # Sensitivity upper bound: relative cost share plus relative weight share
    # within the point's bicriteria cluster.
    sens = w / np.maximum(cluster_weight[assignment], 1e-300)
    if total_cost > 0:
        sens = sens + point_cost / total_cost
    probs = sens / sens.sum()

    idx = rng.choice(n, size=budget, replace=True, p=probs)
    sampled_weight = w[idx] / (budget * probs[idx])
    unique, inverse = np.unique(idx, return_inverse=True)
    weights = np.zeros(len(unique))
    np.add.at(weights, inverse, sampled_weight)
    # Rescale so the summary's total weight matches the input exactly.
    weights *= total_weight / weights.sum()

    entries = tuple(
        WeightedPoint(pts[i].point, float(weights[j]), pts[i].arrival_index)
        for j, i in enumerate(unique)
    )
    return Coreset(entries, epsilon, source_size)


def _local_search(
    mat: np.ndarray, w: np.ndarray, cost: CostFunction, start: list[int]
) -> list[int]:
    """Single-swap local search over input points; accepts a swap only if it
    improves the cost by a relative factor of at least SWAP_TOL."""
    n = len(mat)
    cost_matrix = cost.apply(pairwise_distances(mat, mat))
    current = list(start)

    def total(idx: Sequence[int]) -> float:
        return float(w @ cost_matrix[:, list(idx)].min(axis=1))

    best_cost = total(current)
    improved = True
    while improved and best_cost > 0:
        improved = False
        for pos in range(len(current)):
            rest = current[:pos] + current[pos + 1 :]
            if rest:
                base = cost_matrix[:, rest].min(axis=1)
            else:
                base = np.full(n, np.inf)
            # Cost after swapping in each candidate center, vectorized.
            cand_costs = np.minimum(base[None, :], cost_matrix.T).dot(w)
            j = int(cand_costs.argmin())
            new_cost = float(cand_costs[j])
            if new_cost < best_cost * (1 - SWAP_TOL):
                current[pos] = j
                best_cost = new_cost
                improved = True
    return current


def km_ram(
    points: Sequence[WeightedPoint],
    cost: CostFunction,
    k: int,
    rng_seed: int | np.random.Generator = 0,
) -> KmResult:
    """Offline constant-approximate weighted k-median with discrete medians.

    lambda_cost is always the exact recomputed cost of the returned centers on
    the input, never the solver's internal running value.
    """
    if not points:
        raise ValueError("km_ram needs a nonempty input")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    rng = _as_rng(rng_seed)
    pts = _coalesce(points)
    n = len(pts)
    if k >= n:
        centers = tuple(wp.point for wp in pts)
        return KmResult(centers, 0.0)

    mat, w = weighted_arrays(pts)
    seeds = d2_seeding(pts, cost, k, rng)
    coord_index = {wp.point.coords: i for i, wp in enumerate(pts)}
    start = [coord_index[s.coords] for s in seeds]
    final = _local_search(mat, w, cost, start)
    centers = tuple(pts[i].point for i in final)
    lam = weighted_cost(points, cost, centers)
    return KmResult(centers, lam)
