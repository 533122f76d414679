"""Brute-force ground truth: exact decayed costs, exhaustive discrete
k-median, and coreset verification over finite query grids."""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .core import (
    CostFunction,
    DecayFunction,
    ExponentialDecay,
    Point,
    WeightedPoint,
    coords_matrix,
    decay_weight,
    min_cost_to_centers,
    pairwise_distances,
    weighted_arrays,
)
from .offline import Coreset, _coalesce

# Exhaustive search refuses instances with more candidate center sets than
# this; it keeps the full test suite fast.
SUBSET_BUDGET = 50_000

# Numerical slack added to the coreset acceptance interval.
VERIFY_SLACK = 1e-9


class BudgetExceededError(RuntimeError):
    """Raised when an exhaustive search would exceed the combinatorial budget."""


@dataclass(frozen=True)
class QueryGrid:
    """A finite stand-in for the set of all candidate center sets."""

    candidate_center_sets: tuple[tuple[Point, ...], ...]
    provenance: str

    def __post_init__(self) -> None:
        if not self.candidate_center_sets:
            raise ValueError("query grid must be nonempty")
        sizes = {len(c) for c in self.candidate_center_sets}
        if len(sizes) != 1:
            raise ValueError(f"candidates have mixed center counts {sizes}")


def all_subsets_grid(points: Sequence[Point], k: int) -> QueryGrid:
    distinct = list(dict.fromkeys(p.coords for p in points))
    count = math.comb(len(distinct), k)
    if count > SUBSET_BUDGET:
        raise BudgetExceededError(
            f"{count} candidate sets exceed the budget of {SUBSET_BUDGET}"
        )
    cands = tuple(
        tuple(Point(c) for c in combo) for combo in combinations(distinct, k)
    )
    return QueryGrid(cands, "AllSubsets")


def sampled_subsets_grid(
    points: Sequence[Point], k: int, count: int, seed: int
) -> QueryGrid:
    distinct = [Point(c) for c in dict.fromkeys(p.coords for p in points)]
    if len(distinct) < k:
        raise ValueError(f"need at least {k} distinct points, got {len(distinct)}")
    rng = np.random.default_rng(seed)
    cands = []
    for _ in range(count):
        idx = rng.choice(len(distinct), size=k, replace=False)
        cands.append(tuple(distinct[i] for i in idx))
    return QueryGrid(tuple(cands), f"SampledSubsets({count}, seed={seed})")


def lattice_grid(lo: float, hi: float, step: float, dim: int, k: int) -> QueryGrid:
    """Candidate centers on a regular lattice; all k-subsets of lattice nodes."""
    axis = np.arange(lo, hi + step / 2, step)
    nodes = [Point(tuple(c)) for c in np.stack(np.meshgrid(*([axis] * dim)), -1).reshape(-1, dim)]
    count = math.comb(len(nodes), k)
    if count > SUBSET_BUDGET:
        raise BudgetExceededError(
            f"{count} candidate sets exceed the budget of {SUBSET_BUDGET}"
        )
    cands = tuple(tuple(c) for c in combinations(nodes, k))
    return QueryGrid(cands, f"LatticeGrid(step={step})")


def decayed_weights(
    decay: DecayFunction, arrival_indices: Sequence[int], now: int
) -> np.ndarray:
    """Materialized decayed weights; exponential weights are normalized by the
    maximum weight so they stay representable."""
    raw = np.array([decay_weight(decay, t, now) for t in arrival_indices], dtype=float)
    if isinstance(decay, ExponentialDecay):
        return np.exp2(raw - raw.max())
    return raw


def exact_decayed_cost(
    points: Sequence[Point],
    decay: DecayFunction,
    now: int,
    cost: CostFunction,
    centers: Sequence[Point],
    arrival_indices: Sequence[int] | None = None,
) -> float:
    """Exact decayed clustering cost of the stream against one candidate set.

    Arrival indices default to stream order 1..n.  For exponential decay the
    value is normalized by the maximum weight; ratios between candidate sets
    are unaffected.
    """
    if arrival_indices is None:
        arrival_indices = list(range(1, len(points) + 1))
    if any(t > now for t in arrival_indices):
        raise ValueError("arrival indices must not exceed `now`")
    w = decayed_weights(decay, arrival_indices, now)
    mat = coords_matrix(list(points))
    cmat = coords_matrix(list(centers))
    return float(w @ min_cost_to_centers(mat, cmat, cost))


def exhaustive_kmedian(
    points: Sequence[WeightedPoint], cost: CostFunction, k: int
) -> tuple[tuple[Point, ...], float]:
    """Exact optimum over all k-subsets of distinct input points."""
    if not points:
        raise ValueError("exhaustive_kmedian needs a nonempty input")
    pts = _coalesce(points)
    n = len(pts)
    if k >= n:
        return tuple(wp.point for wp in pts), 0.0
    count = math.comb(n, k)
    if count > SUBSET_BUDGET:
        raise BudgetExceededError(
            f"{count} candidate sets exceed the budget of {SUBSET_BUDGET}"
        )
    mat, w = weighted_arrays(pts)
    cost_matrix = cost.apply(pairwise_distances(mat, mat))
    best_cost = math.inf
    best: tuple[int, ...] | None = None
    combos = np.array(list(combinations(range(n), k)))
    chunk = max(1, 4_000_000 // (n * k))
    for start in range(0, len(combos), chunk):
        block = combos[start : start + chunk]
        per_point = cost_matrix[block].min(axis=1)
        totals = per_point @ w
        j = int(totals.argmin())
        if totals[j] < best_cost:
            best_cost = float(totals[j])
            best = tuple(int(i) for i in block[j])
    assert best is not None
    return tuple(pts[i].point for i in best), best_cost


@dataclass(frozen=True)
class VerifyReport:
    max_rel_error: float
    passed: bool
    epsilon: float
    candidates: int
    worst_candidate: tuple[Point, ...] | None = None


def verify_coreset(
    coreset: Coreset | Sequence[WeightedPoint],
    reference: Sequence[WeightedPoint],
    cost: CostFunction,
    grid: QueryGrid,
    epsilon: float,
) -> VerifyReport:
    """Check the coreset inequality on every grid candidate.

    Passes iff every cost ratio lies in [1 - eps - slack, 1 + eps + slack].
    A zero reference cost with a zero summary cost counts as an exact match;
    with a nonzero summary cost it fails outright.
    """
    entries = coreset.entries if isinstance(coreset, Coreset) else tuple(coreset)
    z_mat, z_w = weighted_arrays(entries)
    p_mat, p_w = weighted_arrays(list(reference))
    max_err = 0.0
    worst = None
    for cand in grid.candidate_center_sets:
        cmat = coords_matrix(list(cand))
        summary = float(z_w @ min_cost_to_centers(z_mat, cmat, cost)) if len(entries) else 0.0
        truth = float(p_w @ min_cost_to_centers(p_mat, cmat, cost))
        if truth == 0.0:
            err = math.inf if summary != 0.0 else 0.0
        else:
            err = abs(summary / truth - 1.0)
        if err > max_err:
            max_err = err
            worst = cand
    passed = max_err <= epsilon + VERIFY_SLACK
    return VerifyReport(max_err, passed, epsilon, len(grid.candidate_center_sets), worst)
