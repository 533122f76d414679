"""Shared helpers for the test suite."""
from __future__ import annotations

import numpy as np

from decaystream.core import (
    K_MEDIAN,
    Point,
    WeightedPoint,
    weighted_cost,
)
from decaystream.oracle import QueryGrid


def gaussian_stream(
    seed: int,
    n: int,
    dim: int = 2,
    n_clusters: int = 3,
    spread: float = 2.0,
    extent: float = 100.0,
    integer_grid: bool = False,
) -> list[Point]:
    """Drifting Gaussian mixture stream used by several oracle-backed tests."""
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0, extent, size=(n_clusters, dim))
    labels = rng.integers(0, n_clusters, size=n)
    pts = centers[labels] + rng.normal(0, spread, size=(n, dim))
    pts = np.clip(pts, 0, extent)
    if integer_grid:
        pts = np.rint(pts)
    return [Point(tuple(float(c) for c in row)) for row in pts]


def grid_epsilon(summary: list[WeightedPoint], reference: list[WeightedPoint],
                 grid: QueryGrid) -> float:
    """Largest relative cost error of `summary` against `reference` over the
    grid; the grids used here keep every reference cost strictly positive."""
    worst = 0.0
    for cand in grid.candidate_center_sets:
        truth = weighted_cost(reference, K_MEDIAN, list(cand))
        approx = weighted_cost(summary, K_MEDIAN, list(cand))
        worst = max(worst, abs(approx / truth - 1.0))
    return worst


def random_weighted_set(rng: np.random.Generator, max_points: int,
                        offset: float = 0.0) -> list[WeightedPoint]:
    n = int(rng.integers(1, max_points + 1))
    coords = rng.uniform(0.0, 1.0, size=(n, 2)) + offset
    weights = rng.uniform(0.5, 2.0, size=n)
    return [
        WeightedPoint(Point((float(x), float(y))), float(w), i + 1)
        for i, ((x, y), w) in enumerate(zip(coords, weights))
    ]


def random_summary(rng: np.random.Generator,
                   reference: list[WeightedPoint]) -> list[WeightedPoint]:
    """An arbitrary re-weighted subset; its accuracy is measured, not assumed."""
    n = len(reference)
    size = int(rng.integers(1, n + 1))
    idx = rng.choice(n, size=size, replace=False)
    total = sum(wp.weight for wp in reference)
    kept = [reference[i] for i in idx]
    scale = total / sum(wp.weight for wp in kept)
    jitter = rng.uniform(0.9, 1.1, size=size)
    return [
        WeightedPoint(wp.point, wp.weight * scale * float(j), i + 1)
        for i, (wp, j) in enumerate(zip(kept, jitter))
    ]


def closure_query_grid(rng: np.random.Generator, domain_hint: float = 0.0) -> QueryGrid:
    """Candidate center pairs placed away from the unit boxes so every
    reference cost stays strictly positive."""
    cands = []
    for _ in range(5):
        centers = rng.uniform(3.0, 4.0, size=(2, 2)) + domain_hint
        cands.append(tuple(Point((float(x), float(y))) for x, y in centers))
    return QueryGrid(tuple(cands), "closure-test")
