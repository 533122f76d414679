"""Desk-scale experiment runner: synthetic streams, metrics, and space curves.

Each experiment runs one algorithm over several seeds, optionally validates
against the exhaustive oracle, and emits one CSV row per seed.  Plotting is
deliberately left to the report layer; this module only produces data.
"""
from __future__ import annotations

import csv
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .core import CostFunction, ExponentialDecay, K_MEDIAN, Point, PolynomialDecay, WeightedPoint
from .expdecay import ExpDecayClusterer, StreamConfig
from .offline import km_ram
from .oracle import BudgetExceededError, decayed_weights, exhaustive_kmedian


@dataclass(frozen=True)
class GaussianClusters:
    """Points drawn around fixed cluster centers, optionally drifting."""

    n_clusters: int = 3
    spread: float = 1.0
    drift: float = 0.0
    extent: float = 100.0
    integer_grid: bool = False


@dataclass(frozen=True)
class UniformBox:
    extent: float = 100.0
    integer_grid: bool = False


@dataclass(frozen=True)
class Adversarial:
    """Structured worst-case-ish streams: 'sorted_line' walks monotonically
    across the box; 'repeated_bursts' replays a few locations in bursts."""

    kind: str = "sorted_line"
    extent: float = 100.0
    integer_grid: bool = False


Generator = Union[GaussianClusters, UniformBox, Adversarial]


def generate_stream(gen: Generator, n: int, dim: int, seed: int) -> list[Point]:
    rng = np.random.default_rng(seed)
    if isinstance(gen, GaussianClusters):
        centers = rng.uniform(gen.extent * 0.1, gen.extent * 0.9, size=(gen.n_clusters, dim))
        which = rng.integers(gen.n_clusters, size=n)
        drift = gen.drift * np.linspace(0, 1, n)[:, None] * gen.extent * 0.1
        coords = centers[which] + rng.normal(0, gen.spread, size=(n, dim)) + drift
    elif isinstance(gen, UniformBox):
        coords = rng.uniform(0, gen.extent, size=(n, dim))
    elif isinstance(gen, Adversarial):
        if gen.kind == "sorted_line":
            base = np.linspace(0, gen.extent, n)[:, None]
            coords = np.repeat(base, dim, axis=1)
        elif gen.kind == "repeated_bursts":
            sites = rng.uniform(0, gen.extent, size=(4, dim))
            which = np.repeat(np.arange(4), math.ceil(n / 4))[:n]
            coords = sites[which]
        else:
            raise ValueError(f"unknown adversarial kind {gen.kind!r}")
    else:
        raise ValueError(f"unknown generator {gen!r}")
    coords = np.clip(coords, 0, gen.extent)
    if gen.integer_grid:
        coords = np.rint(coords)
    return [Point(tuple(c)) for c in coords]


@dataclass(frozen=True)
class Experiment:
    kind: str  # 'poly' or 'exp'
    generator: Generator
    stream_len: int
    dim: int
    k: int
    seeds: tuple[int, ...]
    cost: CostFunction = K_MEDIAN
    # poly parameters
    s: float = 1.0
    epsilon: float = 0.3
    n_max: int = 2**30
    # exp parameters
    half_life: float = 8.0
    delta_aspect: float = 1024.0
    beta: float = 2.0
    gamma: float = 10.0
    oracle_checks: bool = True
    timing: bool = True
    metrics_out: str | None = None
    max_workers: int = 4

    def __post_init__(self) -> None:
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.kind not in ("poly", "exp"):
            raise ValueError(f"unknown experiment kind {self.kind!r}")


@dataclass(frozen=True)
class MetricsRow:
    seed: int
    n: int
    stored_points: int
    update_ns: float | None
    final_cost: float
    oracle_opt: float | None
    ratio: float | None
    phase_count: int | None
    block_count: int | None
    error: str = ""


METRICS_FIELDS = [f.name for f in fields(MetricsRow)]


def _run_poly_seed(e: Experiment, seed: int) -> MetricsRow:
    from .polydecay import PolyDecaySketch

    stream = generate_stream(e.generator, e.stream_len, e.dim, seed)
    sketch = PolyDecaySketch(e.s, e.epsilon, e.k, e.cost, n_max=e.n_max, rng_seed=seed)
    durations = []
    for p in stream:
        t0 = time.perf_counter_ns()
        sketch.insert(p)
        durations.append(time.perf_counter_ns() - t0)
    summary = sketch.query()
    centers = km_ram(summary.entries, e.cost, e.k, rng_seed=seed).centers
    decay = PolynomialDecay(e.s)
    weights = decayed_weights(decay, list(range(1, len(stream) + 1)), len(stream))
    weighted = [WeightedPoint(p, float(w), i + 1) for i, (p, w) in enumerate(zip(stream, weights))]
    final_cost = _cost_of(weighted, e.cost, centers)
    opt, ratio, err = _oracle_ratio(e, weighted, final_cost)
    return MetricsRow(
        seed=seed,
        n=len(stream),
        stored_points=sketch.stored_points,
        update_ns=statistics.median(durations) if e.timing else None,
        final_cost=final_cost,
        oracle_opt=opt,
        ratio=ratio,
        phase_count=None,
        block_count=sketch.block_count,
        error=err,
    )


def _run_exp_seed(e: Experiment, seed: int) -> MetricsRow:
    stream = generate_stream(e.generator, e.stream_len, e.dim, seed)
    cfg = StreamConfig(
        k=e.k,
        half_life=e.half_life,
        delta_aspect=e.delta_aspect,
        beta=e.beta,
        gamma=e.gamma,
        rng_seed=seed,
    )
    inst = ExpDecayClusterer(cfg, rng_seed=seed)
    durations = []
    for p in stream:
        t0 = time.perf_counter_ns()
        inst.insert(p)
        durations.append(time.perf_counter_ns() - t0)
    result = inst.result()
    decay = ExponentialDecay(e.half_life)
    weights = decayed_weights(decay, list(range(1, len(stream) + 1)), len(stream))
    weighted = [WeightedPoint(p, float(w), i + 1) for i, (p, w) in enumerate(zip(stream, weights))]
    final_cost = _cost_of(weighted, e.cost, result.centers)
    opt, ratio, err = _oracle_ratio(e, weighted, final_cost)
    return MetricsRow(
        seed=seed,
        n=len(stream),
        stored_points=result.max_stored,
        update_ns=statistics.median(durations) if e.timing else None,
        final_cost=final_cost,
        oracle_opt=opt,
        ratio=ratio,
        phase_count=result.phase_count,
        block_count=None,
        error=err,
    )


def _cost_of(weighted: Sequence[WeightedPoint], cost: CostFunction, centers) -> float:
    from .core import weighted_cost

    return weighted_cost(weighted, cost, list(centers))


def _oracle_ratio(e: Experiment, weighted, final_cost):
    if not e.oracle_checks:
        return None, None, ""
    try:
        _, opt = exhaustive_kmedian(weighted, e.cost, e.k)
    except BudgetExceededError as exc:
        return None, None, str(exc)
    ratio = final_cost / opt if opt > 0 else (1.0 if final_cost == 0 else math.inf)
    return opt, ratio, ""


def run_experiment(e: Experiment) -> list[MetricsRow]:
    """One row per seed, in seed order; seeds are mutually independent."""
    runner = _run_poly_seed if e.kind == "poly" else _run_exp_seed
    with ThreadPoolExecutor(max_workers=e.max_workers) as pool:
        rows = list(pool.map(lambda s: runner(e, s), e.seeds))
    if e.metrics_out:
        write_metrics_csv(rows, e.metrics_out)
    return rows


def write_metrics_csv(rows: Sequence[MetricsRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_FIELDS)
        for row in rows:
            writer.writerow(
                ["" if getattr(row, name) is None else getattr(row, name) for name in METRICS_FIELDS]
            )


@dataclass(frozen=True)
class SpaceCurveFit:
    slope: float
    intercept: float
    residual: float


def fit_space_curve(sizes: Sequence[float], stored: Sequence[float]) -> SpaceCurveFit:
    """Least-squares fit of stored points against the log of the size variable."""
    if len(sizes) != len(stored):
        raise ValueError("sizes and stored must have equal lengths")
    if len(set(sizes)) < 4:
        raise ValueError("need at least 4 distinct sizes to fit a space curve")
    x = np.log2(np.array(sizes, dtype=float))
    y = np.array(stored, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((slope * x + intercept - y) ** 2)))
    return SpaceCurveFit(float(slope), float(intercept), residual)
