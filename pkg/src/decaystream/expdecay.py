"""Phase-based k-median clustering for exponentially decayed streams.

An online facility location subroutine runs inside phases; each phase carries
a guess L for a lower bound on the optimal cost.  When the accumulated service
cost or the facility count outgrows its threshold, or too many points have
been read, the facilities are reclustered to k points offline and the guess is
raised.  All weights, costs, and guesses are base-2 log magnitudes: the raw
weight 2**(t/h) overflows doubles on long streams, and only ratios matter.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import K_MEDIAN, Point, WeightedPoint
from .offline import LOCAL_SEARCH_APPROX, km_ram

NEG_INF = float("-inf")


class AspectRatioError(ValueError):
    """Raised when an observed distance contradicts the configured aspect ratio."""


def log2_add(a: float, b: float) -> float:
    """log2(2**a + 2**b), safe for -inf operands."""
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    return float(np.logaddexp2(a, b))


def approximation_bound(beta: float, gamma: float, alpha: float) -> float:
    """End-to-end k-median approximation factor of the phase scheme."""
    inner = (1 + alpha * beta) / (beta - 1)
    return (gamma + inner) * (1 / gamma + 1 + inner / gamma)


def update_guess_log(
    guess_log: float, lam_log: float, beta: float, gamma: float, alpha: float
) -> float:
    """New guess after a phase change: max(beta * L, lambda / (alpha * gamma)),
    in log2 domain.  lam_log may be -inf (zero reclustering cost)."""
    return max(math.log2(beta) + guess_log, lam_log - math.log2(alpha * gamma))


@dataclass(frozen=True)
class StreamConfig:
    """Parameters of one exponential-decay clustering run.

    delta_aspect is an upper bound on the stream's aspect ratio, with the
    minimum nonzero pairwise distance normalized to at least 1; both are
    validated online against every observed distance.
    """

    k: int
    half_life: float
    delta_aspect: float
    beta: float = 2.0
    gamma: float = 10.0
    failure_prob: float = 0.05
    amplification: int | None = None
    rng_seed: int = 0
    alpha: float = LOCAL_SEARCH_APPROX

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")
        if self.half_life <= 0:
            raise ValueError(f"half-life must be positive, got {self.half_life}")
        if self.delta_aspect < 1:
            raise ValueError(f"aspect ratio bound must be >= 1, got {self.delta_aspect}")
        if not (1 < self.beta <= 2):
            raise ValueError(f"beta must lie in (1, 2], got {self.beta}")
        if self.gamma < 9:
            raise ValueError(f"gamma must be at least 9, got {self.gamma}")
        if not (0 < self.failure_prob < 1):
            raise ValueError(f"failure probability must lie in (0, 1)")

    @property
    def weight_ratio(self) -> float:
        """W: total weight of the heaviest phase prefix over the minimum weight."""
        return self.delta_aspect / (2 ** (1 / self.half_life) - 1)

    @property
    def facility_limit(self) -> int:
        """Facility count above which the guess is declared too low."""
        return math.floor((self.gamma - 1) * self.k * (1 + math.log2(self.weight_ratio)))

    @property
    def ofl_point_limit(self) -> int:
        """Points read in a phase before switching to verbatim storage."""
        return math.ceil(self.half_life * math.log2(self.delta_aspect))

    @property
    def verbatim_limit(self) -> int:
        """Distinct verbatim points stored before forcing a phase change."""
        return self.k + math.ceil(self.half_life)

    @property
    def storage_cap(self) -> int:
        """Hard bound on stored points, asserted after every element."""
        return self.facility_limit + self.verbatim_limit

    def instances(self) -> int:
        if self.amplification is not None:
            return self.amplification
        return max(1, math.ceil(math.log2(1 / self.failure_prob)))


@dataclass
class OflFacility:
    """An open facility with its accumulated weight in log2 domain."""

    point: Point
    log_weight: float
    opened_at: int

    def absorb(self, log_weight: float) -> None:
        self.log_weight = log2_add(self.log_weight, log_weight)


@dataclass(frozen=True)
class StreamResult:
    centers: tuple[Point, ...]
    cost_log2: float
    phase_count: int
    max_stored: int


def run_ofl(
    points: Sequence[Point],
    log_weights: Sequence[float],
    facility_cost_log2: float,
    rng: np.random.Generator,
    arrival_offset: int = 0,
) -> tuple[list[OflFacility], float]:
    """Plain online facility location on a fixed weighted sequence.

    Each point opens a facility with probability min(weight * distance /
    facility_cost, 1); otherwise it is served by its nearest facility, whose
    weight absorbs the point's.  Returns the facilities and the total service
    cost in log2 domain.  The first point always opens a facility.
    """
    facilities: list[OflFacility] = []
    service_log = NEG_INF
    for j, (p, lw) in enumerate(zip(points, log_weights)):
        facilities, service_log, _ = ofl_step(
            facilities, service_log, p, lw, facility_cost_log2, rng, arrival_offset + j + 1
        )
    return facilities, service_log


def ofl_step(
    facilities: list[OflFacility],
    service_log: float,
    p: Point,
    log_weight: float,
    facility_cost_log2: float,
    rng: np.random.Generator,
    arrival_index: int,
) -> tuple[list[OflFacility], float, float]:
    """One facility-location step; returns (facilities, service cost, distance).

    The returned distance to the nearest pre-existing facility is math.inf
    when the facility set was empty.
    """
    if not facilities:
        facilities.append(OflFacility(p, log_weight, arrival_index))
        return facilities, service_log, math.inf
    fmat = np.array([f.point.coords for f in facilities])
    dists = np.sqrt(((fmat - np.array(p.coords)) ** 2).sum(axis=1))
    nearest = int(dists.argmin())
    d = float(dists[nearest])
    if d == 0.0:
        facilities[nearest].absorb(log_weight)
        return facilities, service_log, d
    sigma_log = log_weight + math.log2(d) - facility_cost_log2
    if sigma_log >= 0 or rng.random() < 2.0**sigma_log:
        facilities.append(OflFacility(p, log_weight, arrival_index))
    else:
        service_log = log2_add(service_log, log_weight + math.log2(d))
        facilities[nearest].absorb(log_weight)
    return facilities, service_log, d


def _cluster_facilities(
    facilities: Sequence[OflFacility], k: int, rng: np.random.Generator
) -> tuple[list[OflFacility], float]:
    """Recluster facilities to at most k weighted points via the offline solver.

    Facility weights are shifted by their maximum exponent so the solver works
    on linear weights in (0, 1]; the returned cost is mapped back to log2
    domain.  Total weight is preserved: each facility's weight is absorbed by
    its nearest new center.
    """
    if not facilities:
        return [], NEG_INF
    shift = max(f.log_weight for f in facilities)
    weighted = [
        WeightedPoint(f.point, 2.0 ** (f.log_weight - shift), i + 1)
        for i, f in enumerate(facilities)
    ]
    result = km_ram(weighted, cost=K_MEDIAN, k=k, rng_seed=rng)
    lam_log = math.log2(result.lambda_cost) + shift if result.lambda_cost > 0 else NEG_INF

    cmat = np.array([c.coords for c in result.centers])
    merged = [OflFacility(c, NEG_INF, 0) for c in result.centers]
    for f in facilities:
        dists = np.sqrt(((cmat - np.array(f.point.coords)) ** 2).sum(axis=1))
        j = int(dists.argmin())
        merged[j].absorb(f.log_weight)
        merged[j].opened_at = max(merged[j].opened_at, f.opened_at)
    return merged, lam_log


class ExpDecayClusterer:
    """One single-writer phase-based clustering instance."""

    OFL = "ofl"
    VERBATIM = "verbatim"

    def __init__(self, cfg: StreamConfig, rng_seed: int | None = None) -> None:
        self.cfg = cfg
        self._rng = np.random.default_rng(cfg.rng_seed if rng_seed is None else rng_seed)
        self._facilities: list[OflFacility] = []
        self._guess_log = 0.0  # L starts at 1
        self._phase_cost_log = NEG_INF
        self._lifetime_cost_log = NEG_INF
        self._points_in_phase = 0
        self._subphase = self.OFL
        self._verbatim_distinct = 0
        self._n = 0
        self.phase_count = 0
        self.max_stored = 0

    @property
    def n(self) -> int:
        return self._n

    @property
    def stored_points(self) -> int:
        return len(self._facilities)

    @property
    def guess_log2(self) -> float:
        return self._guess_log

    @property
    def cost_log2(self) -> float:
        """Accumulated service + reclustering cost across the whole run, log2."""
        return log2_add(self._lifetime_cost_log, self._phase_cost_log)

    def _facility_cost_log(self) -> float:
        denom = self.cfg.k * (1 + math.log2(self.cfg.weight_ratio))
        return self._guess_log - math.log2(denom)

    def _validate_distance(self, d: float) -> None:
        if d == math.inf or d == 0.0:
            return
        if d > self.cfg.delta_aspect * (1 + 1e-9):
            raise AspectRatioError(
                f"observed distance {d} exceeds the aspect ratio bound "
                f"{self.cfg.delta_aspect}"
            )
        if d < 1 - 1e-9:
            raise AspectRatioError(
                f"observed nonzero distance {d} is below 1; the stream is not "
                "normalized to minimum distance >= 1"
            )

    def insert(self, p: Point) -> None:
        self._n += 1
        lw = self._n / self.cfg.half_life
        if self._subphase == self.OFL:
            self._ofl_insert(p, lw)
        else:
            self._verbatim_insert(p, lw)
        self.max_stored = max(self.max_stored, len(self._facilities))
        if len(self._facilities) > self.cfg.storage_cap:
            raise AssertionError(
                f"stored {len(self._facilities)} points, cap {self.cfg.storage_cap}"
            )

    def _ofl_insert(self, p: Point, lw: float) -> None:
        self._facilities, self._phase_cost_log, d = ofl_step(
            self._facilities,
            self._phase_cost_log,
            p,
            lw,
            self._facility_cost_log(),
            self._rng,
            self._n,
        )
        self._validate_distance(d)
        self._points_in_phase += 1
        cost_too_high = self._phase_cost_log > math.log2(self.cfg.gamma) + self._guess_log
        too_many_facilities = len(self._facilities) > self.cfg.facility_limit
        if cost_too_high or too_many_facilities:
            self._phase_change()
        elif self._points_in_phase >= self.cfg.ofl_point_limit:
            self._subphase = self.VERBATIM

    def _verbatim_insert(self, p: Point, lw: float) -> None:
        coincident = None
        for f in self._facilities:
            if f.point.coords == p.coords:
                coincident = f
                break
        if coincident is not None:
            coincident.absorb(lw)
            return
        fmat = np.array([f.point.coords for f in self._facilities])
        if len(fmat):
            d = float(np.sqrt(((fmat - np.array(p.coords)) ** 2).sum(axis=1)).min())
            self._validate_distance(d)
        self._facilities.append(OflFacility(p, lw, self._n))
        self._verbatim_distinct += 1
        if self._verbatim_distinct >= self.cfg.verbatim_limit:
            self._phase_change()

    def _phase_change(self) -> None:
        self._facilities, lam_log = _cluster_facilities(self._facilities, self.cfg.k, self._rng)
        self._guess_log = update_guess_log(
            self._guess_log, lam_log, self.cfg.beta, self.cfg.gamma, self.cfg.alpha
        )
        self._lifetime_cost_log = log2_add(
            log2_add(self._lifetime_cost_log, self._phase_cost_log), lam_log
        )
        self._phase_cost_log = NEG_INF
        self._points_in_phase = 0
        self._verbatim_distinct = 0
        self._subphase = self.OFL
        self.phase_count += 1

    def result(self) -> StreamResult:
        """Final k centers via a terminal offline reclustering."""
        if self._n == 0:
            raise ValueError("cannot produce a result from an empty stream")
        clustered, lam_log = _cluster_facilities(
            list(self._facilities), self.cfg.k, np.random.default_rng(self.cfg.rng_seed)
        )
        centers = [f.point for f in clustered]
        while len(centers) < self.cfg.k:
            centers.append(centers[-1])
        score = log2_add(self.cost_log2, lam_log)
        return StreamResult(tuple(centers), score, self.phase_count, self.max_stored)


def process_stream(cfg: StreamConfig, stream: Iterable[Point]) -> StreamResult:
    """Run the configured number of independent instances over the stream and
    return the one whose internal accumulated cost is smallest."""
    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(cfg.instances())
    instances = [
        ExpDecayClusterer(cfg, np.random.default_rng(seq).integers(2**63))
        for seq in seeds
    ]
    n = 0
    for p in stream:
        n += 1
        for inst in instances:
            inst.insert(p)
    if n == 0:
        raise ValueError("stream is empty")
    results = [inst.result() for inst in instances]
    return min(results, key=lambda r: r.cost_log2)
