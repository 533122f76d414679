"""Streaming coreset for polynomially decayed streams.

The stream is partitioned into contiguous blocks of dyadic span.  Integer
markers decide when adjacent blocks have become old enough that their decayed
weights are within a (1+eps)/(1-eps) factor, at which point they are merged
and re-summarized.  Decay is applied only at query time: each block's summary
is unweighted by decay and receives a single age-dependent weight when the
overall coreset is assembled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import CostFunction, Point, WeightedPoint
from .offline import Coreset, cs_ram


class StreamTooLongError(ValueError):
    """Raised when a stream exceeds the configured length bound."""


def _ratio_ok(x: int, span: int, s: float, epsilon: float) -> bool:
    # (x / (x - span + 1))**s <= (1 + eps) / (1 - eps), evaluated in logs to
    # stay stable for large x.
    if s == 0:
        return True
    lhs = s * (math.log(x) - math.log(x - span + 1))
    rhs = math.log1p(epsilon) - math.log1p(-epsilon)
    return lhs <= rhs


def compute_marker(s: float, epsilon: float, i: int) -> int:
    """Minimal integer x >= 2**i with (x/(x-2**i+1))**s <= (1+eps)/(1-eps)."""
    if not (0 < epsilon < 1):
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if s < 0:
        raise ValueError(f"decay exponent must be nonnegative, got {s}")
    if i < 0:
        raise ValueError(f"level must be nonnegative, got {i}")
    span = 1 << i
    lo, hi = span, span
    while not _ratio_ok(hi, span, s, epsilon):
        hi *= 2
    # Predicate is monotone in x, so binary search for the boundary.
    while lo < hi:
        mid = (lo + hi) // 2
        if _ratio_ok(mid, span, s, epsilon):
            hi = mid
        else:
            lo = mid + 1
    return lo


def block_weight(older_age: int, newer_age: int, s: float, epsilon: float) -> float:
    """Weight assigned to a whole block at query time.

    Ages are recency ranks (most recent element has age 1); older_age is the
    age of the block's oldest element.  The value is the midpoint
    0.5 * ((1-eps)/older_age**s + (1+eps)/newer_age**s), which lies between
    the decayed weights of the block's extremes once the marker condition
    holds.
    """
    if not (1 <= newer_age <= older_age):
        raise ValueError(f"need 1 <= newer_age <= older_age, got {older_age}, {newer_age}")
    return 0.5 * ((1 - epsilon) / older_age**s + (1 + epsilon) / newer_age**s)


@dataclass(frozen=True)
class Block:
    """A contiguous stream interval [a, b] summarized by a coreset."""

    a: int
    b: int
    summary: Coreset
    level: int

    def __post_init__(self) -> None:
        if self.b - self.a + 1 != 1 << self.level:
            raise ValueError(f"block [{self.a},{self.b}] does not span 2**{self.level}")

    @property
    def span(self) -> int:
        return self.b - self.a + 1


@dataclass
class MarkerTable:
    """Lazily computed merge markers for a fixed (s, epsilon)."""

    s: float
    epsilon: float
    _cache: dict[int, int] = field(default_factory=dict)

    def marker(self, i: int) -> int:
        if i not in self._cache:
            self._cache[i] = compute_marker(self.s, self.epsilon, i)
        return self._cache[i]


class PolyDecaySketch:
    """Single-writer streaming sketch; queries never mutate it.

    Block summaries are reduced with the offline coreset constructor at inner
    accuracy epsilon / (3 * log2(n_max)); n_max bounds the stream length
    because the stream length is not known in advance.
    """

    def __init__(
        self,
        s: float,
        epsilon: float,
        k: int,
        cost: CostFunction,
        n_max: int = 2**30,
        rng_seed: int = 0,
    ) -> None:
        if not (0 < epsilon < 1):
            raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
        if s < 0:
            raise ValueError(f"decay exponent must be nonnegative, got {s}")
        if k < 1:
            raise ValueError(f"k must be at least 1, got {k}")
        if n_max < 2:
            raise ValueError(f"n_max must be at least 2, got {n_max}")
        self.s = s
        self.epsilon = epsilon
        self.k = k
        self.cost = cost
        self.n_max = n_max
        self.markers = MarkerTable(s, epsilon)
        self.inner_epsilon = epsilon / (3 * math.log2(n_max))
        self._blocks: list[Block] = []
        self._block_starts: dict[int, int] = {}
        self._n = 0
        self._seed_seq = np.random.SeedSequence(rng_seed)
        self._reduce_count = 0

    @property
    def n(self) -> int:
        return self._n

    @property
    def blocks(self) -> tuple[Block, ...]:
        return tuple(self._blocks)

    @property
    def block_count(self) -> int:
        return len(self._blocks)

    @property
    def stored_points(self) -> int:
        return sum(len(b.summary.entries) for b in self._blocks)

    def _reindex(self) -> None:
        self._block_starts = {b.a: i for i, b in enumerate(self._blocks)}

    def _reduce(self, entries: tuple[WeightedPoint, ...]) -> Coreset:
        child = self._seed_seq.spawn(1)[0]
        self._reduce_count += 1
        rng = np.random.default_rng(child)
        return cs_ram(entries, self.cost, self.k, self.inner_epsilon, rng)

    def _merge_at(self, start_idx: int, level: int) -> None:
        first = self._blocks[start_idx]
        target_end = first.a + (1 << level) - 1
        stop = start_idx
        while stop < len(self._blocks) and self._blocks[stop].b < target_end:
            stop += 1
        if stop == len(self._blocks) or self._blocks[stop].b != target_end:
            raise AssertionError(
                f"merge range [{first.a},{target_end}] is not exactly covered"
            )
        pieces = self._blocks[start_idx : stop + 1]
        entries: list[WeightedPoint] = []
        for blk in pieces:
            entries.extend(blk.summary.entries)
        merged = Block(first.a, target_end, self._reduce(tuple(entries)), level)
        self._blocks[start_idx : stop + 1] = [merged]
        self._reindex()

    def _cascade(self) -> None:
        n = self._n
        changed = True
        while changed:
            changed = False
            i = 1
            while True:
                x = self.markers.marker(i)
                if x + 1 > n:
                    break
                # A merge at level i first becomes due when some block start a
                # satisfies a + x_i <= n; starts only ever disappear, so it is
                # enough to look for a block starting exactly at n - x_i.
                idx = self._block_starts.get(n - x)
                if idx is not None and self._blocks[idx].level < i:
                    self._merge_at(idx, i)
                    changed = True
                    break
                i += 1

    def insert(self, p: Point) -> None:
        if self._n + 1 > self.n_max:
            raise StreamTooLongError(
                f"stream length would exceed the configured bound n_max={self.n_max}"
            )
        self._n += 1
        entry = WeightedPoint(p, 1.0, self._n)
        self._blocks.append(Block(self._n, self._n, Coreset((entry,), 0.0, 1), 0))
        self._block_starts[self._n] = len(self._blocks) - 1
        self._cascade()

    def query(self) -> Coreset:
        """Weighted union of block summaries; an eps-coreset of the decayed stream."""
        n = self._n
        entries: list[WeightedPoint] = []
        for blk in self._blocks:
            older_age = n - blk.a + 1
            newer_age = n - blk.b + 1
            u = block_weight(older_age, newer_age, self.s, self.epsilon)
            for e in blk.summary.entries:
                entries.append(WeightedPoint(e.point, e.weight * u, e.arrival_index))
        return Coreset(tuple(entries), self.epsilon, n) if entries else Coreset((), 0.0, 0)
