"""Streaming clustering summaries under polynomial and exponential time decay."""

from .core import (
    CostFunction,
    DecayFunction,
    ExponentialDecay,
    K_MEANS,
    K_MEDIAN,
    Point,
    PolynomialDecay,
    QuerySpace,
    WeightedPoint,
    decay_weight,
    decayed_cost,
    distance,
    huber,
)
from .expdecay import (
    ExpDecayClusterer,
    StreamConfig,
    StreamResult,
    approximation_bound,
    process_stream,
    update_guess_log,
)
from .offline import Coreset, KmResult, LOCAL_SEARCH_APPROX, cs_ram, d2_seeding, km_ram
from .oracle import QueryGrid, exact_decayed_cost, exhaustive_kmedian, verify_coreset
from .polydecay import Block, MarkerTable, PolyDecaySketch, block_weight, compute_marker

__all__ = [
    "Block",
    "Coreset",
    "CostFunction",
    "DecayFunction",
    "ExpDecayClusterer",
    "ExponentialDecay",
    "K_MEANS",
    "K_MEDIAN",
    "KmResult",
    "LOCAL_SEARCH_APPROX",
    "MarkerTable",
    "Point",
    "PolyDecaySketch",
    "PolynomialDecay",
    "QueryGrid",
    "QuerySpace",
    "StreamConfig",
    "StreamResult",
    "WeightedPoint",
    "approximation_bound",
    "block_weight",
    "compute_marker",
    "cs_ram",
    "d2_seeding",
    "decay_weight",
    "decayed_cost",
    "distance",
    "exact_decayed_cost",
    "exhaustive_kmedian",
    "huber",
    "km_ram",
    "process_stream",
    "update_guess_log",
    "verify_coreset",
]
