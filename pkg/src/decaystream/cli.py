"""Command-line front end.

Subcommands: poly (streaming coreset under polynomial decay), exp (k-median
under exponential decay), verify (oracle check of the poly coreset), and
bench (experiment harness with CSV + figure output).  Row order defines time;
inputs carry no timestamps.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Iterator, Sequence, TextIO

from .core import ExponentialDecay, Point, PolynomialDecay, WeightedPoint, cost_function_by_name
from .expdecay import StreamConfig, process_stream
from .offline import Coreset
from .harness import (
    Adversarial,
    Experiment,
    GaussianClusters,
    UniformBox,
    fit_space_curve,
    run_experiment,
    write_metrics_csv,
)
from .oracle import decayed_weights, sampled_subsets_grid, verify_coreset
from .polydecay import PolyDecaySketch


class IngestError(ValueError):
    pass


def ingest(source: TextIO, fmt: str) -> Iterator[Point]:
    """Streaming point reader; constant memory per row, arrival order = row order."""
    dim: int | None = None
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            if fmt == "csv":
                coords = tuple(float(tok) for tok in line.split(","))
            else:
                obj = json.loads(line)
                coords = tuple(float(c) for c in obj["coords"])
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            raise IngestError(f"malformed {fmt} row at line {lineno}: {exc}") from exc
        if not coords:
            raise IngestError(f"empty point at line {lineno}")
        if dim is None:
            dim = len(coords)
        elif len(coords) != dim:
            raise IngestError(
                f"dimension change at line {lineno}: expected {dim}, got {len(coords)}"
            )
        yield Point(coords)


def _open_input(path: str) -> TextIO:
    if path == "-":
        return sys.stdin
    return open(path)


def _open_output(path: str | None) -> TextIO:
    if path is None or path == "-":
        return sys.stdout
    return open(path, "w")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", default="-", help="input path or '-' for stdin")
    parser.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    parser.add_argument("--output", default=None, help="output path (default stdout)")
    parser.add_argument("--k", type=int, required=True)
    parser.add_argument("--cost", choices=["kmedian", "kmeans", "huber"], default="kmedian")
    parser.add_argument("--huber-threshold", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decaystream",
        description="Streaming clustering summaries under time decay.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    poly = sub.add_parser("poly", help="maintain a coreset under polynomial decay")
    _add_common(poly)
    poly.add_argument("--s", type=float, required=True, help="decay exponent")
    poly.add_argument("--epsilon", type=float, default=0.3)
    poly.add_argument("--n-max", type=int, default=2**30)

    exp = sub.add_parser("exp", help="k-median clustering under exponential decay")
    _add_common(exp)
    exp.add_argument("--h", type=float, required=True, dest="half_life", help="half-life")
    exp.add_argument("--delta-aspect", type=float, required=True, help="aspect ratio bound")
    exp.add_argument("--beta", type=float, default=2.0)
    exp.add_argument("--gamma", type=float, default=10.0)
    exp.add_argument("--delta", type=float, default=0.05, help="failure probability")

    verify = sub.add_parser("verify", help="oracle-check the poly coreset")
    _add_common(verify)
    verify.add_argument("--s", type=float, required=True)
    verify.add_argument("--epsilon", type=float, default=0.3)
    verify.add_argument("--n-max", type=int, default=2**30)
    verify.add_argument("--grid-size", type=int, default=100)
    verify.add_argument(
        "--coreset",
        default=None,
        help="JSONL coreset ({'coords': [...], 'weight': w} per line) to check "
        "against the raw input stream; omit to build and check one internally",
    )

    bench = sub.add_parser("bench", help="run a benchmark experiment")
    bench.add_argument("--kind", choices=["poly", "exp"], required=True)
    bench.add_argument("--k", type=int, default=2)
    bench.add_argument("--cost", choices=["kmedian", "kmeans", "huber"], default="kmedian")
    bench.add_argument("--huber-threshold", type=float, default=1.0)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--seeds", type=int, default=3, help="number of seeds per size")
    bench.add_argument("--dim", type=int, default=2)
    bench.add_argument(
        "--generator", choices=["gaussian", "uniform", "adversarial"], default="gaussian"
    )
    bench.add_argument("--stream-lens", default="500", help="comma-separated stream lengths")
    bench.add_argument("--delta-aspects", default=None, help="comma-separated aspect bounds (exp)")
    bench.add_argument("--s", type=float, default=1.0)
    bench.add_argument("--epsilon", type=float, default=0.3)
    bench.add_argument("--n-max", type=int, default=2**30)
    bench.add_argument("--h", type=float, default=8.0, dest="half_life")
    bench.add_argument("--beta", type=float, default=2.0)
    bench.add_argument("--gamma", type=float, default=10.0)
    bench.add_argument("--no-oracle", action="store_true")
    bench.add_argument("--no-timing", action="store_true", help="omit wall-clock timings")
    bench.add_argument("--output-dir", default=".", help="directory for CSV and figures")
    return parser


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    args = build_parser().parse_args(argv)
    env_seed = os.environ.get("DECAYSTREAM_SEED")
    if env_seed is not None:
        args.seed = int(env_seed)
    _validate(args)
    return args


def _validate(args: argparse.Namespace) -> None:
    def fail(msg: str) -> None:
        build_parser().error(msg)

    if getattr(args, "k", 1) < 1:
        fail("--k must be at least 1")
    if hasattr(args, "epsilon") and not (0 < args.epsilon < 1):
        fail("--epsilon must lie in (0, 1)")
    if hasattr(args, "s") and args.s is not None and args.s < 0:
        fail("--s must be nonnegative")
    if hasattr(args, "half_life") and args.half_life is not None and args.half_life <= 0:
        fail("--h must be positive")
    if getattr(args, "gamma", 10.0) < 9:
        fail("--gamma must be at least 9")
    if not (1 < getattr(args, "beta", 2.0) <= 2):
        fail("--beta must lie in (1, 2]")
    if getattr(args, "delta_aspect", None) is not None and args.delta_aspect < 1:
        fail("--delta-aspect must be at least 1")
    if getattr(args, "n_max", 2) < 2:
        fail("--n-max must be at least 2")
    if not (0 < getattr(args, "delta", 0.05) < 1):
        fail("--delta must lie in (0, 1)")


def _read_stream(args: argparse.Namespace) -> list[Point]:
    source = _open_input(args.input)
    try:
        return list(ingest(source, args.format))
    finally:
        if source is not sys.stdin:
            source.close()


def _cmd_poly(args: argparse.Namespace) -> int:
    cost = cost_function_by_name(args.cost, args.huber_threshold)
    sketch = PolyDecaySketch(
        args.s, args.epsilon, args.k, cost, n_max=args.n_max, rng_seed=args.seed
    )
    for p in _read_stream(args):
        sketch.insert(p)
    out = _open_output(args.output)
    try:
        for entry in sketch.query().entries:
            out.write(json.dumps({"coords": list(entry.point.coords), "weight": entry.weight}))
            out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_exp(args: argparse.Namespace) -> int:
    cfg = StreamConfig(
        k=args.k,
        half_life=args.half_life,
        delta_aspect=args.delta_aspect,
        beta=args.beta,
        gamma=args.gamma,
        failure_prob=args.delta,
        rng_seed=args.seed,
    )
    stream = _read_stream(args)
    if not stream:
        print("error: empty stream", file=sys.stderr)
        return 1
    result = process_stream(cfg, stream)
    payload = {
        "centers": [list(c.coords) for c in result.centers],
        "cost_log2": result.cost_log2,
        "phase_count": result.phase_count,
    }
    out = _open_output(args.output)
    try:
        out.write(json.dumps(payload))
        out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _read_coreset(path: str, epsilon: float, source_size: int) -> Coreset:
    entries = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                point = Point(tuple(float(c) for c in obj["coords"]))
                weight = float(obj["weight"])
            except (ValueError, KeyError, json.JSONDecodeError) as exc:
                raise IngestError(f"malformed coreset row at line {lineno}: {exc}") from exc
            entries.append(WeightedPoint(point, weight, lineno))
    return Coreset(tuple(entries), epsilon, source_size)


def _cmd_verify(args: argparse.Namespace) -> int:
    cost = cost_function_by_name(args.cost, args.huber_threshold)
    stream = _read_stream(args)
    if not stream:
        print("error: empty stream", file=sys.stderr)
        return 1
    if args.coreset is not None:
        summary = _read_coreset(args.coreset, args.epsilon, len(stream))
    else:
        sketch = PolyDecaySketch(
            args.s, args.epsilon, args.k, cost, n_max=args.n_max, rng_seed=args.seed
        )
        for p in stream:
            sketch.insert(p)
        summary = sketch.query()
    n = len(stream)
    weights = decayed_weights(PolynomialDecay(args.s), list(range(1, n + 1)), n)
    reference = [
        WeightedPoint(p, float(w), i + 1) for i, (p, w) in enumerate(zip(stream, weights))
    ]
    grid = sampled_subsets_grid(stream, args.k, args.grid_size, args.seed)
    report = verify_coreset(summary, reference, cost, grid, args.epsilon)
    payload = {
        "max_rel_error": report.max_rel_error,
        "passed": report.passed,
        "epsilon": report.epsilon,
        "candidates": report.candidates,
    }
    out = _open_output(args.output)
    try:
        out.write(json.dumps(payload))
        out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()
    if not report.passed:
        print(f"verification failed: max_rel_error={report.max_rel_error}", file=sys.stderr)
        return 2
    return 0


def _make_generator(args: argparse.Namespace) -> GaussianClusters | UniformBox | Adversarial:
    integer_grid = args.kind == "exp"
    extent = min(700.0, getattr(args, "delta_aspect", 700.0) or 700.0)
    if args.generator == "gaussian":
        return GaussianClusters(n_clusters=max(2, args.k), spread=extent / 25,
                                extent=extent, integer_grid=integer_grid)
    if args.generator == "uniform":
        return UniformBox(extent=extent, integer_grid=integer_grid)
    return Adversarial(kind="sorted_line", extent=extent, integer_grid=integer_grid)


def _cmd_bench(args: argparse.Namespace) -> int:
    from .report import render_cost_ratios, render_space_curve

    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cost = cost_function_by_name(args.cost, args.huber_threshold)
    seeds = tuple(args.seed + i for i in range(args.seeds))
    stream_lens = [int(tok) for tok in str(args.stream_lens).split(",")]
    aspects = (
        [float(tok) for tok in args.delta_aspects.split(",")]
        if args.delta_aspects
        else [1024.0]
    )

    all_rows = []
    sizes = []
    configs = (
        [(n, aspects[0]) for n in stream_lens]
        if args.kind == "poly"
        else [(stream_lens[0], a) for a in aspects]
    )
    for n, aspect in configs:
        gen_args = argparse.Namespace(**vars(args))
        gen_args.delta_aspect = aspect
        exp = Experiment(
            kind=args.kind,
            generator=_make_generator(gen_args),
            stream_len=n,
            dim=args.dim,
            k=args.k,
            seeds=seeds,
            cost=cost,
            s=args.s,
            epsilon=args.epsilon,
            n_max=args.n_max,
            half_life=args.half_life,
            delta_aspect=aspect,
            beta=args.beta,
            gamma=args.gamma,
            oracle_checks=not args.no_oracle,
            timing=not args.no_timing,
        )
        rows = run_experiment(exp)
        all_rows.extend(rows)
        size_var = n if args.kind == "poly" else aspect
        sizes.extend([size_var] * len(rows))

    csv_path = out_dir / "metrics.csv"
    write_metrics_csv(all_rows, csv_path)
    stored = [r.stored_points for r in all_rows]
    if len(set(sizes)) >= 4:
        fit = fit_space_curve(sizes, stored)
        xlabel = "n" if args.kind == "poly" else "aspect ratio bound"
        render_space_curve(sizes, stored, fit, out_dir / "space_curve.png", xlabel=xlabel)
        print(f"space curve slope {fit.slope:.3f} (residual {fit.residual:.3f})")
    render_cost_ratios(all_rows, out_dir / "cost_ratios.png")
    print(f"wrote {csv_path}")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = parse_args(argv)
    handlers = {
        "poly": _cmd_poly,
        "exp": _cmd_exp,
        "verify": _cmd_verify,
        "bench": _cmd_bench,
    }
    try:
        return handlers[args.subcommand](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
