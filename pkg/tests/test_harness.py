import csv
import math

import numpy as np
import pytest

from decaystream.core import (
    ExponentialDecay,
    K_MEDIAN,
    PolynomialDecay,
    WeightedPoint,
)
from decaystream.expdecay import approximation_bound
from decaystream.harness import (
    Adversarial,
    Experiment,
    GaussianClusters,
    METRICS_FIELDS,
    UniformBox,
    fit_space_curve,
    generate_stream,
    run_experiment,
    write_metrics_csv,
)
from decaystream.offline import LOCAL_SEARCH_APPROX
from decaystream.oracle import exact_decayed_cost


def _poly_experiment(**kw):
    base = dict(
        kind="poly",
        generator=GaussianClusters(n_clusters=3, spread=2.0),
        stream_len=300,
        dim=2,
        k=2,
        seeds=(1, 2, 3),
        s=1.0,
        epsilon=0.3,
    )
    base.update(kw)
    return Experiment(**base)


def _exp_experiment(**kw):
    base = dict(
        kind="exp",
        generator=GaussianClusters(
            n_clusters=2, spread=20.0, extent=600.0, integer_grid=True
        ),
        stream_len=300,
        dim=2,
        k=2,
        seeds=(0, 1),
        half_life=8.0,
        delta_aspect=1024.0,
    )
    base.update(kw)
    return Experiment(**base)


class TestGenerateStream:
    def test_deterministic(self):
        gen = GaussianClusters()
        assert generate_stream(gen, 50, 2, 7) == generate_stream(gen, 50, 2, 7)

    def test_extent_clipping(self):
        gen = UniformBox(extent=10.0)
        for p in generate_stream(gen, 200, 2, 0):
            assert all(0.0 <= c <= 10.0 for c in p.coords)

    def test_integer_grid_rounds(self):
        gen = UniformBox(extent=50.0, integer_grid=True)
        for p in generate_stream(gen, 100, 2, 1):
            assert all(c == int(c) for c in p.coords)

    def test_sorted_line_is_monotone(self):
        gen = Adversarial(kind="sorted_line")
        xs = [p.coords[0] for p in generate_stream(gen, 50, 2, 0)]
        assert xs == sorted(xs)

    def test_repeated_bursts_has_few_sites(self):
        gen = Adversarial(kind="repeated_bursts")
        pts = generate_stream(gen, 100, 2, 0)
        assert len(set(pts)) <= 4

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            generate_stream(Adversarial(kind="nope"), 10, 2, 0)


class TestExperimentValidation:
    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            _poly_experiment(kind="weird")

    def test_rejects_empty_seeds(self):
        with pytest.raises(ValueError):
            _poly_experiment(seeds=())


class TestRunExperiment:
    def test_one_row_per_seed_in_order(self):
        rows = run_experiment(_poly_experiment(seeds=(1, 2, 3), oracle_checks=False))
        assert [r.seed for r in rows] == [1, 2, 3]

    def test_seed_order_only_permutes_rows(self):
        a = run_experiment(_poly_experiment(seeds=(1, 2, 3), timing=False,
                                            oracle_checks=False))
        b = run_experiment(_poly_experiment(seeds=(3, 1, 2), timing=False,
                                            oracle_checks=False))
        assert {r.seed: r for r in a} == {r.seed: r for r in b}

    def test_poly_block_count_bound(self):
        e = _poly_experiment(stream_len=2000, seeds=(100,), oracle_checks=False)
        (row,) = run_experiment(e)
        n = e.stream_len
        bound = (
            e.s * math.log(n) / math.log((1 + e.epsilon) / (1 - e.epsilon))
            + 2 * math.log2(n)
            + 2
        )
        assert row.block_count <= bound

    def test_poly_final_cost_matches_oracle_recomputation(self):
        e = _poly_experiment(seeds=(5,))
        (row,) = run_experiment(e)
        # Replay the deterministic pipeline and recompute the reported cost
        # against the exact decayed oracle.
        from decaystream.offline import km_ram
        from decaystream.polydecay import PolyDecaySketch

        stream = generate_stream(e.generator, e.stream_len, e.dim, 5)
        sketch = PolyDecaySketch(e.s, e.epsilon, e.k, e.cost, rng_seed=5)
        for p in stream:
            sketch.insert(p)
        centers = km_ram(sketch.query().entries, e.cost, e.k, rng_seed=5).centers
        oracle = exact_decayed_cost(
            stream, PolynomialDecay(e.s), len(stream), e.cost, list(centers)
        )
        assert row.final_cost == pytest.approx(oracle, rel=1e-9)
        assert row.ratio == pytest.approx(row.final_cost / row.oracle_opt, rel=1e-12)

    def test_exp_ratios_within_bound(self):
        rows = run_experiment(_exp_experiment(seeds=(0, 1)))
        bound = approximation_bound(2.0, 10.0, LOCAL_SEARCH_APPROX)
        for row in rows:
            assert row.error == ""
            assert row.ratio is not None and row.ratio <= bound
            assert row.phase_count is not None

    def test_oracle_budget_overflow_reported_not_raised(self):
        e = _poly_experiment(
            generator=UniformBox(extent=100.0),
            stream_len=300,
            k=3,
            seeds=(0,),
        )
        (row,) = run_experiment(e)
        assert "budget" in row.error
        assert row.ratio is None and row.oracle_opt is None

    def test_metrics_csv_layout(self, tmp_path):
        rows = run_experiment(
            _poly_experiment(seeds=(1, 2), timing=False, oracle_checks=False)
        )
        path = tmp_path / "metrics.csv"
        write_metrics_csv(rows, path)
        with open(path, newline="") as fh:
            got = list(csv.reader(fh))
        assert got[0] == METRICS_FIELDS
        assert len(got) == 3
        # disabled fields serialize as empty cells
        assert got[1][METRICS_FIELDS.index("update_ns")] == ""


class TestSpaceCurve:
    def test_constant_rows_give_zero_slope(self):
        fit = fit_space_curve([250, 500, 1000, 2000], [40, 40, 40, 40])
        assert fit.slope == pytest.approx(0.0, abs=1e-9)
        assert fit.residual == pytest.approx(0.0, abs=1e-9)

    def test_rejects_too_few_distinct_sizes(self):
        with pytest.raises(ValueError):
            fit_space_curve([100, 100, 200], [1, 2, 3])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            fit_space_curve([100, 200, 400, 800], [1, 2, 3])

    @pytest.mark.xfail(
        strict=True,
        reason="the inner reduce accuracy scales like eps/log2(n_max), so the "
        "sampling budget exceeds desk-scale block sizes and every block stays "
        "verbatim; stored points then grow linearly in n, not with its log",
    )
    def test_poly_stored_points_grow_with_log_n(self):
        sizes = [250, 500, 1000, 2000]
        stored = []
        for n in sizes:
            (row,) = run_experiment(
                _poly_experiment(stream_len=n, seeds=(7,), oracle_checks=False,
                                 timing=False)
            )
            stored.append(row.stored_points)
        log_ratio = math.log(sizes[-1]) / math.log(sizes[0])
        assert stored[-1] / stored[0] <= 2 * log_ratio

    def test_poly_block_count_grows_with_log_n(self):
        # The structural component of the sketch does scale logarithmically,
        # even where raw stored points do not (see the companion xfail).
        sizes = [250, 500, 1000, 2000]
        blocks = []
        for n in sizes:
            (row,) = run_experiment(
                _poly_experiment(stream_len=n, seeds=(7,), oracle_checks=False,
                                 timing=False)
            )
            blocks.append(row.block_count)
        log_ratio = math.log(sizes[-1]) / math.log(sizes[0])
        assert blocks[-1] / blocks[0] <= 2 * log_ratio
