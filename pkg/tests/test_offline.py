import itertools
import math

import numpy as np
import pytest

from decaystream.core import K_MEDIAN, K_MEANS, Point, WeightedPoint, point, weighted_cost
from decaystream.offline import (
    Coreset,
    LOCAL_SEARCH_APPROX,
    cs_ram,
    coreset_size_budget,
    d2_seeding,
    km_ram,
)
from decaystream.oracle import exhaustive_kmedian, lattice_grid, verify_coreset

from conftest import gaussian_stream


def _unit(points):
    return [WeightedPoint(p, 1.0, i + 1) for i, p in enumerate(points)]


def _two_cluster_points(rng, n_per: int, centers=((0.0, 0.0), (50.0, 50.0)), spread=1.0):
    pts = []
    for c in centers:
        block = rng.normal(c, spread, size=(n_per, len(c)))
        pts.extend(Point(tuple(map(float, row))) for row in block)
    return pts


class TestCoresetContainer:
    def test_total_weight(self):
        cs = Coreset((WeightedPoint(point(0.0), 2.0, 1), WeightedPoint(point(1.0), 3.0, 2)), 0.1, 5)
        assert cs.total_weight == 5.0

    def test_rejects_bad_epsilon(self):
        with pytest.raises(ValueError):
            Coreset((WeightedPoint(point(0.0), 1.0, 1),), 1.0, 1)


class TestD2Seeding:
    def test_returns_k_distinct_seeds(self):
        pts = _unit([point(float(i)) for i in range(10)])
        seeds = d2_seeding(pts, K_MEDIAN, 4, rng_seed=0)
        assert len(seeds) == 4
        assert len(set(seeds)) == 4

    def test_two_distinct_points_k2(self):
        pts = _unit([point(0.0), point(1.0)])
        assert set(d2_seeding(pts, K_MEDIAN, 2, rng_seed=3)) == {point(0.0), point(1.0)}

    def test_k_larger_than_distinct_support(self):
        pts = _unit([point(0.0), point(0.0), point(1.0)])
        seeds = d2_seeding(pts, K_MEDIAN, 5, rng_seed=0)
        assert set(seeds) == {point(0.0), point(1.0)}

    def test_first_seed_follows_weights(self):
        heavy = WeightedPoint(point(0.0), 1000.0, 1)
        light = WeightedPoint(point(1.0), 1.0, 2)
        hits = sum(
            d2_seeding([heavy, light], K_MEDIAN, 1, rng_seed=s)[0] == point(0.0)
            for s in range(200)
        )
        assert hits >= 190

    def test_three_clusters_hit_95_percent(self):
        rng = np.random.default_rng(7)
        centers = [(0.0, 0.0), (40.0, 0.0), (0.0, 40.0)]
        pts = _unit(_two_cluster_points(rng, 15, centers=centers, spread=1.0))
        hit_all = 0
        for seed in range(100):
            seeds = d2_seeding(pts, K_MEDIAN, 3, rng_seed=seed)
            labels = {
                min(range(3), key=lambda j: math.dist(s.coords, centers[j]))
                for s in seeds
            }
            hit_all += labels == {0, 1, 2}
        assert hit_all >= 95

    def test_rejects_empty_and_bad_k(self):
        with pytest.raises(ValueError):
            d2_seeding([], K_MEDIAN, 1)
        with pytest.raises(ValueError):
            d2_seeding(_unit([point(0.0)]), K_MEDIAN, 0)


class TestSizeBudget:
    def test_monotone_in_epsilon(self):
        loose = coreset_size_budget(1000, 3, 2, 0.5)
        tight = coreset_size_budget(1000, 3, 2, 0.1)
        assert tight > loose

    def test_scales_with_inverse_epsilon_squared(self):
        b1 = coreset_size_budget(1000, 3, 2, 0.2)
        b2 = coreset_size_budget(1000, 3, 2, 0.1)
        assert b2 == pytest.approx(4 * b1, rel=0.01)


class TestCsRam:
    def test_rejects_empty_and_bad_epsilon(self):
        with pytest.raises(ValueError):
            cs_ram([], K_MEDIAN, 1, 0.1)
        with pytest.raises(ValueError):
            cs_ram(_unit([point(0.0)]), K_MEDIAN, 1, 0.0)
        with pytest.raises(ValueError):
            cs_ram(_unit([point(0.0)]), K_MEDIAN, 1, 1.0)

    def test_small_input_is_exact_copy(self):
        pts = _unit([point(0.0), point(3.0), point(7.0)])
        cs = cs_ram(pts, K_MEDIAN, 1, 0.2)
        assert cs.epsilon == 0.0
        assert {(e.point, e.weight) for e in cs.entries} == {
            (point(0.0), 1.0),
            (point(3.0), 1.0),
            (point(7.0), 1.0),
        }

    def test_repeated_point_collapses_to_one_entry(self):
        pts = _unit([point(2.0)] * 6)
        cs = cs_ram(pts, K_MEDIAN, 1, 0.3)
        assert len(cs.entries) == 1
        assert cs.entries[0].point == point(2.0)
        assert cs.entries[0].weight == 6.0

    def test_total_weight_preserved_exactly(self):
        # Evaluating against one far-away center reduces the coreset
        # inequality to weight preservation, so the match must be exact.
        pts = [
            WeightedPoint(p, w, i + 1)
            for i, (p, w) in enumerate(
                zip(
                    gaussian_stream(5, 800, dim=2, extent=10.0),
                    np.random.default_rng(5).uniform(0.5, 2.0, 800),
                )
            )
        ]
        cs = cs_ram(pts, K_MEDIAN, 2, 0.3, rng_seed=11)
        assert 0 < len(cs.entries) < len(pts)
        w_in = sum(p.weight for p in pts)
        assert cs.total_weight == pytest.approx(w_in, rel=1e-12)
        far = [point(1e6, 1e6)]
        assert weighted_cost(list(cs.entries), K_MEDIAN, far) == pytest.approx(
            weighted_cost(pts, K_MEDIAN, far), rel=1e-6
        )

    def test_two_cluster_grid_error(self):
        # 40 unit-weight points in 2 clusters, checked exactly over a lattice
        # of candidate center pairs.
        rng = np.random.default_rng(3)
        pts = _unit(_two_cluster_points(rng, 20, centers=((0.0, 0.0), (20.0, 20.0)), spread=0.8))
        budget = coreset_size_budget(40, 2, 2, 0.2)
        assert budget >= 40  # desk-scale inputs are returned verbatim
        cs = cs_ram(pts, K_MEDIAN, 2, 0.2, rng_seed=1)
        grid = lattice_grid(-5.0, 25.0, 7.5, 2, 2)
        report = verify_coreset(cs, pts, K_MEDIAN, grid, 0.2)
        assert report.passed

    def test_sampled_summary_is_grid_accurate(self):
        pts = _unit(gaussian_stream(9, 800, dim=2, extent=30.0, spread=2.0))
        cs = cs_ram(pts, K_MEDIAN, 2, 0.35, rng_seed=2)
        assert len(cs.entries) < len(pts)
        grid = lattice_grid(0.0, 30.0, 7.5, 2, 2)
        report = verify_coreset(cs, pts, K_MEDIAN, grid, 0.35)
        assert report.passed, report.max_rel_error

    def test_deterministic_for_fixed_seed(self):
        pts = _unit(gaussian_stream(4, 600, dim=2, extent=20.0))
        a = cs_ram(pts, K_MEDIAN, 2, 0.3, rng_seed=42)
        b = cs_ram(pts, K_MEDIAN, 2, 0.3, rng_seed=42)
        assert a.entries == b.entries


class TestKmRam:
    def test_k_at_least_distinct_gives_zero_cost(self):
        pts = _unit([point(0.0), point(1.0), point(5.0)])
        res = km_ram(pts, K_MEDIAN, 3)
        assert set(res.centers) == {point(0.0), point(1.0), point(5.0)}
        assert res.lambda_cost == 0.0

    def test_two_far_clusters_matches_exhaustive(self):
        rng = np.random.default_rng(0)
        pts = _unit(_two_cluster_points(rng, 8))
        res = km_ram(pts, K_MEDIAN, 2, rng_seed=0)
        opt_centers, opt_cost = exhaustive_kmedian(pts, K_MEDIAN, 2)
        assert set(res.centers) == set(opt_centers)
        assert res.lambda_cost == pytest.approx(opt_cost, rel=1e-12)

    def test_weighted_duplicates_pick_heavy_point(self):
        pts = [WeightedPoint(point(0.0), 5.0, 1), WeightedPoint(point(3.0), 1.0, 2)]
        res = km_ram(pts, K_MEDIAN, 1, rng_seed=0)
        assert res.centers == (point(0.0),)
        assert res.lambda_cost == 3.0

    def test_lambda_cost_is_exact_recomputation(self):
        pts = _unit(gaussian_stream(12, 120, dim=2, extent=50.0))
        res = km_ram(pts, K_MEDIAN, 3, rng_seed=1)
        recomputed = weighted_cost(pts, K_MEDIAN, list(res.centers))
        assert res.lambda_cost == pytest.approx(recomputed, rel=1e-9)

    @pytest.mark.parametrize("cost", [K_MEDIAN, K_MEANS])
    def test_within_alpha_of_exhaustive_on_small_instances(self, cost):
        worst = 0.0
        for trial in range(100):
            rng = np.random.default_rng(trial)
            n = int(rng.integers(3, 13))
            k = int(rng.integers(1, 4))
            pts = [
                WeightedPoint(
                    Point(tuple(map(float, rng.uniform(0, 10, 2)))),
                    float(rng.uniform(0.1, 3.0)),
                    i + 1,
                )
                for i in range(n)
            ]
            res = km_ram(pts, cost, k, rng_seed=trial)
            _, opt = exhaustive_kmedian(pts, cost, k)
            if opt == 0:
                assert res.lambda_cost <= 1e-12
            else:
                worst = max(worst, res.lambda_cost / opt)
        assert worst <= LOCAL_SEARCH_APPROX

    def test_deterministic_for_fixed_seed(self):
        pts = _unit(gaussian_stream(8, 200, dim=2))
        a = km_ram(pts, K_MEDIAN, 3, rng_seed=5)
        b = km_ram(pts, K_MEDIAN, 3, rng_seed=5)
        assert a.centers == b.centers and a.lambda_cost == b.lambda_cost

    def test_rejects_empty_and_bad_k(self):
        with pytest.raises(ValueError):
            km_ram([], K_MEDIAN, 1)
        with pytest.raises(ValueError):
            km_ram(_unit([point(0.0)]), K_MEDIAN, 0)
