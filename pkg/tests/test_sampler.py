import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiltwalk.graphs import EndFixedTree, OrientedTree112, ProductTreeZd
from tiltwalk.sampler import (
    OutOfExactReach,
    calibrated_threshold,
    displacement_exponent,
    drift_report,
    exact_distance_ratios,
    exact_height_law,
    sample,
    sample_exact,
    sample_rosenbluth,
)
from tiltwalk.weights import SAW, WeaklySAW


def test_exact_law_untilted():
    law = exact_height_law(EndFixedTree(3), SAW(), 0.0, 2)
    assert law == pytest.approx({2: 1 / 6, 0: 1 / 6, -2: 4 / 6})


def test_exact_law_half():
    law = exact_height_law(EndFixedTree(3), SAW(), 0.5, 2)
    assert law == pytest.approx({2: 0.4, 0: 0.2, -2: 0.4})


@pytest.mark.parametrize("n", [3, 6, 9])
def test_exact_law_symmetric_at_half(n):
    for model in (EndFixedTree(3), OrientedTree112(), ProductTreeZd(3, 1)):
        law = exact_height_law(model, SAW(), 0.5, n)
        for m, p in law.items():
            assert law.get(-m, 0.0) == pytest.approx(p, rel=1e-12)


def test_trivial_walk():
    run = sample_exact(EndFixedTree(3), SAW(), 0.3, 0, 10, seed=1)
    assert set(run.heights.tolist()) == {0}
    rep = drift_report(run)
    assert rep.distance_ratio == 0 and rep.height_ratio == 0


@pytest.mark.parametrize("model,lam,n", [(EndFixedTree(3), 0.5, 10), (OrientedTree112(), 0.2, 8),
                                         (ProductTreeZd(3, 1), 0.0, 6)])
def test_exact_frequencies_match_law(model, lam, n):
    count = 20000
    run = sample_exact(model, SAW(), lam, n, count, seed=11)
    law = exact_height_law(model, SAW(), lam, n)
    freq = run.height_frequencies()
    for m, p in law.items():
        se = math.sqrt(p * (1 - p) / count)
        assert abs(freq.get(m, 0.0) - p) <= 4 * se + 1e-12


def test_exact_suffix_distance_is_length():
    run = sample_exact(EndFixedTree(3), SAW(), 0.5, 7, 50, seed=0)
    assert run.method == "exact-suffix"
    assert (run.distances == 7).all()


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32), method=st.sampled_from(["exact", "rosenbluth"]))
def test_seed_determinism(seed, method):
    a = sample(ProductTreeZd(3, 1), SAW(), 0.3, 6, 30, seed, method)
    b = sample(ProductTreeZd(3, 1), SAW(), 0.3, 6, 30, seed, method)
    assert np.array_equal(a.heights, b.heights) and np.array_equal(a.distances, b.distances)
    if a.log_weights is not None:
        assert np.array_equal(a.log_weights, b.log_weights)


def test_streams_split_by_index():
    # a prefix of a run is the run with fewer samples
    a = sample_rosenbluth(ProductTreeZd(3, 1), SAW(), 0.0, 20, 40, seed=5)
    b = sample_rosenbluth(ProductTreeZd(3, 1), SAW(), 0.0, 20, 15, seed=5)
    k = len(b.heights)
    assert np.array_equal(a.heights[:k], b.heights)
    assert np.array_equal(a.indices[:k], b.indices)


def test_rosenbluth_matches_exact_on_tree():
    n, count = 8, 4000
    law = exact_height_law(EndFixedTree(3), SAW(), 0.5, n)
    run = sample_rosenbluth(EndFixedTree(3), SAW(), 0.5, n, count, seed=3)
    for m, p in law.items():
        est, se = run.weighted_mean(run.heights == m)
        assert abs(est - p) <= 3 * max(se, math.sqrt(p * (1 - p) / run.ess))


def test_rosenbluth_weakly_saw_on_product():
    n = 6
    law = exact_height_law(ProductTreeZd(3, 1), WeaklySAW(0.5), 0.0, n)
    run = sample_rosenbluth(ProductTreeZd(3, 1), WeaklySAW(0.5), 0.0, n, 4000, seed=8)
    est, se = run.weighted_mean(run.heights)
    mean = sum(m * p for m, p in law.items())
    assert abs(est - mean) <= 4 * se


def test_rosenbluth_empty_run():
    run = sample_rosenbluth(ProductTreeZd(3, 1), SAW(), 0.0, 10, 0, seed=0)
    assert run.num_samples == 0 and run.ess == 0
    rep = drift_report(run)
    assert math.isnan(rep.distance_ratio)


def test_rosenbluth_rejects_zero_length():
    with pytest.raises(ValueError):
        sample_rosenbluth(ProductTreeZd(3, 1), SAW(), 0.0, 0, 5)


def test_downward_drift_untilted():
    run = sample_exact(EndFixedTree(3), SAW(), 0.0, 12, 3000, seed=2)
    rep = drift_report(run)
    assert rep.height_ratio < 0
    law = exact_height_law(EndFixedTree(3), SAW(), 0.0, 2)
    assert sum(m * p for m, p in law.items()) == pytest.approx((2 - 8 + 0) / 6)


def test_symmetric_height_at_half():
    run = sample_exact(EndFixedTree(3), SAW(), 0.5, 10, 5000, seed=4)
    rep = drift_report(run)
    assert abs(rep.height_ratio) <= 4 * rep.height_ratio_se


def test_out_of_exact_reach():
    with pytest.raises(OutOfExactReach):
        sample_exact(ProductTreeZd(3, 1), SAW(), 0.0, 30, 5)
    with pytest.raises(OutOfExactReach):
        sample_exact(EndFixedTree(3), SAW(), 0.0, 5000, 1)


def test_exact_ratio_calibration():
    r = exact_distance_ratios(ProductTreeZd(3, 1), SAW(), 0.0, 8)
    assert r[1] == 1.0
    assert all(0 < v <= 1 for v in r.values())
    thr = calibrated_threshold(ProductTreeZd(3, 1), SAW(), 0.0, 8)
    assert 0 < thr < min(r.values())


def test_displacement_exponent_reported():
    rep = displacement_exponent(EndFixedTree(3), SAW(), 0.5, ns=(20, 40, 80), count=500, seed=1)
    assert rep.method == "exact-suffix"
    assert math.isfinite(rep.exponent)
    assert len(rep.mean_abs_height) == 3
