import math
from fractions import Fraction

import numpy as np
import pytest

from cutforest.dataset import Dataset
from cutforest.density import (
    DensityParams,
    bad_split_measure,
    density_measure,
    density_measure_1d,
    good_split_spans,
    interval_count,
    interval_radius,
    sample_split_density_aware,
)
from helpers import bad_measure_oracle, good_spans_exact, mu0_oracle

SIX = np.array([0.0, 1.0, 2.0, 10.0, 11.0, 12.0])
SIX_2D = Dataset([(0, 0), (1, 0), (2, 0), (10, 0), (11, 0), (12, 0)])
FOUR = np.array([0.0, 1.0, 6.0, 7.0])


# -- radius ---------------------------------------------------------------------


def test_radius_six_points():
    assert interval_radius(SIX) == 1.2


def test_radius_equally_spaced_is_half_step():
    for a in (0.5, 1.0, 2.0, 0.25):
        for n in (2, 5, 9):
            vals = [a * k for k in range(1, n + 1)]
            assert interval_radius(vals) == a / 2


def test_radius_singleton_is_zero():
    assert interval_radius([7.0]) == 0.0


def test_radius_all_identical_is_zero():
    assert interval_radius([3.0, 3.0, 3.0]) == 0.0


def test_radius_empty_errors():
    with pytest.raises(ValueError):
        interval_radius([])


# -- interval counts ------------------------------------------------------------


def test_interval_count_in_cluster():
    assert interval_count(SIX, 1.0) == 3


def test_interval_count_in_gap():
    assert interval_count(SIX, 5.0) == 0


def test_interval_count_degenerate_duplicates():
    assert interval_count([5.0, 5.0, 5.0], 5.0) == 3
    assert interval_count([5.0, 5.0, 5.0], 4.0) == 0


def test_interval_count_outside_range():
    assert interval_count(SIX, 30.0) == 0


def test_interval_count_is_half_open():
    # values {0, 4}: radius 2; the interval [p-2, p+2) at p=2 contains 0 but not 4
    assert interval_count([0.0, 4.0], 2.0) == 1


# -- density measure ------------------------------------------------------------


def test_mu0_equally_spaced_is_one_over_n():
    for n in range(2, 51):
        vals = [0.5 * k for k in range(1, n + 1)]
        assert density_measure_1d(vals) == 1.0 / n


def test_mu0_identical_is_one():
    assert density_measure_1d([4.0] * 7) == 1.0
    assert density_measure_1d([4.0]) == 1.0


def test_mu0_six_points():
    assert density_measure_1d(SIX) == 0.5


def test_mu_six_point_dataset():
    assert density_measure(SIX_2D) == 0.75


def test_mu_single_point():
    assert density_measure(Dataset([(3.0, -1.0, 2.0)])) == 1.0


def test_mu_aligned_grid_is_one_over_n():
    n = 8
    pts = [(k, k, k) for k in range(1, n + 1)]
    assert density_measure(Dataset(pts)) == 1.0 / n


def test_mu0_matches_exact_oracle_on_random_multisets():
    rng = np.random.default_rng(42)
    for _ in range(300):
        n = int(rng.integers(1, 13))
        vals = rng.integers(0, 16, n) / 4.0  # coarse dyadic grid: duplicates arise
        assert density_measure_1d(vals) == float(mu0_oracle(vals))


def test_mu0_one_iff_identical_random():
    rng = np.random.default_rng(7)
    for _ in range(300):
        n = int(rng.integers(2, 13))
        vals = rng.integers(0, 6, n) / 2.0
        mu = density_measure_1d(vals)
        if len(set(vals.tolist())) == 1:
            assert mu == 1.0
        else:
            assert mu < 1.0


def test_mu0_progression_iff_one_over_n():
    # forward direction on exact progressions; converse via perturbation
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(3, 12))
        a = float(rng.choice([0.25, 0.5, 1.0, 2.0]))
        b = float(rng.integers(-8, 8))
        vals = np.array([a * k + b for k in range(1, n + 1)])
        assert density_measure_1d(vals) == 1.0 / n
        bumped = vals.copy()
        bumped[int(rng.integers(0, n))] += a * 0.25  # no longer equally spaced
        if len(set(bumped.tolist())) == n and density_measure_1d(bumped) == 1.0 / n:
            pytest.fail("perturbed progression kept the minimal density")


def test_mu0_invariance_under_affine_maps():
    rng = np.random.default_rng(11)
    for _ in range(400):
        n = int(rng.integers(2, 13))
        vals = rng.uniform(0, 10, n)
        a = float(rng.uniform(-10, 10))
        if a == 0.0:
            a = 1.0
        b = float(rng.uniform(-10, 10))
        m0 = density_measure_1d(vals)
        m1 = density_measure_1d(a * vals + b)
        assert math.isclose(m0, m1, rel_tol=1e-12)


def test_mu_invariance_under_reflection():
    rng = np.random.default_rng(13)
    for _ in range(50):
        pts = rng.uniform(-5, 5, (int(rng.integers(2, 10)), 2))
        assert math.isclose(
            density_measure(Dataset(pts)), density_measure(Dataset(-pts)), rel_tol=1e-12
        )


# -- bad split measure ------------------------------------------------------------


def test_bad_measure_six_points():
    # crowded centers are [0, 2.2] plus (9.8, 12]
    assert math.isclose(bad_split_measure(SIX, 2), 4.4, rel_tol=1e-12)


def test_bad_measure_sharp_construction_exact():
    # k interior values duplicated alpha times inside [0, alpha k + 1]:
    # the crowded set has measure exactly k
    for alpha in (2, 3, 5):
        for k in (1, 3, 6):
            vals = [0.0, float(alpha * k + 1)]
            for j in range(1, k + 1):
                vals.extend([float(j)] * alpha)
            assert interval_radius(vals) == 0.5
            assert bad_split_measure(vals, alpha) == float(k)


def test_bad_measure_equally_spaced_is_zero():
    vals = [0.5 * k for k in range(1, 9)]
    assert bad_split_measure(vals, 2) == 0.0


def test_bad_measure_matches_exact_oracle():
    rng = np.random.default_rng(5)
    for _ in range(300):
        n = int(rng.integers(2, 13))
        vals = rng.integers(0, 16, n) / 4.0
        if vals.min() == vals.max():
            continue
        for alpha in (2, 3, 4):
            got = bad_split_measure(vals, alpha)
            want = float(bad_measure_oracle(vals, alpha))
            assert math.isclose(got, want, rel_tol=1e-9, abs_tol=1e-12)


def test_bad_measure_strictly_below_bound():
    rng = np.random.default_rng(17)
    for _ in range(300):
        n = int(rng.integers(2, 13))
        vals = rng.uniform(0, 10, n)
        if vals.min() == vals.max():
            continue
        span = vals.max() - vals.min()
        for alpha in (2, 3, 4):
            assert bad_split_measure(vals, alpha) < span / alpha


def test_bad_measure_constant_projection_errors():
    with pytest.raises(ValueError):
        bad_split_measure([2.0, 2.0], 2)


# -- density-aware sampling -------------------------------------------------------


def test_sampler_six_points_lands_in_acceptance_region():
    rng = np.random.default_rng(0)
    params = DensityParams(alpha=2)
    for _ in range(500):
        p, _ = sample_split_density_aware(SIX, params, rng)
        assert 2.2 < p <= 9.8


def test_sampler_four_points_lands_in_acceptance_region():
    rng = np.random.default_rng(1)
    params = DensityParams(alpha=2)
    lo, hi = 7.0 / 6.0, 35.0 / 6.0
    for _ in range(500):
        p, _ = sample_split_density_aware(FOUR, params, rng)
        assert lo < p <= hi + 1e-12


def test_sampler_two_points_accepts_first_draw():
    rng = np.random.default_rng(2)
    params = DensityParams(alpha=2)
    for _ in range(200):
        p, retries = sample_split_density_aware([0.0, 10.0], params, rng)
        assert retries == 0
        assert 0.0 <= p <= 10.0


def test_sampler_rejection_rate_matches_bad_fraction():
    rng = np.random.default_rng(3)
    params = DensityParams(alpha=2, max_retries=64)
    draws = 0
    rejects = 0
    for _ in range(20000):
        _, retries = sample_split_density_aware(SIX, params, rng)
        draws += retries + 1
        rejects += retries
    assert abs(rejects / draws - 11.0 / 30.0) < 0.02


def test_sampler_fallback_draws_from_good_set():
    rng = np.random.default_rng(4)
    params = DensityParams(alpha=2, max_retries=1)
    for _ in range(300):
        p, _ = sample_split_density_aware(SIX, params, rng)
        assert 2.2 < p <= 9.8


def test_good_spans_match_exact_oracle():
    rng = np.random.default_rng(9)
    for _ in range(200):
        n = int(rng.integers(2, 13))
        vals = rng.integers(0, 16, n) / 4.0
        if vals.min() == vals.max():
            continue
        got = good_split_spans(vals, 2)
        want = good_spans_exact(vals, 2)
        assert len(got) == len(want)
        for (ga, gb), (wa, wb) in zip(got, want):
            assert math.isclose(ga, float(wa), rel_tol=1e-9, abs_tol=1e-12)
            assert math.isclose(gb, float(wb), rel_tol=1e-9, abs_tol=1e-12)


def test_sampler_requires_spread():
    with pytest.raises(ValueError):
        sample_split_density_aware([3.0, 3.0], DensityParams(), np.random.default_rng(0))


def test_params_validation():
    with pytest.raises(ValueError):
        DensityParams(alpha=1)
    with pytest.raises(ValueError):
        DensityParams(max_retries=0)
