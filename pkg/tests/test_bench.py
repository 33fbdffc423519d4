import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutforest.bench import (
    auc,
    auc_vs_tree_size,
    batch_scores,
    convergence_gap,
    detected_anomaly_count,
    detection_count_vs_iterations,
    gen_clusters_with_noise,
    gen_scaled_cluster,
    gen_shifted_clusters,
    gen_sine_anomaly,
    minmax_normalize,
    ten_point_dataset,
    LabeledDataset,
)
from cutforest.dataset import Dataset
from cutforest.density import density_measure
from cutforest.tree import AlgorithmKind


# -- generators --------------------------------------------------------------------


def test_sine_series_values():
    x = gen_sine_anomaly()
    assert len(x) == 730
    assert x[240 - 1] == 80.0
    assert x[235 - 1] == 80.0
    assert x[254 - 1] == 80.0
    assert x[234 - 1] != 80.0
    assert x[255 - 1] != 80.0
    assert math.isclose(x[30 - 1], 0.0, abs_tol=1e-12)  # sin(0)
    assert math.isclose(x[43 - 1], 50 * math.sin(2 * math.pi * 13 / 50), rel_tol=1e-12)


def test_ten_point_dataset_shape():
    data = ten_point_dataset()
    assert len(data) == 10 and data.dim == 2
    assert tuple(data.points[0]) == (-23.6, -2.0)


def test_shifted_clusters_composition():
    labeled = gen_shifted_clusters(seed=0)
    assert len(labeled.data) == 110
    assert labeled.labels.sum() == 10
    anomalies = labeled.data.points[labeled.labels == 1]
    # five points near each planted offset
    assert (np.abs(anomalies - (-5, -5)).max(axis=1) < 5).sum() == 5
    assert (np.abs(anomalies - (5, 5)).max(axis=1) < 5).sum() == 5


def test_clusters_with_noise_composition():
    labeled = gen_clusters_with_noise(seed=0)
    assert len(labeled.data) == 240
    assert labeled.labels.sum() == 40
    clusters = labeled.data.points[labeled.labels == 0]
    spread_per_cluster = clusters[:100].std(axis=0)
    assert (spread_per_cluster < 0.5).all()  # tight around its center


def test_zero_variance_cluster_density_is_one():
    labeled = gen_clusters_with_noise(seed=1, n_per_cluster=3, n_noise=0, scale=0.0,
                                      centers=((2.0, 2.0),))
    assert density_measure(labeled.data) == 1.0


def test_generators_deterministic_under_seed():
    a = gen_shifted_clusters(seed=5)
    b = gen_shifted_clusters(seed=5)
    assert np.array_equal(a.data.points, b.data.points)
    c = gen_clusters_with_noise(seed=5)
    d = gen_clusters_with_noise(seed=5)
    assert np.array_equal(c.data.points, d.data.points)


def test_labeled_dataset_validates():
    with pytest.raises(ValueError):
        LabeledDataset(Dataset([(0, 0)]), np.array([1, 0]))


# -- auc -----------------------------------------------------------------------------


def test_auc_perfect_separation():
    assert auc([0.1, 0.2, 0.9, 0.8], [0, 0, 1, 1]) == 1.0


def test_auc_all_ties():
    assert auc([3.0, 3.0, 3.0, 3.0], [0, 1, 0, 1]) == 0.5


def test_auc_small_case():
    assert auc([3.0, 1.0, 2.0], [1, 0, 1]) == 1.0


def test_auc_reversed():
    assert auc([0.9, 0.8, 0.1], [0, 0, 1]) == 0.0


def test_auc_requires_both_classes():
    with pytest.raises(ValueError):
        auc([1.0, 2.0], [1, 1])


def _auc_pairwise(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else (0.5 if p == q else 0.0)
    return total / (len(pos) * len(neg))


@given(
    st.lists(st.integers(0, 9), min_size=2, max_size=50),
    st.integers(0, 2**30),
)
@settings(max_examples=80)
def test_auc_matches_pairwise_oracle(score_grid, seed):
    rng = np.random.default_rng(seed)
    scores = np.asarray(score_grid, dtype=float) / 2.0
    labels = rng.integers(0, 2, len(scores))
    if labels.sum() in (0, len(labels)):
        labels[0] = 1 - labels[0]
    assert math.isclose(
        auc(scores, labels), _auc_pairwise(scores, labels), rel_tol=1e-12
    )


def test_auc_invariant_under_minmax_normalization():
    rng = np.random.default_rng(1)
    scores = rng.uniform(0, 5, 40)
    labels = rng.integers(0, 2, 40)
    labels[0], labels[1] = 0, 1
    assert math.isclose(
        auc(scores, labels), auc(minmax_normalize(scores), labels), rel_tol=1e-12
    )


# -- thresholded detection -------------------------------------------------------------


def test_minmax_normalize_range():
    out = minmax_normalize([2.0, 4.0, 6.0])
    assert out.tolist() == [0.0, 0.5, 1.0]
    assert minmax_normalize([3.0, 3.0]).tolist() == [0.0, 0.0]


def test_detected_anomaly_count_threshold_zero():
    scores = [0.0, 1.0, 2.0, 3.0]
    labels = [0, 1, 0, 1]
    # anything above the minimum counts at threshold 0
    assert detected_anomaly_count(scores, labels, 0.0) == 2
    assert detected_anomaly_count(scores, labels, 0.9) == 1
    with pytest.raises(ValueError):
        detected_anomaly_count([], [], 0.0)


# -- runners ------------------------------------------------------------------------------


def test_batch_scores_families():
    data = ten_point_dataset()
    cod = batch_scores(data, AlgorithmKind.RRCF, iterations=5, seed=0)
    iso = batch_scores(data, AlgorithmKind.IF, iterations=5, seed=0)
    assert all(s >= 1.0 for s in cod)
    assert all(0.0 < s <= 1.0 for s in iso)


def test_auc_vs_tree_size_rows():
    labeled = gen_shifted_clusters(seed=0)
    rows = list(
        auc_vs_tree_size(labeled, [AlgorithmKind.RRCF], [16, 200], [0],
                         iterations=10)
    )
    assert len(rows) == 2
    for row in rows:
        assert 0.0 <= row["auc"] <= 1.0
    assert rows[1]["tree_size"] == 200  # clamped internally to n=110


def test_detection_rows():
    labeled = gen_clusters_with_noise(seed=0)
    rows = list(
        detection_count_vs_iterations(labeled, [AlgorithmKind.WRCF], [20], [0],
                                      sample_size=20, threshold=0.35)
    )
    assert len(rows) == 1
    assert 0 <= rows[0]["detected"] <= 40


def test_convergence_gap_runs():
    data = ten_point_dataset()
    gap, early, final = convergence_gap(data, AlgorithmKind.RRCF, seed=0,
                                        iterations=50, checkpoint=10)
    assert gap >= 0.0
    assert len(early) == len(final) == 10


def test_scaled_cluster_density_grows_with_k():
    d1 = np.mean([density_measure(gen_scaled_cluster(1, seed=s)) for s in range(4)])
    d50 = np.mean([density_measure(gen_scaled_cluster(50, seed=s)) for s in range(4)])
    assert d50 > d1 + 0.3
