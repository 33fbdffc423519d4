"""Synthetic data generators, AUC, and comparison runners.

The generators reproduce the shapes used by the comparison experiments: a
sine wave with a flat anomalous plateau, a ten-point set with one cluster and
two far points, gaussian clouds with planted offset clusters, and tight
clusters plus scattered noise. Cloud coordinates are standard normal per
axis; planted offsets and scales are as configured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .ensemble import BaggingConfig, avg_anomaly_score, avg_codisp, avg_codisp_curve, bagged_forest
from .tree import AlgorithmKind

__all__ = [
    "LabeledDataset",
    "gen_sine_anomaly",
    "ten_point_dataset",
    "gen_shifted_clusters",
    "gen_clusters_with_noise",
    "gen_scaled_cluster",
    "auc",
    "minmax_normalize",
    "detected_anomaly_count",
    "batch_scores",
    "auc_vs_tree_size",
    "detection_count_vs_iterations",
    "convergence_gap",
]


@dataclass(frozen=True)
class LabeledDataset:
    """A dataset with binary anomaly labels (1 = anomaly)."""

    data: Dataset
    labels: np.ndarray

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.data):
            raise ValueError("label count must match point count")


def gen_sine_anomaly() -> np.ndarray:
    """Sine series of length 730 with a flat plateau of 80s at t in [235, 254].

    x_t = 50 sin(2 pi (t - 30) / 50) elsewhere, t starting at 1.
    """
    t = np.arange(1, 731, dtype=float)
    x = 50.0 * np.sin(2.0 * math.pi * (t - 30.0) / 50.0)
    x[(t >= 235) & (t <= 254)] = 80.0
    return x


def ten_point_dataset() -> Dataset:
    """Ten 2-D points: a tight cluster of eight plus two far-left outliers."""
    return Dataset(
        [
            (-23.6, -2.0),
            (-12.1, 0.3),
            (0.0, 1.7),
            (-1.1, 1.2),
            (0.6, 1.0),
            (0.3, -0.3),
            (0.1, -0.7),
            (1.3, -0.8),
            (-0.7, -0.7),
            (-0.6, 0.1),
        ]
    )


def gen_shifted_clusters(seed=None, n_core: int = 100, n_cluster: int = 5) -> LabeledDataset:
    """A standard-normal cloud plus two small clusters shifted by -(5,5) and +(5,5).

    The shifted clusters are the labeled anomalies.
    """
    rng = np.random.default_rng(seed)
    core = rng.standard_normal((n_core, 2))
    low = rng.standard_normal((n_cluster, 2)) - 5.0
    high = rng.standard_normal((n_cluster, 2)) + 5.0
    pts = np.vstack([core, low, high])
    labels = np.zeros(len(pts), dtype=np.int64)
    labels[n_core:] = 1
    return LabeledDataset(Dataset(pts), labels)


def gen_clusters_with_noise(seed=None, n_per_cluster: int = 100, n_noise: int = 40,
                            scale: float = 0.1,
                            centers=((-2.0, 0.0), (2.0, 2.0))) -> LabeledDataset:
    """Two tight clusters (0.1 x normal, translated) plus scattered normal noise.

    The scattered points are the labeled anomalies.
    """
    rng = np.random.default_rng(seed)
    parts = [
        scale * rng.standard_normal((n_per_cluster, 2)) + np.asarray(c)
        for c in centers
    ]
    noise = rng.standard_normal((n_noise, 2))
    pts = np.vstack(parts + [noise])
    labels = np.zeros(len(pts), dtype=np.int64)
    labels[len(pts) - n_noise :] = 1
    return LabeledDataset(Dataset(pts), labels)


def gen_scaled_cluster(k: float, seed=None, n_cluster: int = 50, n_spread: int = 5) -> Dataset:
    """A normal cloud shrunk by 1/k plus a few unshrunk normal points.

    Larger k packs the cloud tighter, raising the density measure while the
    bounding box stays set by the spread points.
    """
    rng = np.random.default_rng(seed)
    cluster = rng.standard_normal((n_cluster, 2)) / k
    spread = rng.standard_normal((n_spread, 2))
    return Dataset(np.vstack([cluster, spread]))


# -- metrics -------------------------------------------------------------------


def auc(scores, labels) -> float:
    """Probability a random anomaly outranks a random normal point, ties at 1/2.

    The exact rank statistic, not a thresholded curve integration.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be equal-length 1-D sequences")
    if np.isnan(s).any():
        raise ValueError("scores must not contain NaN")
    n_pos = int((y == 1).sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("need at least one positive and one negative label")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(len(s))
    sorted_s = s[order]
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def minmax_normalize(scores) -> np.ndarray:
    """Map scores onto [0, 1] monotonically; a constant vector maps to zeros."""
    s = np.asarray(scores, dtype=float)
    lo, hi = s.min(), s.max()
    if hi == lo:
        return np.zeros_like(s)
    return (s - lo) / (hi - lo)


def detected_anomaly_count(scores, labels, threshold: float) -> int:
    """Labeled anomalies whose min-max-normalized score strictly exceeds the threshold."""
    s = np.asarray(scores, dtype=float)
    if s.size == 0:
        raise ValueError("no scores to threshold")
    y = np.asarray(labels)
    normalized = minmax_normalize(s)
    return int(((normalized > threshold) & (y == 1)).sum())


# -- runners ---------------------------------------------------------------------


def batch_scores(data: Dataset, kind: AlgorithmKind, *, iterations: int,
                 sample_size: int | None = None, seed=None, alpha: int = 2,
                 threads: int = 1) -> list[float | None]:
    """Scores from a bagged forest: displacement or isolation family per kind."""
    cfg = BaggingConfig(kind=kind, sample_size=sample_size, iterations=iterations,
                        alpha=alpha, seed=seed)
    forest = bagged_forest(data, cfg, threads=threads)
    report = avg_codisp(forest) if kind.codisp_family else avg_anomaly_score(forest)
    return report.scores


def _scored_pairs(scores, labels):
    pairs = [(s, l) for s, l in zip(scores, labels) if s is not None]
    return [s for s, _ in pairs], [l for _, l in pairs]


def auc_vs_tree_size(labeled: LabeledDataset, kinds, tree_sizes, seeds, *,
                     iterations: int = 50, alpha: int = 2, threads: int = 1):
    """AUC per (algorithm, seed, tree size); sizes above n are clamped to n.

    Yields rows of (algorithm, seed, tree_size, auc). Points a run never
    sampled are left out of its AUC.
    """
    n = len(labeled.data)
    for kind in kinds:
        for seed in seeds:
            for size in tree_sizes:
                s = min(size, n)
                scores = batch_scores(labeled.data, kind, iterations=iterations,
                                      sample_size=s, seed=seed, alpha=alpha,
                                      threads=threads)
                xs, ys = _scored_pairs(scores, labeled.labels)
                yield {
                    "algorithm": kind.value,
                    "seed": seed,
                    "tree_size": size,
                    "auc": auc(xs, ys),
                }


def detection_count_vs_iterations(labeled: LabeledDataset, kinds, iteration_counts,
                                  seeds, *, sample_size: int, threshold: float,
                                  alpha: int = 2, threads: int = 1):
    """Detected-anomaly counts f(N) per (algorithm, seed, N) at one threshold."""
    for kind in kinds:
        for seed in seeds:
            for n_iter in iteration_counts:
                scores = batch_scores(labeled.data, kind, iterations=n_iter,
                                      sample_size=sample_size, seed=seed,
                                      alpha=alpha, threads=threads)
                filled = [s if s is not None else float("nan") for s in scores]
                ok = ~np.isnan(filled)
                count = detected_anomaly_count(
                    np.asarray(filled)[ok], np.asarray(labeled.labels)[ok], threshold
                )
                yield {
                    "algorithm": kind.value,
                    "seed": seed,
                    "iterations": n_iter,
                    "detected": count,
                }


def convergence_gap(data: Dataset, kind: AlgorithmKind, *, seed, iterations: int,
                    checkpoint: int, sample_size: int | None = None,
                    alpha: int = 2) -> tuple[float, list, list]:
    """Distance between early and full average displacement scores.

    Runs one forest of ``iterations`` bagging rounds, snapshots the running
    average after ``checkpoint`` rounds, and returns the L1 gap between the
    snapshot and the final averages (plus both score vectors).
    """
    cfg = BaggingConfig(kind=kind, sample_size=sample_size, iterations=iterations,
                        alpha=alpha, seed=seed)
    forest = bagged_forest(data, cfg)
    curve = avg_codisp_curve(forest, [checkpoint, iterations])
    early = curve[checkpoint]
    final = curve[iterations]
    gap = sum(
        abs(a - b) for a, b in zip(final, early) if a is not None and b is not None
    )
    return float(gap), early, final
