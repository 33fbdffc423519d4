"""Forest construction by bagging, and the forest-level average scores.

Each bagging iteration chops a fresh random permutation of the dataset into
k = floor(n / s) disjoint samples of size s and grows one tree per sample;
points left over by the chop sit that iteration out. A point's average score
divides by the number of trees whose sample actually contained it, and points
never sampled at all get an explicit null instead of a fake zero.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .score import ScoreReport, average_path_length, codisp_all_points
from .tree import AlgorithmKind, BuildStats, Tree, build_tree, depth

__all__ = [
    "BaggingConfig",
    "Forest",
    "bagged_forest",
    "avg_codisp",
    "avg_codisp_curve",
    "avg_anomaly_score",
]


@dataclass(frozen=True)
class BaggingConfig:
    """Sampling plan for a bagged forest.

    sample_size None means the full dataset (k = 1 tree per iteration).
    """

    kind: AlgorithmKind
    sample_size: int | None = None
    iterations: int = 1
    alpha: int = 2
    max_retries: int = 64
    seed: int | None = None

    def resolved_sample_size(self, n: int) -> int:
        s = n if self.sample_size is None else self.sample_size
        if not 1 <= s <= n:
            raise ValueError(f"sample size must be in 1..{n}, got {s}")
        return s


class Forest:
    """Trees plus the samples they were grown on."""

    def __init__(self, trees: list[Tree], samples: list[np.ndarray],
                 config: BaggingConfig, n_points: int, stats: BuildStats):
        self.trees = trees
        self.samples = samples
        self.config = config
        self.n_points = n_points
        self.stats = stats

    @property
    def trees_per_iteration(self) -> int:
        return len(self.trees) // self.config.iterations

    def appearances(self) -> np.ndarray:
        """How many trees sampled each point: a(x) indexed by point id."""
        counts = np.zeros(self.n_points, dtype=np.int64)
        for sample in self.samples:
            counts[sample] += 1
        return counts


def bagged_forest(data: Dataset | np.ndarray, config: BaggingConfig,
                  threads: int = 1) -> Forest:
    """Grow iterations x floor(n/s) trees over disjoint-within-iteration samples.

    All samples are drawn up front from the forest RNG; each tree then builds
    from its own spawned RNG, so results are identical for any thread count.
    """
    points = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    n = len(points)
    s = config.resolved_sample_size(n)
    k = n // s
    master = np.random.default_rng(config.seed)
    samples: list[np.ndarray] = []
    for _ in range(config.iterations):
        perm = master.permutation(n)
        for i in range(k):
            samples.append(np.sort(perm[i * s : (i + 1) * s]))
    child_seeds = np.random.SeedSequence(config.seed).spawn(len(samples))
    stats = BuildStats()

    def grow(i: int) -> Tree:
        rng = np.random.default_rng(child_seeds[i])
        return build_tree(points, config.kind, rng=rng, alpha=config.alpha,
                          max_retries=config.max_retries, ids=samples[i], stats=stats)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(pool.map(grow, range(len(samples))))
    else:
        trees = [grow(i) for i in range(len(samples))]
    return Forest(trees, samples, config, n, stats)


def _leaf_depths(tree: Tree) -> dict[int, int]:
    out: dict[int, int] = {}
    stack = [(tree.root, 0)]
    while stack:
        node, d = stack.pop()
        if node.is_leaf:
            for pid in node.members:
                out[int(pid)] = d
        else:
            stack.append((node.left, d + 1))
            stack.append((node.right, d + 1))
    return out


def _accumulate(forest: Forest, per_tree, checkpoints=()):
    """Run per_tree over every tree, summing per-point values.

    Returns (sums, counts, snapshots) where snapshots[N] holds the per-point
    averages after the first N iterations, for each N in ``checkpoints``.
    """
    sums = np.zeros(forest.n_points)
    counts = np.zeros(forest.n_points, dtype=np.int64)
    snapshots: dict[int, list[float | None]] = {}
    pending = sorted(set(checkpoints))
    per_iter = forest.trees_per_iteration
    done_iters = 0
    for t, tree in enumerate(forest.trees):
        for pid, val in per_tree(tree).items():
            sums[pid] += val
            counts[pid] += 1
        if (t + 1) % per_iter == 0:
            done_iters += 1
            while pending and pending[0] == done_iters:
                snapshots[done_iters] = _averages(sums, counts)
                pending.pop(0)
    return sums, counts, snapshots


def _averages(sums: np.ndarray, counts: np.ndarray) -> list[float | None]:
    return [
        (sums[i] / counts[i]) if counts[i] > 0 else None for i in range(len(sums))
    ]


def _report(forest: Forest, scores: list[float | None]) -> ScoreReport:
    cfg = forest.config
    params = {
        "iterations": cfg.iterations,
        "sample_size": cfg.sample_size if cfg.sample_size is not None else forest.n_points,
    }
    if cfg.kind.density_aware:
        params["alpha"] = cfg.alpha
    return ScoreReport(
        point_ids=list(range(forest.n_points)),
        scores=scores,
        algorithm=cfg.kind.value,
        seed=cfg.seed,
        n_trees=len(forest.trees),
        params=params,
    )


def avg_codisp(forest: Forest) -> ScoreReport:
    """Collusive displacement averaged over the trees containing each point."""
    sums, counts, _ = _accumulate(forest, codisp_all_points)
    return _report(forest, _averages(sums, counts))


def avg_codisp_curve(forest: Forest, checkpoints) -> dict[int, list[float | None]]:
    """Average collusive displacement after the first N iterations, per N.

    Prefix averages of one run, matching how convergence against the full-run
    value is assessed.
    """
    _, _, snapshots = _accumulate(forest, codisp_all_points, checkpoints)
    return snapshots


def avg_anomaly_score(forest: Forest) -> ScoreReport:
    """Isolation-family score 2^(-mean leaf depth / c(s)) per sampled point."""
    sums, counts, _ = _accumulate(forest, _leaf_depths)
    s = forest.config.resolved_sample_size(forest.n_points)
    c = average_path_length(s)
    scores: list[float | None] = [
        (2.0 ** (-(sums[i] / counts[i]) / c)) if counts[i] > 0 else None
        for i in range(forest.n_points)
    ]
    return _report(forest, scores)
