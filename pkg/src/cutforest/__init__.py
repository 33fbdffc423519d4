"""Tree-ensemble anomaly detection over multisets of points in R^d.

Four detector variants share one partitioning engine:

  - ``if``:   isolation forest (uniform axis, uniform split value)
  - ``wif``:  isolation forest with density-aware split values
  - ``rrcf``: random cut forest (axis proportional to box side, uniform split)
  - ``wrcf``: random cut forest with density-aware split values

Density-aware sampling rejects split values whose half-open radius interval
covers ``alpha`` or more projected points, steering cuts into the gaps
between clusters.
"""

__version__ = "0.1.0"

from .dataset import BoundingBox, Dataset, bounding_box, project, total_edge_length
from .density import (
    DensityParams,
    bad_split_measure,
    density_measure,
    density_measure_1d,
    interval_count,
    interval_radius,
    sample_split_density_aware,
)
from .tree import (
    AlgorithmKind,
    CutLaw,
    SplitSampler,
    Tree,
    TreeNode,
    build_isolation_tree,
    build_rrct,
    build_tree,
    choose_dimension,
    depth,
    height,
    split_members,
    tree_to_debug_json,
)
from .score import (
    ScoreReport,
    anomaly_score,
    average_path_length,
    codisp,
    codisp_all_points,
    codisp_displacement_oracle,
    model_complexity,
)
from .ensemble import BaggingConfig, Forest, avg_anomaly_score, avg_codisp, bagged_forest
from .stream import delete_point, insert_point, shingle, stream_codisp
from .bench import LabeledDataset, auc, detected_anomaly_count, gen_sine_anomaly, minmax_normalize

__all__ = [
    "AlgorithmKind",
    "BaggingConfig",
    "BoundingBox",
    "CutLaw",
    "Dataset",
    "DensityParams",
    "Forest",
    "LabeledDataset",
    "ScoreReport",
    "SplitSampler",
    "Tree",
    "TreeNode",
    "anomaly_score",
    "auc",
    "avg_anomaly_score",
    "avg_codisp",
    "average_path_length",
    "bad_split_measure",
    "bagged_forest",
    "bounding_box",
    "build_isolation_tree",
    "build_rrct",
    "build_tree",
    "choose_dimension",
    "codisp",
    "codisp_all_points",
    "codisp_displacement_oracle",
    "delete_point",
    "density_measure",
    "density_measure_1d",
    "depth",
    "detected_anomaly_count",
    "gen_sine_anomaly",
    "height",
    "insert_point",
    "interval_count",
    "interval_radius",
    "minmax_normalize",
    "model_complexity",
    "project",
    "sample_split_density_aware",
    "shingle",
    "split_members",
    "stream_codisp",
    "total_edge_length",
    "tree_to_debug_json",
]
