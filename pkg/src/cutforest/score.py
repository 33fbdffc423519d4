"""Anomaly scoring: isolation depth scores and collusive displacement.

The isolation-family score for a point x over a forest is
``2 ** (-mean_leaf_depth / c(n))`` where ``c(n)`` is the expected isolation
tree height; scores near 1 flag anomalies, scores below 0.5 normal points.

The random-cut-family score is the collusive displacement: the largest
sibling-to-node size ratio along the chain from the point's leaf up to (but
excluding) the root. ``codisp_displacement_oracle`` recomputes it from the
subtree-deletion definition and is kept as an independent cross-check.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

from .tree import Tree, TreeNode, depth

__all__ = [
    "EULER_GAMMA",
    "average_path_length",
    "anomaly_score",
    "model_complexity",
    "codisp",
    "codisp_all_points",
    "displacement_sum",
    "codisp_displacement_oracle",
    "ScoreReport",
]

EULER_GAMMA = 0.5772156649


def average_path_length(n: int) -> float:
    """Expected isolation-tree height c(n) = 2(ln(n-1) + gamma) - 2(n-1)/n for n >= 2."""
    if n < 2:
        raise ValueError(f"average path length needs n >= 2, got {n}")
    return 2.0 * (math.log(n - 1) + EULER_GAMMA) - 2.0 * (n - 1) / n


def anomaly_score(point_id: int, trees, sample_size: int | None = None) -> float:
    """Isolation score of a point over the trees that contain it.

    The depth used is that of the external node holding the point, with no
    adjustment for multi-point leaves. ``sample_size`` defaults to the sample
    size of the trees (which must then agree).
    """
    total = 0
    count = 0
    n = sample_size
    for tree in trees:
        if point_id not in tree:
            continue
        if n is None:
            n = tree.n
        total += depth(tree.leaf_of(point_id))
        count += 1
    if count == 0:
        raise ValueError(f"point id {point_id} appears in no tree")
    mean_depth = total / count
    return 2.0 ** (-mean_depth / average_path_length(n))


def model_complexity(tree: Tree) -> int:
    """Sum of node depths over the whole tree."""
    total = 0
    stack = [(tree.root, 0)]
    while stack:
        node, d = stack.pop()
        total += d
        if not node.is_leaf:
            stack.append((node.left, d + 1))
            stack.append((node.right, d + 1))
    return total


def codisp(point_id: int, tree: Tree) -> float:
    """Collusive displacement: max of |sibling| / |node| along the point's chain.

    The chain runs from the point's leaf up to, and excluding, the root. For a
    single-node tree there is no proper subset containing the point and the
    score is 0 by convention.
    """
    node = tree.leaf_of(point_id)
    best = 0.0
    found = False
    while node.parent is not None:
        ratio = len(node.sibling().members) / len(node.members)
        if not found or ratio > best:
            best = ratio
            found = True
        node = node.parent
    return best


def codisp_all_points(tree: Tree) -> dict[int, float]:
    """Collusive displacement of every sampled point in one traversal."""
    out: dict[int, float] = {}
    neg_inf = float("-inf")
    stack = [(tree.root, neg_inf)]
    while stack:
        node, best = stack.pop()
        parent = node.parent
        if parent is not None:
            sib = parent.right if parent.left is node else parent.left
            ratio = len(sib.members) / len(node.members)
            if ratio > best:
                best = ratio
        if node.is_leaf:
            val = best if best != neg_inf else 0.0
            for pid in node.members:
                out[int(pid)] = val
        else:
            stack.append((node.left, best))
            stack.append((node.right, best))
    return out


def _clone_subtree(node: TreeNode, parent=None):
    """Deep structural copy; returns the clone and an id(original) -> clone map."""
    mapping = {}
    clone = TreeNode(node.members, node.axis, node.split, parent=parent)
    mapping[id(node)] = clone
    if not node.is_leaf:
        left, ml = _clone_subtree(node.left, clone)
        right, mr = _clone_subtree(node.right, clone)
        clone.left = left
        clone.right = right
        mapping.update(ml)
        mapping.update(mr)
    return clone, mapping


def displacement_sum(tree: Tree, node: TreeNode) -> int:
    """Total depth drop of the surviving points when the node's subtree is deleted.

    Builds the deleted tree explicitly (remove the subtree, splice the sibling
    into the parent's place) and compares leaf depths, following the original
    displacement definition rather than the sibling-size shortcut.
    """
    if node.parent is None:
        raise ValueError("displacement is defined for proper subsets only")
    removed = {int(m) for m in node.members}
    root2, mapping = _clone_subtree(tree.root)
    target = mapping[id(node)]
    parent = target.parent
    sib = parent.right if parent.left is target else parent.left
    grand = parent.parent
    if grand is None:
        root2 = sib
        sib.parent = None
    else:
        if grand.left is parent:
            grand.left = sib
        else:
            grand.right = sib
        sib.parent = grand
    total = 0
    stack = [(root2, 0)]
    while stack:
        cur, d = stack.pop()
        if cur.is_leaf:
            for pid in cur.members:
                pid = int(pid)
                if pid not in removed:
                    total += depth(tree.leaf_of(pid)) - d
        else:
            stack.append((cur.left, d + 1))
            stack.append((cur.right, d + 1))
    return total


def codisp_displacement_oracle(point_id: int, tree: Tree) -> float:
    """Collusive displacement computed from the subtree-deletion definition.

    Slow; used to cross-check :func:`codisp`, which it must equal exactly.
    """
    node = tree.leaf_of(point_id)
    best = None
    while node.parent is not None:
        value = displacement_sum(tree, node) / len(node.members)
        if best is None or value > best:
            best = value
        node = node.parent
    return 0.0 if best is None else best


@dataclass
class ScoreReport:
    """Per-point scores with the run metadata needed to reproduce them.

    ``scores[i]`` is None when point ``point_ids[i]`` was never sampled into
    any tree (an explicit null, not zero).
    """

    point_ids: list[int]
    scores: list[float | None]
    algorithm: str
    seed: int | None
    n_trees: int
    params: dict = field(default_factory=dict)

    def metadata(self) -> dict:
        from . import __version__

        meta = {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "trees": self.n_trees,
            "version": __version__,
        }
        meta.update(self.params)
        return meta

    def to_csv(self, fp) -> None:
        """Write ``point_id,score`` rows preceded by ``# key=value`` metadata lines."""
        for key in sorted(self.metadata()):
            fp.write(f"# {key}={self.metadata()[key]}\n")
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(["point_id", "score"])
        for pid, s in zip(self.point_ids, self.scores):
            writer.writerow([pid, "" if s is None else repr(float(s))])

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()

    def to_json(self, fp) -> None:
        json.dump(
            {
                "metadata": self.metadata(),
                "scores": [
                    {"point_id": pid, "score": s}
                    for pid, s in zip(self.point_ids, self.scores)
                ],
            },
            fp,
            indent=2,
            sort_keys=True,
        )
        fp.write("\n")

    def to_json_string(self) -> str:
        buf = io.StringIO()
        self.to_json(buf)
        return buf.getvalue()
