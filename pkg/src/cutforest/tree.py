"""Binary partition trees with pluggable axis law and split-value sampler.

One engine grows both tree families:

  - isolation trees: axis uniform over all dimensions; a node becomes a leaf
    when it is a singleton or when the sampled axis is degenerate (its min
    equals its max), even if another axis could still split;
  - random cut trees: axis drawn proportional to bounding-box side length
    (degenerate axes have probability zero) and grown until every leaf is a
    singleton or an exact-duplicate multiset.

Split values come either from the ordinary uniform law on [min, max] or from
the density-aware sampler in :mod:`cutforest.density`. Nodes store member ids
into the backing point array, so duplicates stay distinguishable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dataset import BoundingBox, Dataset
from .density import DensityParams, _sample_from_sorted

__all__ = [
    "CutLaw",
    "SplitSampler",
    "AlgorithmKind",
    "TreeNode",
    "Tree",
    "BuildStats",
    "choose_dimension",
    "split_members",
    "build_isolation_tree",
    "build_rrct",
    "build_tree",
    "depth",
    "height",
    "tree_to_debug_json",
]

# nodes at or below this size are grown with plain Python lists; above it,
# partitions run on numpy views (the crossover favors ensembles of small trees)
_SMALL_BUILD = 128

# a sampled split that leaves one side empty is redrawn this many times on the
# same axis before the axis itself is redrawn
_EMPTY_SIDE_RETRIES = 64


class CutLaw(enum.Enum):
    """How the cut axis is drawn at an internal node."""

    UNIFORM = "uniform"
    LENGTH_PROPORTIONAL = "length-proportional"


@dataclass(frozen=True)
class SplitSampler:
    """Split-value law: ordinary uniform, or density-aware when params are set."""

    density: DensityParams | None = None

    @property
    def density_aware(self) -> bool:
        return self.density is not None


class AlgorithmKind(enum.Enum):
    """The four detector variants as (axis law, split sampler) pairs."""

    IF = "if"
    WIF = "wif"
    RRCF = "rrcf"
    WRCF = "wrcf"

    @property
    def cut_law(self) -> CutLaw:
        if self in (AlgorithmKind.IF, AlgorithmKind.WIF):
            return CutLaw.UNIFORM
        return CutLaw.LENGTH_PROPORTIONAL

    @property
    def density_aware(self) -> bool:
        return self in (AlgorithmKind.WIF, AlgorithmKind.WRCF)

    @property
    def codisp_family(self) -> bool:
        """True for the fully grown random-cut variants scored by displacement."""
        return self in (AlgorithmKind.RRCF, AlgorithmKind.WRCF)

    def sampler(self, alpha: int = 2, max_retries: int = 64) -> SplitSampler:
        if self.density_aware:
            return SplitSampler(DensityParams(alpha=alpha, max_retries=max_retries))
        return SplitSampler(None)


class BuildStats:
    """Counters accumulated while growing one or more trees."""

    __slots__ = ("splits", "density_retries", "density_fallbacks", "empty_side_retries")

    def __init__(self) -> None:
        self.splits = 0
        self.density_retries = 0
        self.density_fallbacks = 0
        self.empty_side_retries = 0

    @property
    def mean_retries_per_split(self) -> float:
        return self.density_retries / self.splits if self.splits else 0.0


class TreeNode:
    """One node of a partition tree.

    ``members`` holds ids into the tree's backing points (a tuple for small
    subtrees, an int array for large ones). Internal nodes carry the cut
    ``(axis, split)`` with the left child holding x[axis] < split and the
    right child x[axis] >= split.
    """

    __slots__ = ("members", "axis", "split", "left", "right", "parent")

    def __init__(self, members, axis=None, split=None, left=None, right=None, parent=None):
        self.members = members
        self.axis = axis
        self.split = split
        self.left = left
        self.right = right
        self.parent = parent

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def size(self) -> int:
        return len(self.members)

    def sibling(self) -> "TreeNode | None":
        p = self.parent
        if p is None:
            return None
        return p.right if p.left is self else p.left

    def __repr__(self) -> str:
        kind = "leaf" if self.is_leaf else f"cut(q={self.axis}, p={self.split})"
        return f"TreeNode({kind}, size={self.size})"


class Tree:
    """A partition tree over a sample of points.

    The backing coordinates live in ``base`` (rows indexed by member id) plus
    an overlay dict for points added after construction by streaming inserts.
    """

    __slots__ = ("root", "kind", "seed", "base", "extra", "leaf_map", "stats")

    def __init__(self, root: TreeNode, kind: AlgorithmKind, seed, base: np.ndarray,
                 extra: dict | None = None, stats: BuildStats | None = None):
        self.root = root
        self.kind = kind
        self.seed = seed
        self.base = base
        self.extra = {} if extra is None else extra
        self.stats = stats if stats is not None else BuildStats()
        leaf_map: dict[int, TreeNode] = {}
        stack = [root]
        while stack:
            node = stack.pop()
            if node.left is None:
                for pid in node.members:
                    leaf_map[int(pid)] = node
            else:
                stack.append(node.right)
                stack.append(node.left)
        self.leaf_map = leaf_map

    # -- point access -------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.base.shape[1]

    @property
    def n(self) -> int:
        return len(self.root.members)

    def point(self, pid: int) -> tuple:
        if pid in self.extra:
            return self.extra[pid]
        return tuple(self.base[pid])

    def sample_ids(self):
        return self.root.members

    def __contains__(self, pid: int) -> bool:
        return int(pid) in self.leaf_map

    def leaf_of(self, pid: int) -> TreeNode:
        try:
            return self.leaf_map[int(pid)]
        except KeyError:
            raise ValueError(f"point id {pid} is not in this tree") from None

    # -- traversal ----------------------------------------------------------

    def nodes(self):
        """Preorder traversal of every node."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.append(node.right)
                stack.append(node.left)

    def leaves(self):
        for node in self.nodes():
            if node.is_leaf:
                yield node

    def height(self) -> int:
        return height(self)


def depth(node: TreeNode) -> int:
    """Number of edges from the node up to the root."""
    d = 0
    while node.parent is not None:
        node = node.parent
        d += 1
    return d


def height(tree: Tree) -> int:
    """Maximum node depth in the tree."""
    best = 0
    stack = [(tree.root, 0)]
    while stack:
        node, d = stack.pop()
        if d > best:
            best = d
        if not node.is_leaf:
            stack.append((node.left, d + 1))
            stack.append((node.right, d + 1))
    return best


# -- axis selection ----------------------------------------------------------


def _draw_axis_uniform(rng, d: int) -> int:
    if d == 1:
        return 0
    q = int(rng.random() * d)
    return d - 1 if q >= d else q


def _draw_axis_lengths(rng, lengths) -> int:
    positive = [q for q, l in enumerate(lengths) if l > 0.0]
    if not positive:
        raise ValueError("every axis is degenerate; no cut dimension exists")
    if len(positive) == 1:
        return positive[0]
    total = 0.0
    for q in positive:
        total += lengths[q]
    u = rng.random() * total
    acc = 0.0
    for q in positive:
        acc += lengths[q]
        if u < acc:
            return q
    return positive[-1]


def choose_dimension(box: BoundingBox, law: CutLaw, rng) -> int:
    """Draw a cut axis from the box under the given law (0-based).

    The length-proportional law never returns a degenerate axis and raises
    if every axis is degenerate.
    """
    if law is CutLaw.UNIFORM:
        return _draw_axis_uniform(rng, box.dim)
    return _draw_axis_lengths(rng, box.lengths)


def split_members(points: np.ndarray, ids, axis: int, value: float):
    """Partition member ids by the cut: (x[axis] < value, x[axis] >= value)."""
    ids = np.asarray(ids)
    col = points[ids, axis]
    mask = col < value
    return ids[mask], ids[~mask]


# -- growth engine -----------------------------------------------------------


class _GrowState:
    __slots__ = ("points", "law", "sampler", "rng", "isolation", "stats")

    def __init__(self, points, law, sampler, rng, isolation, stats):
        self.points = points
        self.law = law
        self.sampler = sampler
        self.rng = rng
        self.isolation = isolation
        self.stats = stats


def _split_small(state: _GrowState, rows, loc):
    """Pick (axis, split, left_loc, right_loc) for a small node, or None for a leaf."""
    rng = state.rng
    stats = state.stats
    d = len(rows[0])
    density = state.sampler.density
    if state.law is CutLaw.LENGTH_PROPORTIONAL:
        first = rows[loc[0]]
        mins = list(first)
        maxs = list(first)
        for i in loc[1:]:
            row = rows[i]
            for q in range(d):
                v = row[q]
                if v < mins[q]:
                    mins[q] = v
                elif v > maxs[q]:
                    maxs[q] = v
        lengths = [maxs[q] - mins[q] for q in range(d)]
        if not any(l > 0.0 for l in lengths):
            return None  # exact-duplicate multiset: nothing left to cut
    while True:
        if state.law is CutLaw.UNIFORM:
            q = _draw_axis_uniform(rng, d)
            lo = hi = rows[loc[0]][q]
            for i in loc[1:]:
                v = rows[i][q]
                if v < lo:
                    lo = v
                elif v > hi:
                    hi = v
            if lo == hi:
                # sampled a degenerate axis: the node becomes a leaf as-is
                return None
        else:
            q = _draw_axis_lengths(rng, lengths)
            lo = mins[q]
            hi = maxs[q]
        svals = sorted(rows[i][q] for i in loc) if density is not None else None
        width = hi - lo
        for attempt in range(_EMPTY_SIDE_RETRIES):
            # at sub-resolution ranges (values a few ulps apart) interval counting
            # breaks down and density-aware draws can reject every splittable
            # value; after repeated one-sided splits degrade to the plain law
            if density is not None and attempt < _EMPTY_SIDE_RETRIES // 2:
                p, retries = _sample_from_sorted(svals, lo, hi, density, rng)
                stats.density_retries += retries
                if retries >= density.max_retries:
                    stats.density_fallbacks += 1
            else:
                p = lo + rng.random() * width
            left = []
            right = []
            for i in loc:
                if rows[i][q] < p:
                    left.append(i)
                else:
                    right.append(i)
            if left and right:
                stats.splits += 1
                return q, p, left, right
            stats.empty_side_retries += 1
        # the axis keeps producing one-sided splits; draw a fresh axis


def _split_big(state: _GrowState, ids):
    """Numpy twin of _split_small for large nodes."""
    rng = state.rng
    stats = state.stats
    points = state.points
    d = points.shape[1]
    density = state.sampler.density
    if state.law is CutLaw.LENGTH_PROPORTIONAL:
        sub = points[ids]
        mins = sub.min(axis=0)
        maxs = sub.max(axis=0)
        lengths = maxs - mins
        if not (lengths > 0.0).any():
            return None
    while True:
        if state.law is CutLaw.UNIFORM:
            q = _draw_axis_uniform(rng, d)
            col = points[ids, q]
            lo = float(col.min())
            hi = float(col.max())
            if lo == hi:
                return None
        else:
            q = _draw_axis_lengths(rng, lengths)
            col = points[ids, q]
            lo = float(mins[q])
            hi = float(maxs[q])
        svals = np.sort(col) if density is not None else None
        width = hi - lo
        for attempt in range(_EMPTY_SIDE_RETRIES):
            # degrade to the plain law once density-aware draws keep producing
            # one-sided splits (sub-resolution ranges; see _split_small)
            if density is not None and attempt < _EMPTY_SIDE_RETRIES // 2:
                p, retries = _sample_from_sorted(svals, lo, hi, density, rng)
                stats.density_retries += retries
                if retries >= density.max_retries:
                    stats.density_fallbacks += 1
            else:
                p = lo + rng.random() * width
            mask = col < p
            n_left = int(mask.sum())
            if 0 < n_left < len(ids):
                stats.splits += 1
                return q, p, ids[mask], ids[~mask]
            stats.empty_side_retries += 1


def _grow_small(state: _GrowState, root: TreeNode, rows, loc, gids):
    stack = [(root, loc)]
    while stack:
        node, nloc = stack.pop()
        if len(nloc) == 1:
            continue
        res = _split_small(state, rows, nloc)
        if res is None:
            continue
        q, p, lloc, rloc = res
        node.axis = q
        node.split = float(p)
        node.left = TreeNode(tuple(gids[i] for i in lloc), parent=node)
        node.right = TreeNode(tuple(gids[i] for i in rloc), parent=node)
        stack.append((node.right, rloc))
        stack.append((node.left, lloc))


def _grow(state: _GrowState, ids) -> TreeNode:
    ids = np.asarray(ids, dtype=np.intp)
    if len(ids) <= _SMALL_BUILD:
        gids = [int(i) for i in ids]
        root = TreeNode(tuple(gids))
        if len(gids) > 1:
            rows = state.points[ids].tolist()
            _grow_small(state, root, rows, list(range(len(gids))), gids)
        return root
    root = TreeNode(ids)
    stack = [(root, ids)]
    while stack:
        node, nids = stack.pop()
        if len(nids) <= _SMALL_BUILD:
            gids = [int(i) for i in nids]
            node.members = tuple(gids)
            rows = state.points[nids].tolist()
            _grow_small(state, node, rows, list(range(len(gids))), gids)
            continue
        res = _split_big(state, nids)
        if res is None:
            continue
        q, p, lids, rids = res
        node.axis = int(q)
        node.split = float(p)
        node.left = TreeNode(lids, parent=node)
        node.right = TreeNode(rids, parent=node)
        stack.append((node.right, rids))
        stack.append((node.left, lids))
    return root


def _as_points(points) -> np.ndarray:
    if isinstance(points, Dataset):
        return points.points
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    return arr


def build_isolation_tree(points, sampler: SplitSampler, rng, ids=None,
                         kind: AlgorithmKind | None = None, seed=None,
                         stats: BuildStats | None = None) -> Tree:
    """Grow an isolation tree over ``points`` (optionally a subset via ``ids``).

    Axis uniform over all dimensions; leaves are singletons or nodes whose
    sampled axis was degenerate.
    """
    pts = _as_points(points)
    if ids is None:
        ids = np.arange(len(pts), dtype=np.intp)
    if kind is None:
        kind = AlgorithmKind.WIF if sampler.density_aware else AlgorithmKind.IF
    stats = stats if stats is not None else BuildStats()
    state = _GrowState(pts, CutLaw.UNIFORM, sampler, rng, True, stats)
    root = _grow(state, ids)
    return Tree(root, kind, seed, pts, stats=stats)


def build_rrct(points, sampler: SplitSampler, rng, ids=None,
               kind: AlgorithmKind | None = None, seed=None,
               stats: BuildStats | None = None) -> Tree:
    """Grow a fully grown random cut tree over ``points``.

    Axis proportional to bounding-box side length; every leaf is a singleton
    or an exact-duplicate multiset.
    """
    pts = _as_points(points)
    if ids is None:
        ids = np.arange(len(pts), dtype=np.intp)
    if kind is None:
        kind = AlgorithmKind.WRCF if sampler.density_aware else AlgorithmKind.RRCF
    stats = stats if stats is not None else BuildStats()
    state = _GrowState(pts, CutLaw.LENGTH_PROPORTIONAL, sampler, rng, False, stats)
    root = _grow(state, ids)
    return Tree(root, kind, seed, pts, stats=stats)


def build_tree(points, kind: AlgorithmKind, *, seed=None, rng=None,
               alpha: int = 2, max_retries: int = 64, ids=None,
               stats: BuildStats | None = None) -> Tree:
    """Build one tree of the requested kind from a seed or an explicit RNG."""
    if rng is None:
        rng = np.random.default_rng(seed)
    sampler = kind.sampler(alpha=alpha, max_retries=max_retries)
    if kind.codisp_family:
        return build_rrct(points, sampler, rng, ids=ids, kind=kind, seed=seed, stats=stats)
    return build_isolation_tree(points, sampler, rng, ids=ids, kind=kind, seed=seed, stats=stats)


def tree_to_debug_json(tree: Tree) -> dict:
    """Stable JSON-ready view of the tree for inspection and golden tests.

    Nodes are numbered in preorder; members are sorted id lists.
    """
    nodes = []
    index = {}
    for i, node in enumerate(tree.nodes()):
        index[id(node)] = i
    for i, node in enumerate(tree.nodes()):
        nodes.append(
            {
                "id": i,
                "members": sorted(int(m) for m in node.members),
                "axis": None if node.axis is None else int(node.axis),
                "split": None if node.split is None else float(node.split),
                "left": None if node.is_leaf else index[id(node.left)],
                "right": None if node.is_leaf else index[id(node.right)],
            }
        )
    return {
        "kind": tree.kind.value,
        "seed": tree.seed,
        "n": tree.n,
        "nodes": nodes,
    }
