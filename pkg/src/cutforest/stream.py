"""Streaming trees: point deletion/insertion, shingling, sliding-window scoring.

Deleting a point removes its leaf and splices the sibling subtree into the
parent's place; inserting draws a position uniformly along the edges of the
box enlarged by the new point, which either creates a fresh cut separating
the point (when the position falls outside the current box on the decoded
axis) or reuses the node's existing cut and recurses into the side holding
the point. Insertion therefore adds exactly one internal node above some
subtree, and deleting the same point afterwards restores the original tree.

``stream_codisp`` maintains a forest of such trees over a sliding window of
shingles and averages each shingle's collusive displacement over every
window that covers it. The window forest is array-backed so per-window
scoring vectorizes; its trees are flattened from, and its mutations mirror,
the object-tree operations above (the test suite pins the two together).
"""

from __future__ import annotations

import numpy as np

from .tree import AlgorithmKind, Tree, TreeNode, build_tree

__all__ = [
    "shingle",
    "insert_point",
    "delete_point",
    "stream_codisp",
    "stream_codisp_iter",
]

_INSERT_REDRAWS = 64


def shingle(series, h: int) -> np.ndarray:
    """Embed a scalar series into R^h with a sliding window of length h.

    Returns an (n - h + 1, h) array whose row t is (x_t, ..., x_{t+h-1}).
    """
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    if not 1 <= h <= n:
        raise ValueError(f"shingle size must be in 1..{n}, got {h}")
    return np.lib.stride_tricks.sliding_window_view(x, h).copy()


# -- insert-cut planning (shared by the object ops and the window forest) ----


def _plan_cut(lo, hi, y, rng, at_leaf: bool):
    """Decide how a new point enters a node with member box [lo, hi] per axis.

    Returns ("merge",) when the box enlarged by y is degenerate (y duplicates
    a pure-duplicate node), ("inside",) when y lies inside the box on every
    axis (the decoded position would land inside the box with certainty, so
    no draw is consumed and the node's own cut is reused), ("descend",) when
    an actual draw lands inside the current box, or
    ("cut", axis, split, y_left) for a new cut separating y from the node.

    Draws that land exactly on a boundary that would leave one side empty are
    redrawn; after that a deterministic midpoint cut on the most-extended
    axis is used so the call always terminates.
    """
    d = len(y)
    elo = [0.0] * d
    lens = [0.0] * d
    total = 0.0
    inside = True
    for q in range(d):
        lq = lo[q]
        hq = hi[q]
        yq = y[q]
        if yq < lq:
            a, b = yq, hq
            inside = False
        elif yq > hq:
            a, b = lq, yq
            inside = False
        else:
            a, b = lq, hq
        elo[q] = a
        l = b - a
        lens[q] = l
        total += l
    if total == 0.0:
        return ("merge",)
    if inside:
        # y extends no axis: every decode lands in the old box (a leaf's box
        # is a point, so an internal node is guaranteed here)
        return ("inside",)
    for _ in range(_INSERT_REDRAWS):
        r = rng.random() * total
        acc = 0.0
        axis = -1
        for q in range(d):
            l = lens[q]
            if l > 0.0:
                acc += l
                if r < acc:
                    axis = q
                    break
        if axis < 0:
            continue  # r hit the very top of the span; measure zero
        c = elo[axis] + (r - (acc - lens[axis]))
        if c < lo[axis]:
            if c > y[axis]:
                return ("cut", axis, c, True)
            # c == y[axis]: nothing would fall left of the cut
        elif c > hi[axis]:
            return ("cut", axis, c, False)
        elif not at_leaf:
            return ("descend",)
        # at a leaf the position can only land inside the (degenerate) box
        # on an exact boundary hit; redraw
    best_q, best_gap = -1, 0.0
    for q in range(d):
        gap = lo[q] - y[q] if y[q] < lo[q] else y[q] - hi[q]
        if gap > best_gap:
            best_q, best_gap = q, gap
    if y[best_q] < lo[best_q]:
        return ("cut", best_q, 0.5 * (y[best_q] + lo[best_q]), True)
    return ("cut", best_q, 0.5 * (hi[best_q] + y[best_q]), False)


def _member_box(tree: Tree, node: TreeNode):
    members = node.members
    first = tree.point(int(members[0]))
    lo = list(first)
    hi = list(first)
    for m in members[1:]:
        p = tree.point(int(m))
        for q in range(len(lo)):
            v = p[q]
            if v < lo[q]:
                lo[q] = v
            elif v > hi[q]:
                hi[q] = v
    return lo, hi


def _remove_member(node: TreeNode, pid: int) -> None:
    node.members = tuple(int(m) for m in node.members if int(m) != pid)


def _append_member(node: TreeNode, pid: int) -> None:
    node.members = (*(int(m) for m in node.members), pid)


def insert_point(tree: Tree, y, rng, point_id: int | None = None) -> Tree:
    """Insert a point into the tree in place; returns the tree.

    The new point gets ``point_id`` (or the next unused id). An exact
    duplicate of a pure-duplicate leaf merges into that leaf; otherwise the
    point ends up as a fresh singleton leaf under exactly one new internal
    node, with every preexisting cut left untouched.
    """
    y = tuple(float(v) for v in np.asarray(y, dtype=float).ravel())
    if len(y) != tree.dim:
        raise ValueError(f"point has dimension {len(y)}, tree expects {tree.dim}")
    if point_id is None:
        used = set(tree.leaf_map) | set(tree.extra)
        point_id = max(used, default=-1) + 1
    pid = int(point_id)
    if pid in tree.leaf_map:
        raise ValueError(f"point id {pid} is already in the tree")
    tree.extra[pid] = y
    node = tree.root
    while True:
        lo, hi = _member_box(tree, node)
        plan = _plan_cut(lo, hi, y, rng, node.is_leaf)
        tag = plan[0]
        if tag == "merge":
            _append_member(node, pid)
            tree.leaf_map[pid] = node
            return tree
        if tag == "descend" or tag == "inside":
            _append_member(node, pid)
            node = node.left if y[node.axis] < node.split else node.right
            continue
        _, axis, split, y_left = plan
        leaf = TreeNode((pid,))
        inner = TreeNode((*(int(m) for m in node.members), pid), axis=axis, split=split)
        if y_left:
            inner.left, inner.right = leaf, node
        else:
            inner.left, inner.right = node, leaf
        inner.parent = node.parent
        if node.parent is None:
            tree.root = inner
        elif node.parent.left is node:
            node.parent.left = inner
        else:
            node.parent.right = inner
        node.parent = inner
        leaf.parent = inner
        tree.leaf_map[pid] = leaf
        return tree


def _resolve_point_id(tree: Tree, target) -> int:
    if isinstance(target, (int, np.integer)):
        return int(target)
    t = tuple(float(v) for v in np.asarray(target, dtype=float).ravel())
    for pid in sorted(tree.leaf_map):
        if tree.point(pid) == t:
            return pid
    raise ValueError("no point with those coordinates is in the tree")


def delete_point(tree: Tree, target) -> Tree:
    """Delete a point (by id, or by coordinates removing one multiplicity).

    A multi-member duplicate leaf just loses one member; a singleton leaf is
    removed together with its parent, whose place the sibling subtree takes.
    """
    pid = _resolve_point_id(tree, target)
    if pid not in tree.leaf_map:
        raise ValueError(f"point id {pid} is not in the tree")
    leaf = tree.leaf_map[pid]
    if len(leaf.members) > 1:
        node = leaf
        while node is not None:
            _remove_member(node, pid)
            node = node.parent
    else:
        parent = leaf.parent
        if parent is None:
            raise ValueError("cannot delete the only point of a tree")
        sib = parent.right if parent.left is leaf else parent.left
        grand = parent.parent
        sib.parent = grand
        if grand is None:
            tree.root = sib
        elif grand.left is parent:
            grand.left = sib
        else:
            grand.right = sib
        node = grand
        while node is not None:
            _remove_member(node, pid)
            node = node.parent
    del tree.leaf_map[pid]
    tree.extra.pop(pid, None)
    return tree


# -- array-backed sliding-window forest ---------------------------------------


class _WindowForest:
    """r mutable trees over one window, flattened into shared slot arrays.

    Topology (parent, left, right, size) lives in persistent numpy arrays
    mutated in place, with slot 0 reserved as the null sentinel, so the
    per-window scoring pass works on views with no conversion: it resolves
    every leaf's sibling-ratio chain maximum by pointer doubling. Boxes and
    sizes are maintained incrementally and equal what a fresh scan of the
    members would give, so cut planning here consumes the RNG exactly like
    :func:`insert_point` does.
    """

    def __init__(self, shingles: np.ndarray, w: int, r: int, kind: AlgorithmKind,
                 alpha: int, max_retries: int, rng):
        self.pts = [tuple(row) for row in shingles.tolist()]
        self.d = shingles.shape[1]
        self.r = r
        self.rng = rng
        cap = 4 * w * r + 16
        self.parent = np.zeros(cap, dtype=np.int32)
        self.left = np.zeros(cap, dtype=np.int32)
        self.right = np.zeros(cap, dtype=np.int32)
        self.size = np.zeros(cap, dtype=np.int32)
        self._idx = np.arange(cap, dtype=np.int32)
        self.size[0] = 1  # sentinel slot; never a real node
        self.used = 1
        self.axis: list[int] = [0]
        self.split: list[float] = [0.0]
        self.blo: list[list[float] | None] = [None]
        self.bhi: list[list[float] | None] = [None]
        self.leafids: list[list[int] | None] = [None]
        self.free: list[int] = []
        self.roots: list[int] = []
        self.leaf_slot = np.full((r, len(self.pts)), -1, dtype=np.int64)
        ids = np.arange(w)
        for t in range(r):
            tree = build_tree(shingles, kind, rng=rng, alpha=alpha,
                              max_retries=max_retries, ids=ids)
            self.roots.append(self._flatten(t, tree.root))

    def _alloc(self) -> int:
        if self.free:
            return self.free.pop()
        if self.used == len(self.parent):
            grow = len(self.parent)
            for name in ("parent", "left", "right", "size"):
                arr = getattr(self, name)
                setattr(self, name, np.concatenate([arr, np.zeros(grow, dtype=arr.dtype)]))
            self._idx = np.arange(2 * grow, dtype=np.int32)
        v = self.used
        self.used += 1
        self.axis.append(0)
        self.split.append(0.0)
        self.blo.append(None)
        self.bhi.append(None)
        self.leafids.append(None)
        return v

    def _release(self, v: int) -> None:
        self.parent[v] = 0
        self.left[v] = 0
        self.right[v] = 0
        self.size[v] = 0
        self.leafids[v] = None
        self.free.append(v)

    def _flatten(self, tree_idx: int, node: TreeNode, parent: int = 0) -> int:
        v = self._alloc()
        self.parent[v] = parent
        self.size[v] = len(node.members)
        if node.is_leaf:
            ids = [int(m) for m in node.members]
            self.leafids[v] = ids
            first = self.pts[ids[0]]
            blo = list(first)
            bhi = list(first)
            for j in ids[1:]:
                p = self.pts[j]
                for q in range(self.d):
                    if p[q] < blo[q]:
                        blo[q] = p[q]
                    elif p[q] > bhi[q]:
                        bhi[q] = p[q]
            self.blo[v] = blo
            self.bhi[v] = bhi
            for j in ids:
                self.leaf_slot[tree_idx, j] = v
        else:
            self.axis[v] = int(node.axis)
            self.split[v] = float(node.split)
            lv = self._flatten(tree_idx, node.left, v)
            rv = self._flatten(tree_idx, node.right, v)
            self.left[v] = lv
            self.right[v] = rv
            self.blo[v] = [min(a, b) for a, b in zip(self.blo[lv], self.blo[rv])]
            self.bhi[v] = [max(a, b) for a, b in zip(self.bhi[lv], self.bhi[rv])]
        return v

    def delete(self, tree_idx: int, j: int) -> None:
        v = int(self.leaf_slot[tree_idx, j])
        if v < 0:
            raise ValueError(f"shingle {j} is not in tree {tree_idx}")
        self.leaf_slot[tree_idx, j] = -1
        ids = self.leafids[v]
        parent = self.parent
        size = self.size
        if len(ids) > 1:
            ids.remove(j)
            u = v
            while u != 0:
                size[u] -= 1
                u = parent[u]
            return
        p = int(parent[v])
        if p == 0:
            raise ValueError("cannot delete the only point of a tree")
        sib = int(self.right[p]) if self.left[p] == v else int(self.left[p])
        g = int(parent[p])
        parent[sib] = g
        if g == 0:
            self.roots[tree_idx] = sib
        elif self.left[g] == p:
            self.left[g] = sib
        else:
            self.right[g] = sib
        self._release(v)
        self._release(p)
        d = self.d
        blo = self.blo
        bhi = self.bhi
        u = g
        boxes_settled = False
        while u != 0:
            size[u] -= 1
            if not boxes_settled:
                l, r = int(self.left[u]), int(self.right[u])
                llo, rlo, ulo = blo[l], blo[r], blo[u]
                lhi, rhi, uhi = bhi[l], bhi[r], bhi[u]
                changed = False
                for q in range(d):
                    a = llo[q] if llo[q] < rlo[q] else rlo[q]
                    b = lhi[q] if lhi[q] > rhi[q] else rhi[q]
                    if a != ulo[q]:
                        ulo[q] = a
                        changed = True
                    if b != uhi[q]:
                        uhi[q] = b
                        changed = True
                # once a box is unchanged every ancestor box is too
                boxes_settled = not changed
            u = int(parent[u])

    def insert(self, tree_idx: int, j: int) -> None:
        y = self.pts[j]
        d = self.d
        rng = self.rng
        left = self.left
        right = self.right
        size = self.size
        blo_all = self.blo
        bhi_all = self.bhi
        v = self.roots[tree_idx]
        while True:
            blo = blo_all[v]
            bhi = bhi_all[v]
            is_leaf = left[v] == 0
            plan = _plan_cut(blo, bhi, y, rng, is_leaf)
            tag = plan[0]
            if tag == "inside":
                size[v] += 1
                v = int(left[v]) if y[self.axis[v]] < self.split[v] else int(right[v])
                continue
            if tag == "descend":
                size[v] += 1
                for q in range(d):
                    yq = y[q]
                    if yq < blo[q]:
                        blo[q] = yq
                    elif yq > bhi[q]:
                        bhi[q] = yq
                v = int(left[v]) if y[self.axis[v]] < self.split[v] else int(right[v])
                continue
            if tag == "merge":
                self.leafids[v].append(j)
                size[v] += 1
                self.leaf_slot[tree_idx, j] = v
                return
            _, axis, split, y_left = plan
            leaf = self._alloc()
            inner = self._alloc()
            left = self.left  # _alloc may have swapped the arrays while growing
            right = self.right
            size = self.size
            size[leaf] = 1
            self.leafids[leaf] = [j]
            blo_all[leaf] = list(y)
            bhi_all[leaf] = list(y)
            size[inner] = size[v] + 1
            self.axis[inner] = axis
            self.split[inner] = split
            blo_all[inner] = [b if b < y[q] else y[q] for q, b in enumerate(blo)]
            bhi_all[inner] = [b if b > y[q] else y[q] for q, b in enumerate(bhi)]
            if y_left:
                left[inner], right[inner] = leaf, v
            else:
                left[inner], right[inner] = v, leaf
            g = int(self.parent[v])
            self.parent[inner] = g
            if g == 0:
                self.roots[tree_idx] = inner
            elif left[g] == v:
                left[g] = inner
            else:
                right[g] = inner
            self.parent[v] = inner
            self.parent[leaf] = inner
            self.leaf_slot[tree_idx, j] = leaf
            return

    def codisp_window(self, j_lo: int, j_hi: int) -> np.ndarray:
        """Tree-averaged collusive displacement of shingles [j_lo, j_hi)."""
        m = self.used
        par = self.parent[:m]
        size = self.size[:m]
        # a sibling's size is the parent's minus the node's own
        with np.errstate(divide="ignore", invalid="ignore"):
            best = (size[par] - size) / size
        best[par == 0] = -np.inf  # roots, freed slots, and the sentinel
        anc = par.copy()
        while anc.any():
            np.maximum(best, best[anc], out=best)
            anc = anc[anc]
        slots = self.leaf_slot[:, j_lo:j_hi]
        vals = best[slots]
        vals = np.where(np.isneginf(vals), 0.0, vals)  # single-leaf trees score 0
        return vals.mean(axis=0)


def stream_codisp_iter(series, h: int, w: int, r: int, *,
                       kind: AlgorithmKind = AlgorithmKind.WRCF,
                       alpha: int = 2, max_retries: int = 64,
                       seed=None, rng=None):
    """Yield (shingle_index, score) as each shingle's aggregate is finalized.

    The score of shingle j is its collusive displacement averaged over the r
    trees of each window containing j, then over those windows; it is emitted
    once the last covering window has been processed, so consumers see
    results while later windows are still being advanced. Indices are
    0-based; shingle j covers series positions j .. j+h-1.
    """
    if not kind.codisp_family:
        raise ValueError("streaming scores use the random-cut variants (rrcf or wrcf)")
    if r < 1:
        raise ValueError(f"forest size must be >= 1, got {r}")
    shingles = shingle(series, h)
    n_sh = len(shingles)
    if not 1 <= w <= n_sh:
        raise ValueError(f"window size must be in 1..{n_sh}, got {w}")
    if rng is None:
        rng = np.random.default_rng(seed)
    forest = _WindowForest(shingles, w, r, kind, alpha, max_retries, rng)
    totals = np.zeros(n_sh)
    counts = np.zeros(n_sh, dtype=np.int64)
    n_windows = n_sh - w + 1
    forest_delete = forest.delete
    forest_insert = forest.insert
    for i in range(n_windows):
        if i > 0:
            gone, new = i - 1, i - 1 + w
            for t in range(r):
                forest_delete(t, gone)
                forest_insert(t, new)
        totals[i : i + w] += forest.codisp_window(i, i + w)
        counts[i : i + w] += 1
        if i < n_windows - 1:
            yield i, totals[i] / counts[i]
        else:
            for j in range(i, n_sh):
                yield j, totals[j] / counts[j]


def stream_codisp(series, h: int, w: int, r: int, *,
                  kind: AlgorithmKind = AlgorithmKind.WRCF,
                  alpha: int = 2, max_retries: int = 64,
                  seed=None, rng=None) -> np.ndarray:
    """Aggregated sliding-window collusive displacement per shingle.

    Convenience wrapper around :func:`stream_codisp_iter` returning the full
    score array of length ``len(series) - h + 1``.
    """
    n_sh = len(np.asarray(series).ravel()) - h + 1
    out = np.empty(n_sh)
    for j, score in stream_codisp_iter(series, h, w, r, kind=kind, alpha=alpha,
                                       max_retries=max_retries, seed=seed, rng=rng):
        out[j] = score
    return out
