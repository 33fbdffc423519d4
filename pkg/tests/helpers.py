"""Shared test oracles: exact rational sweeps, tree checkers, enumeration laws.

Everything here recomputes quantities by a route independent of the library
internals: interval counts and measures in exact Fraction arithmetic, tree
distributions by enumerating gap probabilities, and streaming scores by
replaying the object-tree operations directly.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from cutforest.score import codisp
from cutforest.stream import delete_point, insert_point, shingle
from cutforest.tree import Tree, build_tree


# -- exact density oracles -----------------------------------------------------


def _exact_setup(values):
    vals = sorted(Fraction(float(v)) for v in values)
    n = len(vals)
    lo, hi = vals[0], vals[-1]
    eps = Fraction(0) if n == 1 or lo == hi else (hi - lo) / (2 * (n - 1))
    return vals, n, lo, hi, eps


def _exact_count(vals, p, eps):
    if eps == 0:
        return sum(1 for v in vals if v == p)
    return sum(1 for v in vals if p - eps <= v < p + eps)


def _candidate_centers(vals, lo, hi, eps, grid=64):
    bps = sorted({v - eps for v in vals} | {v + eps for v in vals} | {lo, hi})
    cands = [b for b in bps if lo <= b <= hi]
    for a, b in zip(bps, bps[1:]):
        mid = (a + b) / 2
        if lo <= mid <= hi:
            cands.append(mid)
    step = (hi - lo) / grid
    cands.extend(lo + k * step for k in range(grid + 1))
    return cands


def mu0_oracle(values) -> Fraction:
    """Max interval-count fraction via exact arithmetic on a grid plus breakpoints."""
    vals, n, lo, hi, eps = _exact_setup(values)
    if eps == 0:
        return Fraction(1)
    best = max(_exact_count(vals, p, eps) for p in _candidate_centers(vals, lo, hi, eps))
    return Fraction(best, n)


def bad_measure_oracle(values, alpha: int) -> Fraction:
    """Exact measure of centers in [min, max] whose interval holds >= alpha points."""
    vals, n, lo, hi, eps = _exact_setup(values)
    assert eps > 0
    bps = sorted({v - eps for v in vals} | {v + eps for v in vals} | {lo, hi})
    bps = [b for b in bps if lo <= b <= hi]
    total = Fraction(0)
    for a, b in zip(bps, bps[1:]):
        if b > a and _exact_count(vals, (a + b) / 2, eps) >= alpha:
            total += b - a
    return total


def good_spans_exact(values, alpha: int):
    """Exact acceptance spans of the density-aware sampler, as Fractions."""
    vals, n, lo, hi, eps = _exact_setup(values)
    assert eps > 0
    bps = sorted({v - eps for v in vals} | {v + eps for v in vals} | {lo, hi})
    bps = [b for b in bps if lo <= b <= hi]
    out = []
    for a, b in zip(bps, bps[1:]):
        if b > a and _exact_count(vals, (a + b) / 2, eps) < alpha:
            out.append((a, b))
    return out


# -- tree structure checkers ---------------------------------------------------


def members_of(node):
    return sorted(int(m) for m in node.members)


def shape_signature(tree: Tree):
    """Canonical nested tuple of member-id sets, insensitive to child order."""

    def rec(node):
        ms = tuple(members_of(node))
        if node.is_leaf:
            return (ms,)
        a, b = rec(node.left), rec(node.right)
        lo, hi = sorted((a, b))
        return (ms, lo, hi)

    return rec(tree.root)


def value_shape_signature(tree: Tree):
    """Like shape_signature but over point coordinates, for cross-id comparison."""

    def rec(node):
        ms = tuple(sorted(tree.point(int(m)) for m in node.members))
        if node.is_leaf:
            return (ms,)
        a, b = rec(node.left), rec(node.right)
        lo, hi = sorted((a, b))
        return (ms, lo, hi)

    return rec(tree.root)


def structurally_equal(a: Tree, b: Tree) -> bool:
    def rec(x, y):
        if members_of(x) != members_of(y):
            return False
        if x.is_leaf != y.is_leaf:
            return False
        if x.is_leaf:
            return True
        if x.axis != y.axis or x.split != y.split:
            return False
        return rec(x.left, y.left) and rec(x.right, y.right)

    return rec(a.root, b.root)


def assert_tree_invariants(tree: Tree):
    """Binary-tree axioms, member conservation, and cut-predicate consistency."""
    for node in tree.nodes():
        if node.parent is not None:
            sib = node.sibling()
            assert sib is not None
            inter = set(members_of(node)) & set(members_of(sib))
            assert not inter, "sibling member sets overlap"
            assert sorted(members_of(node) + members_of(sib)) == members_of(node.parent)
        if not node.is_leaf:
            q, p = node.axis, node.split
            assert len(node.left.members) > 0 and len(node.right.members) > 0
            for m in node.left.members:
                assert tree.point(int(m))[q] < p
            for m in node.right.members:
                assert tree.point(int(m))[q] >= p
    for pid in tree.leaf_map:
        assert pid in set(members_of(tree.root))


# -- exact tree distribution for 1-D data (ordinary splits) ---------------------


def exact_rrct_distribution(values):
    """Shape -> probability for ordinary random cut trees over a 1-D multiset.

    Splits land in the gaps between consecutive distinct values with
    probability proportional to gap length; recursion enumerates every
    outcome exactly.
    """
    ids = list(range(len(values)))
    vals = [Fraction(float(v)) for v in values]

    def rec(subset):
        groups = {}
        for i in subset:
            groups.setdefault(vals[i], []).append(i)
        distinct = sorted(groups)
        ms = tuple(sorted(subset))
        if len(distinct) <= 1:
            return {(ms,): Fraction(1)}
        lo, hi = distinct[0], distinct[-1]
        span = hi - lo
        out = {}
        for k in range(len(distinct) - 1):
            gap = distinct[k + 1] - distinct[k]
            p_gap = gap / span
            left_ids = [i for i in subset if vals[i] <= distinct[k]]
            right_ids = [i for i in subset if vals[i] > distinct[k]]
            for lsig, lp in rec(left_ids).items():
                for rsig, rp in rec(right_ids).items():
                    a, b = sorted((lsig, rsig))
                    sig = (ms, a, b)
                    out[sig] = out.get(sig, Fraction(0)) + p_gap * lp * rp
        return out

    return rec(ids)


# -- object-tree streaming reference --------------------------------------------


def reference_stream_codisp(series, h, w, r, kind, alpha, seed):
    """Replay of the sliding-window score using the spec-level tree operations.

    Consumes the RNG exactly like the production path, so results must match
    to float precision.
    """
    rng = np.random.default_rng(seed)
    sh = shingle(series, h)
    n_sh = len(sh)
    trees = [build_tree(sh, kind, rng=rng, alpha=alpha, ids=np.arange(w)) for _ in range(r)]
    totals = np.zeros(n_sh)
    counts = np.zeros(n_sh)
    n_windows = n_sh - w + 1
    for i in range(n_windows):
        if i > 0:
            for t in trees:
                delete_point(t, i - 1)
                insert_point(t, sh[i - 1 + w], rng, point_id=i - 1 + w)
        for j in range(i, i + w):
            totals[j] += float(np.mean([codisp(j, t) for t in trees]))
            counts[j] += 1
    return totals / counts
