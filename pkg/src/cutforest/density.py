"""Density measure on axis projections and the density-aware split sampler.

The central object is the count function f(p) = |[p-eps, p+eps) n Y| for a
projection Y with radius eps = (max-min)/(2(n-1)). A point y is covered by
the interval centered at p exactly when p lies in (y-eps, y+eps], so f is
piecewise constant with breakpoints at {y-eps, y+eps}. All exact quantities
here (the density measure, the measure of over-dense split values, the
sampler's fallback) are computed by sweeping those breakpoints rather than
by grid approximation.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset

__all__ = [
    "DensityParams",
    "interval_radius",
    "interval_count",
    "density_measure_1d",
    "density_measure",
    "bad_split_measure",
    "good_split_spans",
    "sample_split_density_aware",
]


@dataclass(frozen=True)
class DensityParams:
    """Knobs for density-aware split sampling.

    alpha: a candidate split value is rejected while its radius interval
        covers at least this many projected points; must be >= 2.
    max_retries: rejection draws allowed before falling back to sampling
        uniformly from the exactly-computed acceptable set. The fallback
        has the same conditional law, so this only bounds the loop.
    """

    alpha: int = 2
    max_retries: int = 64

    def __post_init__(self) -> None:
        if self.alpha < 2:
            raise ValueError(f"alpha must be an integer >= 2, got {self.alpha}")
        if self.max_retries < 1:
            raise ValueError(f"max_retries must be >= 1, got {self.max_retries}")


def interval_radius(values) -> float:
    """Radius eps of a projection: (max - min) / (2 (n - 1)), or 0 for n == 1.

    Half the spacing of an equally spaced set; 0 iff the projection is a
    single value or all values coincide.
    """
    v = np.asarray(values, dtype=float).ravel()
    n = v.size
    if n == 0:
        raise ValueError("radius of an empty projection is undefined")
    if n == 1:
        return 0.0
    return float((v.max() - v.min()) / (2.0 * (n - 1)))


def interval_count(values, center: float) -> int:
    """Number of projected values in [center-eps, center+eps), multiplicity included.

    With eps == 0 the interval degenerates to the single point {center}.
    ``center`` may lie anywhere, including outside [min, max].
    """
    v = np.asarray(values, dtype=float).ravel()
    eps = interval_radius(v)
    if eps == 0.0:
        return int(np.count_nonzero(v == center))
    return int(np.count_nonzero((v >= center - eps) & (v < center + eps)))


def _constant_spans(sorted_vals: np.ndarray, eps: float, lo: float, hi: float):
    """Yield (a, b, count) spans of the piecewise-constant count function on [lo, hi].

    Breakpoints are {y +- eps} clipped to [lo, hi]; on each positive-length
    span between consecutive breakpoints the count is constant, and it is
    evaluated at the span midpoint. Midpoints sit half a span away from every
    breakpoint, so the evaluation is immune to roundoff at the boundaries.

    Breakpoints that coincide in exact arithmetic can land one ulp apart in
    floats, leaving sliver spans whose midpoints sit on the coincidence point
    and count wrongly; spans below a relative width threshold are dropped
    (they carry ~1e-16 of the range, far below any genuine span).
    """
    bps = np.concatenate((sorted_vals - eps, sorted_vals + eps, (lo, hi)))
    bps = np.unique(bps[(bps >= lo) & (bps <= hi)])
    lefts = bps[:-1]
    rights = bps[1:]
    mids = 0.5 * (lefts + rights)
    counts = np.searchsorted(sorted_vals, mids + eps, side="left") - np.searchsorted(
        sorted_vals, mids - eps, side="left"
    )
    min_width = 1e-12 * (hi - lo)
    for a, b, c in zip(lefts, rights, counts):
        if b - a > min_width:
            yield float(a), float(b), int(c)


def density_measure_1d(values) -> float:
    """Max fraction of the projection covered by one radius interval, in [0, 1].

    Equals 1/n for an equally spaced n-set and 1 iff all values are identical.
    The supremum over interval centers is attained on one of the finitely many
    constant spans of the count function, so the scan is exact.
    """
    v = np.sort(np.asarray(values, dtype=float).ravel())
    n = v.size
    if n == 0:
        raise ValueError("density of an empty projection is undefined")
    lo, hi = float(v[0]), float(v[-1])
    eps = 0.0 if n == 1 else (hi - lo) / (2.0 * (n - 1))
    if eps == 0.0:
        # single value or all duplicates: the degenerate interval covers everything
        return 1.0
    best = max(c for _, _, c in _constant_spans(v, eps, lo, hi))
    return best / n


def density_measure(data: Dataset) -> float:
    """Average of the per-axis density measures, in [0, 1]."""
    return float(
        np.mean([density_measure_1d(data.points[:, q]) for q in range(data.dim)])
    )


def _bad_spans(values, alpha: int):
    """Sorted values, radius, and the spans of [min, max] where the count >= alpha."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    n = v.size
    if n < 2:
        raise ValueError("need at least two values")
    lo, hi = float(v[0]), float(v[-1])
    if not lo < hi:
        raise ValueError("projection is constant; split values are undefined")
    if alpha < 2:
        raise ValueError(f"alpha must be >= 2, got {alpha}")
    eps = (hi - lo) / (2.0 * (n - 1))
    spans = list(_constant_spans(v, eps, lo, hi))
    bad = [(a, b) for a, b, c in spans if c >= alpha]
    good = [(a, b) for a, b, c in spans if c < alpha]
    return v, eps, lo, hi, bad, good


def bad_split_measure(values, alpha: int) -> float:
    """Lebesgue measure of split values in [min, max] whose interval holds >= alpha points.

    Always strictly below (max - min) / alpha.
    """
    _, _, _, _, bad, _ = _bad_spans(values, alpha)
    return float(sum(b - a for a, b in bad))


def good_split_spans(values, alpha: int) -> list[tuple[float, float]]:
    """Spans of [min, max] on which the interval count stays below alpha.

    Their union is the acceptance region of the density-aware sampler; it is
    never empty and has measure > (max - min) (1 - 1/alpha).
    """
    _, _, _, _, _, good = _bad_spans(values, alpha)
    return good


def _count_sorted(sorted_vals, p: float, eps: float) -> int:
    # sorted_vals may be a list or 1-D array; bisect keeps this cheap per draw
    if eps == 0.0:
        return bisect.bisect_right(sorted_vals, p) - bisect.bisect_left(sorted_vals, p)
    return bisect.bisect_left(sorted_vals, p + eps) - bisect.bisect_left(
        sorted_vals, p - eps
    )


def _sample_from_sorted(sorted_vals, lo: float, hi: float, params: DensityParams, rng):
    """Rejection-sample a split value with interval count < alpha from sorted data.

    Returns (split_value, retries). After ``max_retries`` rejected draws the
    value is drawn uniformly from the exactly-computed acceptance spans, which
    realizes the same conditional law while guaranteeing termination.
    """
    n = len(sorted_vals)
    eps = (hi - lo) / (2.0 * (n - 1))
    alpha = params.alpha
    width = hi - lo
    for retries in range(params.max_retries):
        p = lo + rng.random() * width
        if _count_sorted(sorted_vals, p, eps) < alpha:
            return p, retries
    good = good_split_spans(sorted_vals, alpha)
    if not good:
        # only reachable when the range is too small for interval counting to
        # resolve (a few ulps); the conditional law is meaningless there
        return lo + rng.random() * width, params.max_retries
    total = sum(b - a for a, b in good)
    u = rng.random() * total
    for a, b in good:
        w = b - a
        if u < w:
            p = a + u
            # u == 0 can land on the left edge, which belongs to the previous
            # span; the right edge is always inside this one
            if _count_sorted(sorted_vals, p, eps) >= alpha:
                p = b
            return p, params.max_retries
        u -= w
    return good[-1][1], params.max_retries


def sample_split_density_aware(values, params: DensityParams, rng) -> tuple[float, int]:
    """Draw a split value uniform on [min, max] conditioned on count < alpha.

    Requires min < max. Returns the value and the number of rejected draws.
    A valid value always exists: intervals centered 2 eps apart are disjoint,
    so if every center covered >= alpha points the projection would need more
    than n elements.
    """
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size < 2 or not v[0] < v[-1]:
        raise ValueError("need a projection with min < max to sample a split")
    return _sample_from_sorted(v, float(v[0]), float(v[-1]), params, rng)
