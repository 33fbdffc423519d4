"""Point-set containers: finite multisets in R^d, axis projections, bounding boxes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class Dataset:
    """A finite multiset of d-dimensional points.

    Points are stored row-wise as a read-only float array. Duplicates are
    allowed and meaningful (multiset semantics). Row order is stable for
    reproducibility but carries no meaning: every randomized consumer draws
    through an explicit RNG, so order never influences results except through
    documented sampling.

    Instances are immutable after construction and safe to share across
    parallel tree builders.
    """

    __slots__ = ("points",)

    def __init__(self, points) -> None:
        arr = np.asarray(points, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise ValueError(f"expected points as a 2-D array, got shape {arr.shape}")
        n, d = arr.shape
        if n < 1:
            raise ValueError("a dataset needs at least one point")
        if d < 1:
            raise ValueError("points need at least one coordinate")
        if not np.isfinite(arr).all():
            raise ValueError("coordinates must be finite (no NaN or Inf)")
        arr = arr.copy()
        arr.setflags(write=False)
        self.points = arr

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def __repr__(self) -> str:
        return f"Dataset(n={len(self)}, dim={self.dim})"


@dataclass(frozen=True)
class BoundingBox:
    """Per-axis [min, max] of the smallest closed box containing a point set."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self) -> None:
        if self.mins.shape != self.maxs.shape:
            raise ValueError("mins and maxs must have the same shape")
        if np.any(self.mins > self.maxs):
            raise ValueError("box min exceeds max on some axis")

    @property
    def dim(self) -> int:
        return self.mins.shape[0]

    @property
    def lengths(self) -> np.ndarray:
        return self.maxs - self.mins


def project(data: Dataset, axis: int) -> np.ndarray:
    """Multiset of the ``axis``-th coordinates of every point (0-based axis).

    Duplicates are preserved; the result has exactly ``len(data)`` entries.
    """
    if not 0 <= axis < data.dim:
        raise ValueError(f"axis {axis} out of range for dimension {data.dim}")
    return data.points[:, axis].copy()


def bounding_box(data: Dataset) -> BoundingBox:
    """Smallest closed axis-aligned box containing every point."""
    pts = data.points
    return BoundingBox(mins=pts.min(axis=0), maxs=pts.max(axis=0))


def total_edge_length(box: BoundingBox) -> float:
    """Sum of the box side lengths across axes; 0 iff all points coincide."""
    return float(box.lengths.sum())
