"""Voxel-hash index over a point cloud for box queries.

Points are bucketed by their voxel coordinate, packed into a single int64
key, and stored sorted so every voxel is a contiguous slice. Queries
enumerate the voxels overlapping an axis-aligned bound and refine exactly,
so results always equal a brute-force scan.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

VOXEL_COORD_BITS = 21
_LIMIT = 1 << (VOXEL_COORD_BITS - 1)
# Padding applied to query bounds so points mathematically on a box face are
# never lost to rounding when the enclosing AABB is formed.
AABB_PAD = 1e-9


def pack_keys(coords) -> np.ndarray:
    c = coords + _LIMIT
    return (c[:, 0] << 42) | (c[:, 1] << 21) | c[:, 2]


@dataclass(frozen=True)
class OrientedBox:
    center: np.ndarray  # (3,)
    rotation: np.ndarray  # (3, 3), columns are the box axes
    half: np.ndarray  # (3,) positive half-extents

    def aabb(self) -> tuple[np.ndarray, np.ndarray]:
        r = np.abs(self.rotation) @ self.half
        return self.center - r, self.center + r

    def contains(self, points) -> np.ndarray:
        """Boundary-inclusive membership mask."""
        local = (np.atleast_2d(points) - self.center) @ self.rotation
        return np.all(np.abs(local) <= self.half, axis=1)


class SpatialIndex:
    """Immutable voxel grid over a fixed cloud."""

    def __init__(self, points, cell_size: float):
        if cell_size <= 0:
            raise ValueError(f"cell_size must be positive, got {cell_size}")
        points = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 3))
        self.cell_size = float(cell_size)
        self.n_points = points.shape[0]
        if self.n_points == 0:
            self.points = points
            self.original_indices = np.empty(0, dtype=np.int64)
            self.keys = np.empty(0, dtype=np.int64)
            self.starts = np.zeros(1, dtype=np.int64)
            return
        coords = np.floor(points / self.cell_size).astype(np.int64)
        if np.any(np.abs(coords) >= _LIMIT):
            raise ValueError("points exceed the indexable range for this cell size")
        keys = pack_keys(coords)
        order = np.argsort(keys, kind="stable")
        self.points = np.ascontiguousarray(points[order])
        self.original_indices = order.astype(np.int64)
        sorted_keys = keys[order]
        boundary = np.empty(self.n_points, dtype=bool)
        boundary[0] = True
        np.not_equal(sorted_keys[1:], sorted_keys[:-1], out=boundary[1:])
        first = np.flatnonzero(boundary)
        self.keys = sorted_keys[first]
        self.starts = np.append(first, self.n_points).astype(np.int64)

    def query_aabb(self, lo, hi) -> np.ndarray:
        """Positions (into the index's sorted point array) of all points in
        voxels overlapping [lo, hi]. A superset of the exact AABB contents."""
        if self.n_points == 0:
            return np.empty(0, dtype=np.int64)
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        v_lo = np.floor(lo / self.cell_size).astype(np.int64)
        v_hi = np.floor(hi / self.cell_size).astype(np.int64)
        v_lo = np.maximum(v_lo, -_LIMIT)
        v_hi = np.minimum(v_hi, _LIMIT - 1)
        if np.any(v_hi < v_lo):
            return np.empty(0, dtype=np.int64)
        ii, jj, kk = np.meshgrid(
            np.arange(v_lo[0], v_hi[0] + 1),
            np.arange(v_lo[1], v_hi[1] + 1),
            np.arange(v_lo[2], v_hi[2] + 1),
            indexing="ij",
        )
        cand = pack_keys(np.stack([ii.ravel(), jj.ravel(), kk.ravel()], axis=1))
        pos = np.searchsorted(self.keys, cand)
        ok = (pos < self.keys.size) & (self.keys[np.minimum(pos, self.keys.size - 1)] == cand)
        if not np.any(ok):
            return np.empty(0, dtype=np.int64)
        slices = [
            np.arange(self.starts[p], self.starts[p + 1]) for p in pos[ok]
        ]
        return np.concatenate(slices)


def build_index(cloud, cell_size: float) -> SpatialIndex:
    return SpatialIndex(cloud, cell_size)


def points_in_box(index: SpatialIndex, box: OrientedBox):
    """Exact boundary-inclusive contents of an oriented box.

    Returns (points (K, 3), original cloud indices (K,)).
    """
    lo, hi = box.aabb()
    pos = index.query_aabb(lo - AABB_PAD, hi + AABB_PAD)
    if pos.size == 0:
        return np.empty((0, 3)), np.empty(0, dtype=np.int64)
    pts = index.points[pos]
    inside = box.contains(pts)
    return pts[inside], index.original_indices[pos[inside]]
