"""Angle-view heatmaps: per-cell confidence over orientation classes.

The tensor has shape (V*A, G_H, G_W), class-major, values in [0, 1]. On disk
the format is magic b"AVH1", four little-endian u32 dims (V, A, G_H, G_W),
then the float32 payload in C order. That file layout is the exchange
contract with external producers (e.g. a trained predictor).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .camera import GridMap, Intrinsics
from .errors import FormatError
from .geometry import OrientationTable, class_index, nearest_class

MAGIC = b"AVH1"
_HEADER = struct.Struct("<4I")
_MAX_ELEMENTS = 1 << 31


@dataclass
class AngleViewHeatmap:
    v_count: int
    a_count: int
    data: np.ndarray  # (V*A, G_H, G_W) float32

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 3:
            raise ValueError("heatmap data must be (V*A, G_H, G_W)")
        if self.data.shape[0] != self.v_count * self.a_count:
            raise ValueError(
                f"class axis {self.data.shape[0]} != V*A = {self.v_count * self.a_count}"
            )

    @property
    def g_h(self) -> int:
        return self.data.shape[1]

    @property
    def g_w(self) -> int:
        return self.data.shape[2]

    @classmethod
    def zeros(cls, v_count, a_count, g_h, g_w) -> "AngleViewHeatmap":
        return cls(v_count, a_count, np.zeros((v_count * a_count, g_h, g_w), np.float32))


@dataclass
class GraspAnnotation:
    """A labeled grasp: camera-frame translation/rotation plus opening width."""

    translation: np.ndarray  # (3,) meters
    rotation: np.ndarray  # (3, 3)
    width: float
    object_id: int | None = None

    def __post_init__(self):
        self.translation = np.asarray(self.translation, dtype=float)
        self.rotation = np.asarray(self.rotation, dtype=float)


@dataclass
class ImageGrasp:
    """A heatmap candidate: pixel location, flat class index, confidence."""

    u: int
    v: int
    class_id: int
    confidence: float


def ground_truth_avh(
    annotations,
    intr: Intrinsics,
    table: OrientationTable,
    grid: GridMap,
) -> AngleViewHeatmap:
    """Binary target tensor from grasp annotations.

    Every annotation projects to a pixel, maps to its grid cell, and sets the
    nearest orientation-class bin to 1.0. Out-of-frame or behind-camera
    annotations are skipped. Duplicate and permuted annotation lists produce
    the same tensor.
    """
    avh = AngleViewHeatmap.zeros(table.v_count, table.a_count, grid.g_h, grid.g_w)
    for ann in annotations:
        x, y, z = ann.translation
        if z <= 0.0:
            continue
        u = x * intr.fx / z + intr.cx
        v = y * intr.fy / z + intr.cy
        if not (0.0 <= u < intr.width and 0.0 <= v < intr.height):
            continue
        gi = int(v // grid.stride)
        gj = int(u // grid.stride)
        v_idx, a_idx = nearest_class(table, ann.rotation)
        avh.data[class_index(v_idx, a_idx, table.a_count), gi, gj] = 1.0
    return avh


def extract_candidates(
    avh: AngleViewHeatmap,
    threshold: float = 0.3,
    top_k: int = 1024,
    grid: GridMap | None = None,
):
    """Bins with confidence >= threshold, highest first, truncated to top_k.

    Equal confidences order by (grid row, grid col, class) ascending so the
    output is fully deterministic. Candidate (u, v) is the cell-center pixel
    of the supplied grid; without a grid, stride 1 is assumed (u = col,
    v = row).
    """
    if not (0.0 <= threshold <= 1.0):
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    if grid is not None and (grid.g_h != avh.g_h or grid.g_w != avh.g_w):
        raise ValueError("grid shape does not match heatmap")
    stride = 1 if grid is None else grid.stride
    half = stride // 2

    flat = avh.data.reshape(-1)
    hits = np.flatnonzero(flat >= threshold)
    if hits.size == 0:
        return []
    vals = flat[hits]
    if hits.size > top_k:
        # value of the top_k-th largest; keep ties so the ordering stays exact
        kth = np.partition(vals, hits.size - top_k)[hits.size - top_k]
        keep = vals >= kth
        hits, vals = hits[keep], vals[keep]

    n_cells = avh.g_h * avh.g_w
    cls, rem = np.divmod(hits, n_cells)
    gi, gj = np.divmod(rem, avh.g_w)
    order = np.lexsort((cls, gj, gi, -vals))[:top_k]

    return [
        ImageGrasp(
            u=int(gj[i]) * stride + half,
            v=int(gi[i]) * stride + half,
            class_id=int(cls[i]),
            confidence=float(vals[i]),
        )
        for i in order
    ]


def random_avh(v_count, a_count, g_h, g_w, seed: int, density: float) -> AngleViewHeatmap:
    """Seeded random tensor: each bin is nonzero with probability `density`.

    Nonzero bins draw a uniform confidence in (0, 1]. The no-predictor
    baseline feeding the analytic search.
    """
    if not (0.0 < density <= 1.0):
        raise ValueError(f"density must be in (0, 1], got {density}")
    rng = np.random.default_rng(seed)
    shape = (v_count * a_count, g_h, g_w)
    mask = rng.random(shape) < density
    vals = 1.0 - rng.random(shape)  # (0, 1]
    return AngleViewHeatmap(v_count, a_count, np.where(mask, vals, 0.0).astype(np.float32))


def write_avh(avh: AngleViewHeatmap, path) -> None:
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(_HEADER.pack(avh.v_count, avh.a_count, avh.g_h, avh.g_w))
        f.write(np.ascontiguousarray(avh.data, dtype="<f4").tobytes())


def read_avh(path) -> AngleViewHeatmap:
    with open(path, "rb") as f:
        buf = f.read()
    if buf[:4] != MAGIC:
        raise FormatError(f"bad magic {buf[:4]!r}, expected {MAGIC!r}", offset=0)
    if len(buf) < 4 + _HEADER.size:
        raise FormatError("truncated header", offset=len(buf))
    v_count, a_count, g_h, g_w = _HEADER.unpack_from(buf, 4)
    n = v_count * a_count * g_h * g_w
    if n == 0 or n > _MAX_ELEMENTS:
        raise FormatError(f"implausible dimensions ({v_count}, {a_count}, {g_h}, {g_w})", offset=4)
    start = 4 + _HEADER.size
    if len(buf) - start != 4 * n:
        raise FormatError(
            f"payload is {len(buf) - start} bytes, expected {4 * n}", offset=len(buf)
        )
    data = np.frombuffer(buf, dtype="<f4", count=n, offset=start)
    return AngleViewHeatmap(
        v_count, a_count, data.reshape(v_count * a_count, g_h, g_w).copy()
    )
