"""Pinhole camera model, 16-bit depth images, and back-projection.

Camera frame: +x right, +y down, +z forward along the optical axis. Depth
images store z-depth in raw sensor units (Intrinsics.depth_scale meters per
unit); value 0 marks an invalid pixel. Files are binary PGM (P5), maxval
65535, big-endian samples per the PGM convention.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, FormatError


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    depth_scale: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")
        if self.depth_scale <= 0:
            raise ValueError("depth_scale must be positive")

    def to_dict(self) -> dict:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
            "depth_scale": self.depth_scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Intrinsics":
        return cls(
            fx=float(d["fx"]),
            fy=float(d["fy"]),
            cx=float(d["cx"]),
            cy=float(d["cy"]),
            width=int(d["width"]),
            height=int(d["height"]),
            depth_scale=float(d["depth_scale"]),
        )


DEFAULT_INTRINSICS = Intrinsics(
    fx=350.0, fy=350.0, cx=192.0, cy=144.0, width=384, height=288, depth_scale=1e-4
)


@dataclass
class DepthImage:
    data: np.ndarray  # (H, W) uint16, 0 = invalid

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.uint16)
        if self.data.ndim != 2:
            raise ValueError("depth data must be a (H, W) array")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class GridMap:
    """Image-to-heatmap cell mapping: `stride` pixels per cell."""

    stride: int
    g_h: int
    g_w: int

    def __post_init__(self):
        if self.stride < 1 or self.g_h < 1 or self.g_w < 1:
            raise ValueError("grid dimensions must be positive")

    @classmethod
    def for_image(cls, width: int, height: int, stride: int = 4) -> "GridMap":
        if width % stride or height % stride:
            raise DimensionMismatch(
                f"stride {stride} does not divide image size {width}x{height}"
            )
        return cls(stride=stride, g_h=height // stride, g_w=width // stride)

    def matches_image(self, width: int, height: int) -> bool:
        return self.stride * self.g_w == width and self.stride * self.g_h == height

    def cell_center(self, gi: int, gj: int) -> tuple[int, int]:
        """(u, v) pixel at the center of cell (gi, gj)."""
        half = self.stride // 2
        return gj * self.stride + half, gi * self.stride + half


def backproject(depth: DepthImage, intr: Intrinsics) -> np.ndarray:
    """Valid pixels to camera-frame points (N, 3), row-major pixel order."""
    if depth.width != intr.width or depth.height != intr.height:
        raise DimensionMismatch(
            f"depth {depth.width}x{depth.height} vs intrinsics {intr.width}x{intr.height}"
        )
    v, u = np.nonzero(depth.data)
    z = depth.data[v, u].astype(float) * intr.depth_scale
    x = (u - intr.cx) * z / intr.fx
    y = (v - intr.cy) * z / intr.fy
    return np.stack([x, y, z], axis=1)


def project(points, intr: Intrinsics) -> tuple[np.ndarray, np.ndarray]:
    """Camera-frame points to continuous pixel coordinates (u, v)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    z = points[:, 2]
    u = points[:, 0] * intr.fx / z + intr.cx
    v = points[:, 1] * intr.fy / z + intr.cy
    return u, v


def point_of_grid(grid: GridMap, gi: int, gj: int, depth: DepthImage, intr: Intrinsics):
    """3D anchor of a grid cell, or None when the cell has no valid depth.

    Uses the cell-center pixel; when that pixel is invalid the median of the
    cell's valid depths stands in (the pixel coordinate stays the center).
    """
    if not (0 <= gi < grid.g_h and 0 <= gj < grid.g_w):
        raise ValueError(f"cell ({gi}, {gj}) out of range {grid.g_h}x{grid.g_w}")
    u, v = grid.cell_center(gi, gj)
    raw = float(depth.data[v, u])
    if raw <= 0.0:
        s = grid.stride
        block = depth.data[gi * s : (gi + 1) * s, gj * s : (gj + 1) * s]
        valid = block[block > 0]
        if valid.size == 0:
            return None
        raw = float(np.median(valid))
    z = raw * intr.depth_scale
    return np.array([(u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z])


def grid_anchor_map(depth: DepthImage, intr: Intrinsics, grid: GridMap):
    """Vectorized point_of_grid over all cells.

    Returns (anchors (G_H, G_W, 3), valid (G_H, G_W)). Matches the scalar
    routine cell for cell.
    """
    if not grid.matches_image(intr.width, intr.height):
        raise DimensionMismatch("grid does not tile the image")
    if depth.width != intr.width or depth.height != intr.height:
        raise DimensionMismatch("depth size does not match intrinsics")
    s = grid.stride
    blocks = depth.data.reshape(grid.g_h, s, grid.g_w, s)
    center = blocks[:, s // 2, :, s // 2].astype(float)

    if np.all(center > 0):
        raw = center
        valid = np.ones(center.shape, dtype=bool)
    else:
        vals = blocks.astype(float).transpose(0, 2, 1, 3).reshape(grid.g_h, grid.g_w, s * s)
        vals = np.where(vals > 0, vals, np.nan)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", category=RuntimeWarning)  # all-NaN cells
            med = np.nanmedian(vals, axis=2)
        raw = np.where(center > 0, center, med)
        valid = np.isfinite(raw) & (raw > 0)
        raw = np.where(valid, raw, 0.0)

    gj, gi = np.meshgrid(np.arange(grid.g_w), np.arange(grid.g_h))
    u = gj * s + s // 2
    v = gi * s + s // 2
    z = raw * intr.depth_scale
    anchors = np.stack(
        [(u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z], axis=2
    )
    return anchors, valid


def _next_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    n = len(buf)
    while pos < n:
        c = buf[pos : pos + 1]
        if c == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise FormatError("unexpected end of PGM header", offset=pos)
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace():
        pos += 1
    return buf[start:pos], pos


def load_depth_pgm(path) -> DepthImage:
    """Read a 16-bit binary PGM (P5, maxval 65535, big-endian samples)."""
    with open(path, "rb") as f:
        buf = f.read()
    if buf[:2] != b"P5":
        raise FormatError(f"bad PGM magic {buf[:2]!r}, expected b'P5'", offset=0)
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _next_token(buf, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise FormatError(f"bad PGM header token {tok!r}", offset=pos - len(tok))
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise FormatError(f"bad PGM size {width}x{height}", offset=2)
    if maxval != 65535:
        raise FormatError(f"PGM maxval {maxval}, expected 65535", offset=pos)
    pos += 1  # single whitespace byte after maxval
    expected = width * height * 2
    if len(buf) - pos < expected:
        raise FormatError(
            f"truncated PGM payload: need {expected} bytes, have {len(buf) - pos}",
            offset=len(buf),
        )
    data = np.frombuffer(buf, dtype=">u2", count=width * height, offset=pos)
    return DepthImage(data=data.reshape(height, width).astype(np.uint16))


def save_depth_pgm(img: DepthImage, path) -> None:
    header = f"P5\n{img.width} {img.height}\n65535\n".encode("ascii")
    with open(path, "wb") as f:
        f.write(header)
        f.write(img.data.astype(">u2").tobytes())
