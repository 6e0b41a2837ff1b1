"""Analytic search for the remaining grasp DoF: opening width and depth.

Given an image candidate with a known orientation class, the search sweeps a
grid of depth offsets (along the approach axis) and opening widths, keeps the
(offset, width) pairs where the gripper volume is free of scene points and
the between-fingers box is not empty, and picks the deepest feasible pair,
narrowest width first.

Gripper frame: x the closing axis, y across the finger height, z the
approach direction. The grasp center sits at the origin; fingers span
z in [-l/2, l/2], the base block sits behind them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .avh import AngleViewHeatmap, extract_candidates
from .camera import DepthImage, GridMap, Intrinsics, backproject, grid_anchor_map
from .errors import DimensionMismatch
from .geometry import OrientationTable
from .spatial import OrientedBox, SpatialIndex, build_index, points_in_box


@dataclass(frozen=True)
class GripperConfig:
    """Parallel-jaw dimensions, meters.

    h: finger height, l: finger length, w_max: max opening, t_f: finger
    thickness, b_d: depth of the base block behind the fingers.
    """

    h: float = 0.02
    l: float = 0.06
    w_max: float = 0.10
    t_f: float = 0.01
    b_d: float = 0.02

    def __post_init__(self):
        for name in ("h", "l", "w_max", "t_f", "b_d"):
            if getattr(self, name) <= 0:
                raise ValueError(f"gripper {name} must be positive")


DEFAULT_GRIPPER = GripperConfig()


def default_widths() -> np.ndarray:
    return np.arange(1, 11) * 0.01  # 1 cm .. 10 cm


def default_offsets() -> np.ndarray:
    return np.arange(-2, 3) * 0.01  # -2 cm .. +2 cm along the approach axis


@dataclass(frozen=True)
class FASConfig:
    widths: np.ndarray = field(default_factory=default_widths)
    offsets: np.ndarray = field(default_factory=default_offsets)

    def __post_init__(self):
        object.__setattr__(self, "widths", np.asarray(self.widths, dtype=float))
        object.__setattr__(self, "offsets", np.asarray(self.offsets, dtype=float))
        if self.widths.size == 0 or self.offsets.size == 0:
            raise ValueError("widths and offsets must be nonempty")
        if np.any(np.diff(self.widths) <= 0) or np.any(self.widths <= 0):
            raise ValueError("widths must be positive and strictly increasing")
        if np.any(np.diff(self.offsets) <= 0):
            raise ValueError("offsets must be strictly increasing")


@dataclass
class GraspPose:
    """7-DoF grasp: camera-frame translation, rotation, opening width."""

    translation: np.ndarray  # (3,)
    rotation: np.ndarray  # (3, 3), column 2 is the approach axis
    width: float

    def __post_init__(self):
        self.translation = np.asarray(self.translation, dtype=float)
        self.rotation = np.asarray(self.rotation, dtype=float)
        if self.width <= 0:
            raise ValueError("grasp width must be positive")

    @property
    def approach_axis(self) -> np.ndarray:
        return self.rotation[:, 2]

    @property
    def closing_axis(self) -> np.ndarray:
        return self.rotation[:, 0]


@dataclass(frozen=True)
class GripperModel:
    """Axis-aligned boxes in the gripper frame: (center, half_extents)."""

    occupied: tuple  # two fingers + base
    grasping: tuple  # single box between the fingers


def gripper_model(gripper: GripperConfig, width: float) -> GripperModel:
    if not (0.0 < width <= gripper.w_max):
        raise ValueError(f"width {width} outside (0, {gripper.w_max}]")
    hh, hl = gripper.h / 2.0, gripper.l / 2.0
    fx = width / 2.0 + gripper.t_f / 2.0
    finger_half = np.array([gripper.t_f / 2.0, hh, hl])
    base = (
        np.array([0.0, 0.0, -(hl + gripper.b_d / 2.0)]),
        np.array([width / 2.0 + gripper.t_f, hh, gripper.b_d / 2.0]),
    )
    return GripperModel(
        occupied=(
            (np.array([-fx, 0.0, 0.0]), finger_half),
            (np.array([fx, 0.0, 0.0]), finger_half),
            base,
        ),
        grasping=(np.zeros(3), np.array([width / 2.0, hh, hl])),
    )


def gripper_boxes_world(pose: GraspPose, gripper: GripperConfig):
    """World-frame oriented boxes (occupied list, grasping box) at a pose."""
    model = gripper_model(gripper, pose.width)
    occ = [
        OrientedBox(pose.translation + pose.rotation @ c, pose.rotation, h)
        for c, h in model.occupied
    ]
    c, h = model.grasping
    grasp = OrientedBox(pose.translation + pose.rotation @ c, pose.rotation, h)
    return occ, grasp


@dataclass(frozen=True)
class RuleCheck:
    collision: bool  # rule 1 violated: a scene point inside the gripper body
    empty: bool  # rule 2 violated: nothing between the fingers

    @property
    def feasible(self) -> bool:
        return not self.collision and not self.empty


def check_rules(index: SpatialIndex, pose: GraspPose, gripper: GripperConfig) -> RuleCheck:
    occ, grasp = gripper_boxes_world(pose, gripper)
    collision = any(points_in_box(index, box)[0].shape[0] > 0 for box in occ)
    empty = points_in_box(index, grasp)[0].shape[0] == 0
    return RuleCheck(collision=collision, empty=empty)


def select_best(feasible, offsets=None, widths=None):
    """Deepest feasible pair, narrowest width first: (d_idx, w_idx) or None."""
    feasible = np.asarray(feasible)
    n_d, n_w = feasible.shape
    for d in range(n_d - 1, -1, -1):
        for w in range(n_w):
            if feasible[d, w]:
                return d, w
    return None


def select_best_batch(feasible) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized select_best over (C, D, W). Returns (valid, d_idx, w_idx)."""
    feasible = np.asarray(feasible)
    n_c, n_d, n_w = feasible.shape
    flipped = feasible[:, ::-1, :].reshape(n_c, n_d * n_w)
    j = np.argmax(flipped, axis=1)
    valid = flipped[np.arange(n_c), j] > 0
    return valid, n_d - 1 - j // n_w, j % n_w


def default_cell_size(gripper: GripperConfig, fas_cfg: FASConfig) -> float:
    """Cell comparable to the gripper's thin dimension.

    Small enough that voxel pruning tracks the finger-height slab, large
    enough that the per-query voxel enumeration stays cheap.
    """
    dims = np.array(
        [
            fas_cfg.widths[-1] + 2 * gripper.t_f,
            gripper.h,
            gripper.l + gripper.b_d + (fas_cfg.offsets[-1] - fas_cfg.offsets[0]),
        ]
    )
    return float(max(1.5 * gripper.h, np.linalg.norm(dims) / 8.0))


def _validate_widths(fas_cfg: FASConfig, gripper: GripperConfig):
    if fas_cfg.widths[-1] > gripper.w_max:
        raise ValueError(
            f"sampled width {fas_cfg.widths[-1]} exceeds gripper w_max {gripper.w_max}"
        )


def search(
    candidate,
    anchor,
    index: SpatialIndex,
    table: OrientationTable,
    fas_cfg: FASConfig,
    gripper: GripperConfig,
    backend: str | None = None,
):
    """Solve width/depth for one candidate; None when nothing is feasible."""
    _validate_widths(fas_cfg, gripper)
    anchor = np.asarray(anchor, dtype=float)
    rot = table.rotations[candidate.class_id]
    feas = kernels.feasibility_grid(
        index,
        anchor[None, :],
        rot[None, :, :],
        fas_cfg.offsets,
        fas_cfg.widths,
        gripper,
        backend=backend,
    )
    pick = select_best(feas[0])
    if pick is None:
        return None
    d, w = pick
    translation = anchor + fas_cfg.offsets[d] * rot[:, 2]
    return GraspPose(translation=translation, rotation=rot.copy(), width=float(fas_cfg.widths[w]))


def detect(
    avh: AngleViewHeatmap,
    depth: DepthImage,
    intr: Intrinsics,
    grid: GridMap,
    table: OrientationTable,
    fas_cfg: FASConfig | None = None,
    gripper: GripperConfig | None = None,
    threshold: float = 0.3,
    top_k: int = 1024,
    *,
    cell_size: float | None = None,
    backend: str | None = None,
    threads: int = 1,
    use_index: bool = True,
    timings: dict | None = None,
):
    """Full pipeline: candidates -> anchors -> width/depth search.

    Returns [(GraspPose, confidence)] in candidate (confidence) order.
    Candidates whose grid cell has no valid depth, or with no feasible
    (offset, width) pair, are dropped.
    """
    fas_cfg = fas_cfg or FASConfig()
    gripper = gripper or DEFAULT_GRIPPER
    _validate_widths(fas_cfg, gripper)
    if avh.v_count != table.v_count or avh.a_count != table.a_count:
        raise DimensionMismatch("heatmap class count does not match orientation table")
    if avh.g_h != grid.g_h or avh.g_w != grid.g_w:
        raise DimensionMismatch("heatmap grid does not match grid map")
    if not grid.matches_image(intr.width, intr.height):
        raise DimensionMismatch("grid map does not tile the image")
    if depth.width != intr.width or depth.height != intr.height:
        raise DimensionMismatch("depth size does not match intrinsics")

    marks = {}

    def mark(name, t0):
        marks[name] = time.perf_counter() - t0
        return time.perf_counter()

    t0 = time.perf_counter()
    candidates = extract_candidates(avh, threshold, top_k, grid)
    t0 = mark("extract", t0)

    cloud = backproject(depth, intr)
    t0 = mark("backproject", t0)

    cell = cell_size if cell_size is not None else default_cell_size(gripper, fas_cfg)
    index = build_index(cloud, cell)
    t0 = mark("index", t0)

    anchors, valid = grid_anchor_map(depth, intr, grid)
    kept = []
    kept_anchors = []
    for cand in candidates:
        gi, gj = cand.v // grid.stride, cand.u // grid.stride
        if valid[gi, gj]:
            kept.append(cand)
            kept_anchors.append(anchors[gi, gj])
    t0 = mark("anchors", t0)

    results = []
    if kept:
        anchor_arr = np.asarray(kept_anchors)
        rot_arr = table.rotations[[c.class_id for c in kept]]
        feas = kernels.feasibility_grid(
            index,
            anchor_arr,
            rot_arr,
            fas_cfg.offsets,
            fas_cfg.widths,
            gripper,
            brute=not use_index,
            backend=backend,
            threads=threads,
        )
        ok, d_idx, w_idx = select_best_batch(feas)
        for i, cand in enumerate(kept):
            if not ok[i]:
                continue
            rot = rot_arr[i]
            translation = anchor_arr[i] + fas_cfg.offsets[d_idx[i]] * rot[:, 2]
            results.append(
                (
                    GraspPose(translation, rot.copy(), float(fas_cfg.widths[w_idx[i]])),
                    cand.confidence,
                )
            )
    mark("search", t0)

    if timings is not None:
        timings.update(marks)
    return results


def gripper_obj(poses, gripper: GripperConfig) -> str:
    """Wavefront OBJ of the gripper boxes at each pose, for offline viewing."""
    lines = []
    n_v = 0
    corners = np.array(
        [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float
    )
    faces = [
        (0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1),
        (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3),
    ]
    for p_idx, pose in enumerate(poses):
        occ, grasp = gripper_boxes_world(pose, gripper)
        lines.append(f"o grasp_{p_idx}")
        for box in [*occ, grasp]:
            verts = box.center + (corners * box.half) @ box.rotation.T
            for v in verts:
                lines.append(f"v {v[0]:.6f} {v[1]:.6f} {v[2]:.6f}")
            for f in faces:
                lines.append("f " + " ".join(str(n_v + i + 1) for i in f))
            n_v += 8
    return "\n".join(lines) + "\n"
