"""Synthetic scenes: analytic primitives, ray-cast depth, sampled clouds,
and oracle antipodal grasps.

Everything is deterministic under a seed. Clouds sample primitive surfaces
only (the table plane is rendered into depth images but never sampled), and
back faces are culled against the camera at the origin to imitate a single
partial view.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .avh import GraspAnnotation
from .camera import DepthImage, Intrinsics
from .fas import GripperConfig, GraspPose, gripper_boxes_world
from .geometry import quat_from_rotation, rotation_about, rotation_from_quat, unit

# margin between an oracle grasp's fingers and its object's faces
ORACLE_CLEARANCE = 0.01
# inflation applied to the gripper body when screening against other objects
_CROSS_MARGIN = 0.008
_INTERNAL_DENSITY = 2e5  # points/m^2 for the oracle's screening clouds
_MIN_PATCH_POINTS = 10
_MIN_APPROACH_Z = 0.1
_TABLE_MARGIN = 1e-3


@dataclass(frozen=True)
class Primitive:
    kind: str  # "box" | "sphere" | "cylinder"
    dims: np.ndarray  # box: half extents (3,); sphere: (r,); cylinder: (r, hh)
    rotation: np.ndarray  # (3, 3) camera frame
    translation: np.ndarray  # (3,)

    def __post_init__(self):
        object.__setattr__(self, "dims", np.asarray(self.dims, dtype=float))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float))
        if self.kind not in ("box", "sphere", "cylinder"):
            raise ValueError(f"unknown primitive kind {self.kind!r}")
        if np.any(self.dims <= 0):
            raise ValueError("primitive dimensions must be positive")


@dataclass
class SyntheticScene:
    primitives: list
    table_z: float | None = None


def make_box(half_extents, rotation=None, translation=(0, 0, 0)) -> Primitive:
    rot = np.eye(3) if rotation is None else rotation
    return Primitive("box", np.asarray(half_extents, float), rot, np.asarray(translation, float))


def make_sphere(radius, translation=(0, 0, 0)) -> Primitive:
    return Primitive("sphere", np.array([radius]), np.eye(3), np.asarray(translation, float))


def make_cylinder(radius, half_height, rotation=None, translation=(0, 0, 0)) -> Primitive:
    rot = np.eye(3) if rotation is None else rotation
    return Primitive("cylinder", np.array([radius, half_height]), rot, np.asarray(translation, float))


def surface_area(prim: Primitive) -> float:
    if prim.kind == "box":
        hx, hy, hz = prim.dims
        return 8.0 * (hx * hy + hy * hz + hx * hz)
    if prim.kind == "sphere":
        return float(4.0 * np.pi * prim.dims[0] ** 2)
    r, hh = prim.dims
    return float(4.0 * np.pi * r * hh + 2.0 * np.pi * r * r)


# ---------------------------------------------------------------------------
# ray casting


def _ray_box(o, d, half):
    """Slab intersection; o fixed, d (N, 3). Returns t or +inf."""
    d = np.where(np.abs(d) < 1e-12, np.where(d < 0, -1e-12, 1e-12), d)
    t1 = (-half - o) / d
    t2 = (half - o) / d
    tmin = np.minimum(t1, t2).max(axis=1)
    tmax = np.maximum(t1, t2).min(axis=1)
    t = np.where(tmin > 1e-9, tmin, tmax)
    hit = (tmax >= np.maximum(tmin, 0.0)) & (t > 1e-9)
    return np.where(hit, t, np.inf)


def _ray_sphere(o, d, r):
    a = np.einsum("ni,ni->n", d, d)
    b = 2.0 * (d @ o)
    c = o @ o - r * r
    disc = b * b - 4.0 * a * c
    ok = disc >= 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    t_near = (-b - sq) / (2.0 * a)
    t_far = (-b + sq) / (2.0 * a)
    t = np.where(t_near > 1e-9, t_near, t_far)
    return np.where(ok & (t > 1e-9), t, np.inf)


def _ray_cylinder(o, d, r, hh):
    a = d[:, 0] ** 2 + d[:, 1] ** 2
    b = 2.0 * (o[0] * d[:, 0] + o[1] * d[:, 1])
    c = o[0] ** 2 + o[1] ** 2 - r * r
    disc = b * b - 4.0 * a * c
    ok = (disc >= 0) & (a > 1e-18)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    a_safe = np.where(a > 1e-18, a, 1.0)
    best = np.full(d.shape[0], np.inf)
    for sign in (-1.0, 1.0):
        t = (-b + sign * sq) / (2.0 * a_safe)
        z = o[2] + t * d[:, 2]
        valid = ok & (t > 1e-9) & (np.abs(z) <= hh)
        best = np.where(valid & (t < best), t, best)
    dz = np.where(np.abs(d[:, 2]) < 1e-12, 1e-12, d[:, 2])
    for cap in (-hh, hh):
        t = (cap - o[2]) / dz
        x = o[0] + t * d[:, 0]
        y = o[1] + t * d[:, 1]
        valid = (t > 1e-9) & (x * x + y * y <= r * r)
        best = np.where(valid & (t < best), t, best)
    return best


def render_depth(scene: SyntheticScene, intr: Intrinsics) -> DepthImage:
    """Per-pixel nearest hit against primitives and the table plane."""
    u, v = np.meshgrid(np.arange(intr.width), np.arange(intr.height))
    dirs = np.stack(
        [(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, np.ones_like(u, dtype=float)],
        axis=2,
    ).reshape(-1, 3)
    # with dir_z = 1 the ray parameter equals the z-depth directly
    t_best = np.full(dirs.shape[0], np.inf)
    for prim in scene.primitives:
        o_l = -(prim.rotation.T @ prim.translation)
        d_l = dirs @ prim.rotation
        if prim.kind == "box":
            t = _ray_box(o_l, d_l, prim.dims)
        elif prim.kind == "sphere":
            t = _ray_sphere(o_l, d_l, prim.dims[0])
        else:
            t = _ray_cylinder(o_l, d_l, prim.dims[0], prim.dims[1])
        t_best = np.minimum(t_best, t)
    if scene.table_z is not None:
        t_best = np.minimum(t_best, scene.table_z)

    raw = np.zeros(dirs.shape[0], dtype=np.uint16)
    hit = np.isfinite(t_best)
    q = np.rint(t_best[hit] / intr.depth_scale)
    raw[hit] = np.clip(q, 0, 65535).astype(np.uint16)
    return DepthImage(raw.reshape(intr.height, intr.width))


# ---------------------------------------------------------------------------
# signed distance (for validating depth/cloud consistency)


def signed_distance(scene: SyntheticScene, points) -> np.ndarray:
    """Distance to the nearest scene surface; positive outside."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    best = np.full(points.shape[0], np.inf)
    for prim in scene.primitives:
        local = (points - prim.translation) @ prim.rotation
        if prim.kind == "box":
            q = np.abs(local) - prim.dims
            outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
            inside = np.minimum(q.max(axis=1), 0.0)
            d = outside + inside
        elif prim.kind == "sphere":
            d = np.linalg.norm(local, axis=1) - prim.dims[0]
        else:
            r, hh = prim.dims
            q = np.stack(
                [np.linalg.norm(local[:, :2], axis=1) - r, np.abs(local[:, 2]) - hh], axis=1
            )
            outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
            inside = np.minimum(q.max(axis=1), 0.0)
            d = outside + inside
        best = np.where(np.abs(d) < np.abs(best), d, best)
    if scene.table_z is not None:
        d = scene.table_z - points[:, 2]
        best = np.where(np.abs(d) < np.abs(best), d, best)
    return best


# ---------------------------------------------------------------------------
# surface sampling


def _sample_primitive_surface(prim: Primitive, n: int, rng):
    """n local-frame points and outward normals on the full surface."""
    if prim.kind == "sphere":
        r = prim.dims[0]
        normals = unit_rows(rng.normal(size=(n, 3)))
        return r * normals, normals
    if prim.kind == "box":
        h = prim.dims
        face_areas = np.array([h[1] * h[2], h[1] * h[2], h[0] * h[2], h[0] * h[2], h[0] * h[1], h[0] * h[1]])
        counts = rng.multinomial(n, face_areas / face_areas.sum())
        pts, nrm = [], []
        for f, cnt in enumerate(counts):
            if cnt == 0:
                continue
            axis, sign = f // 2, 1.0 if f % 2 == 0 else -1.0
            others = [i for i in range(3) if i != axis]
            p = np.empty((cnt, 3))
            p[:, axis] = sign * h[axis]
            for o in others:
                p[:, o] = rng.uniform(-h[o], h[o], size=cnt)
            nvec = np.zeros((cnt, 3))
            nvec[:, axis] = sign
            pts.append(p)
            nrm.append(nvec)
        return np.concatenate(pts), np.concatenate(nrm)
    r, hh = prim.dims
    barrel = 4.0 * np.pi * r * hh
    cap = np.pi * r * r
    counts = rng.multinomial(n, np.array([barrel, cap, cap]) / (barrel + 2 * cap))
    pts, nrm = [], []
    if counts[0]:
        phi = rng.uniform(0.0, 2.0 * np.pi, counts[0])
        z = rng.uniform(-hh, hh, counts[0])
        pts.append(np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1))
        nrm.append(np.stack([np.cos(phi), np.sin(phi), np.zeros_like(phi)], axis=1))
    for sign, cnt in ((1.0, counts[1]), (-1.0, counts[2])):
        if cnt == 0:
            continue
        phi = rng.uniform(0.0, 2.0 * np.pi, cnt)
        rad = r * np.sqrt(rng.uniform(0.0, 1.0, cnt))
        pts.append(np.stack([rad * np.cos(phi), rad * np.sin(phi), np.full(cnt, sign * hh)], axis=1))
        n_c = np.zeros((cnt, 3))
        n_c[:, 2] = sign
        nrm.append(n_c)
    return np.concatenate(pts), np.concatenate(nrm)


def unit_rows(m):
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def sample_surface_cloud(
    scene: SyntheticScene, points_per_m2: float, seed: int, cull_backfaces: bool = True
) -> np.ndarray:
    """Area-weighted surface samples over all primitives, (N, 3) camera frame.

    With culling on, only points whose outward normal faces the camera at the
    origin survive, imitating a single-view reconstruction.
    """
    if points_per_m2 <= 0:
        raise ValueError("density must be positive")
    rng = np.random.default_rng(seed)
    out = []
    for prim in scene.primitives:
        n = int(round(points_per_m2 * surface_area(prim)))
        if n == 0:
            continue
        local, local_n = _sample_primitive_surface(prim, n, rng)
        world = local @ prim.rotation.T + prim.translation
        if cull_backfaces:
            world_n = local_n @ prim.rotation.T
            keep = np.einsum("ni,ni->n", world_n, world) < 0.0
            world = world[keep]
        out.append(world)
    if not out:
        return np.empty((0, 3))
    return np.concatenate(out)


# ---------------------------------------------------------------------------
# oracle grasps


def _boxes_with_margin(pose: GraspPose, gripper: GripperConfig, margin: float):
    occ, grasp = gripper_boxes_world(pose, gripper)
    occ = [type(b)(b.center, b.rotation, b.half + margin) for b in occ]
    return occ, grasp


def _grasp_is_clean(pose, gripper, own_cloud, own_normals, other_cloud, table_z):
    """Screening: fingers clear of everything, grasp patch visibly occupied."""
    occ, grasp = _boxes_with_margin(pose, gripper, _CROSS_MARGIN)
    if table_z is not None:
        for box in [*occ, grasp]:
            _, hi = box.aabb()
            if hi[2] > table_z - _TABLE_MARGIN:
                return False
    if other_cloud.shape[0]:
        for box in occ:
            if np.any(box.contains(other_cloud)):
                return False
    visible = np.einsum("ni,ni->n", own_normals, own_cloud) < 0.0
    patch = grasp.contains(own_cloud[visible])
    return int(patch.sum()) >= _MIN_PATCH_POINTS


def _candidate_pose(prim, gripper, rng):
    """One analytic antipodal grasp proposal for a primitive, or None."""
    w_cap = gripper.w_max - ORACLE_CLEARANCE
    if prim.kind == "box":
        h = prim.dims
        axes = [a for a in range(3) if 2.0 * h[a] <= w_cap]
        if not axes:
            return None
        a_close = axes[rng.integers(len(axes))]
        closing = prim.rotation[:, a_close]
        f_axes = [a for a in range(3) if a != a_close]
        options = []
        for f in f_axes:
            for sign in (1.0, -1.0):
                approach = sign * prim.rotation[:, f]
                if approach[2] > _MIN_APPROACH_Z:
                    options.append((f, approach))
        if not options:
            return None
        f, approach = options[rng.integers(len(options))]
        g = [a for a in range(3) if a not in (a_close, f)][0]
        center = prim.translation - h[f] * approach
        slack = max(h[g] - 0.005, 0.0)
        center = center + rng.uniform(-slack, slack) * prim.rotation[:, g]
        width = 2.0 * h[a_close] + ORACLE_CLEARANCE
    elif prim.kind == "sphere":
        r = prim.dims[0]
        if 2.0 * r > w_cap:
            return None
        for _ in range(16):
            approach = unit(rng.normal(size=3))
            if approach[2] > _MIN_APPROACH_Z:
                break
        else:
            return None
        ref = np.array([1.0, 0.0, 0.0]) if abs(approach[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        tangent = unit(np.cross(approach, ref))
        closing = rotation_about(approach, rng.uniform(0.0, np.pi)) @ tangent
        center = prim.translation - r * approach
        width = 2.0 * r + ORACLE_CLEARANCE
    else:
        r, hh = prim.dims
        if 2.0 * r > w_cap:
            return None
        axis = prim.rotation[:, 2]
        options = []
        for sign in (1.0, -1.0):
            if sign * axis[2] > _MIN_APPROACH_Z:
                options.append(("axial", sign))
        # radial approach perpendicular to both the axis and the closing dir
        options.append(("radial", 1.0))
        kind, sign = options[rng.integers(len(options))]
        if kind == "axial":
            approach = sign * axis
            phi = rng.uniform(0.0, 2.0 * np.pi)
            closing = np.cos(phi) * prim.rotation[:, 0] + np.sin(phi) * prim.rotation[:, 1]
            center = prim.translation - hh * approach
        else:
            phi = rng.uniform(0.0, 2.0 * np.pi)
            closing = np.cos(phi) * prim.rotation[:, 0] + np.sin(phi) * prim.rotation[:, 1]
            approach = np.cross(axis, closing)
            if approach[2] < 0:
                approach = -approach
            if approach[2] <= _MIN_APPROACH_Z:
                return None
            slack = max(hh - gripper.h / 2.0, 0.0)
            center = (
                prim.translation
                + rng.uniform(-slack, slack) * axis
                - r * approach
            )
        width = 2.0 * r + ORACLE_CLEARANCE
    width = min(width, gripper.w_max)

    norm_c = np.linalg.norm(center)
    if norm_c > 0 and approach @ (center / norm_c) <= 0.05:
        return None
    rotation = np.column_stack([closing, np.cross(approach, closing), approach])
    return GraspPose(translation=center, rotation=rotation, width=width)


def oracle_grasps(
    scene: SyntheticScene,
    gripper: GripperConfig | None = None,
    n_per_object: int = 8,
    seed: int = 0,
):
    """Analytic antipodal grasps certified against a dense screening cloud.

    Boxes grasp across parallel face pairs, spheres diametrically, cylinders
    radially across the barrel; only openings with a 1 cm clearance under
    w_max qualify and approaches stay in the camera-facing hemisphere.
    """
    gripper = gripper or GripperConfig()
    if n_per_object < 1:
        raise ValueError("n_per_object must be >= 1")
    rng = np.random.default_rng(seed)

    clouds, normals = [], []
    for i, prim in enumerate(scene.primitives):
        sub = np.random.default_rng([seed, 7919, i])
        n = max(int(round(_INTERNAL_DENSITY * surface_area(prim))), 64)
        local, local_n = _sample_primitive_surface(prim, n, sub)
        clouds.append(local @ prim.rotation.T + prim.translation)
        normals.append(local_n @ prim.rotation.T)

    annotations = []
    for i, prim in enumerate(scene.primitives):
        others = (
            np.concatenate([c for j, c in enumerate(clouds) if j != i])
            if len(clouds) > 1
            else np.empty((0, 3))
        )
        found = 0
        for _ in range(60 * n_per_object):
            if found >= n_per_object:
                break
            pose = _candidate_pose(prim, gripper, rng)
            if pose is None:
                continue
            if not _grasp_is_clean(pose, gripper, clouds[i], normals[i], others, scene.table_z):
                continue
            annotations.append(
                GraspAnnotation(
                    translation=pose.translation,
                    rotation=pose.rotation,
                    width=pose.width,
                    object_id=i,
                )
            )
            found += 1
    return annotations


# ---------------------------------------------------------------------------
# random scene construction and JSON


def random_scene(
    seed: int,
    n_objects: int = 3,
    intr: Intrinsics | None = None,
    table_z: float | None = 0.6,
) -> SyntheticScene:
    """Graspable primitives resting on (or floating at) the table depth."""
    from .camera import DEFAULT_INTRINSICS

    intr = intr or DEFAULT_INTRINSICS
    rng = np.random.default_rng(seed)
    depth = table_z if table_z is not None else 0.6
    half_x = 0.6 * depth * (intr.width / 2.0) / intr.fx
    half_y = 0.6 * depth * (intr.height / 2.0) / intr.fy

    prims = []
    centers = []
    attempts = 0
    while len(prims) < n_objects and attempts < 200 * n_objects:
        attempts += 1
        x = rng.uniform(-half_x, half_x)
        y = rng.uniform(-half_y, half_y)
        if any(np.hypot(x - cx, y - cy) < 0.14 for cx, cy in centers):
            continue
        kind = ("box", "sphere", "cylinder")[int(rng.integers(3))]
        if kind == "box":
            h = np.array(
                [rng.uniform(0.015, 0.035), rng.uniform(0.015, 0.035), rng.uniform(0.02, 0.035)]
            )
            yaw = rng.uniform(0.0, np.pi)
            rot = rotation_about(np.array([0.0, 0.0, 1.0]), yaw)
            prims.append(make_box(h, rot, (x, y, depth - h[2])))
        elif kind == "sphere":
            r = rng.uniform(0.017, 0.032)
            prims.append(make_sphere(r, (x, y, depth - r)))
        else:
            r = rng.uniform(0.015, 0.03)
            hh = rng.uniform(0.02, 0.035)
            prims.append(make_cylinder(r, hh, None, (x, y, depth - hh)))
        centers.append((x, y))
    return SyntheticScene(primitives=prims, table_z=table_z)


def scene_to_dict(scene: SyntheticScene) -> dict:
    prims = []
    for p in scene.primitives:
        entry = {
            "kind": p.kind,
            "quaternion": quat_from_rotation(p.rotation).tolist(),
            "translation": p.translation.tolist(),
        }
        if p.kind == "box":
            entry["half_extents"] = p.dims.tolist()
        elif p.kind == "sphere":
            entry["radius"] = float(p.dims[0])
        else:
            entry["radius"] = float(p.dims[0])
            entry["half_height"] = float(p.dims[1])
        prims.append(entry)
    return {"table_plane": scene.table_z, "primitives": prims}


def scene_from_dict(d: dict) -> SyntheticScene:
    prims = []
    for entry in d["primitives"]:
        rot = rotation_from_quat(entry["quaternion"])
        t = entry["translation"]
        if entry["kind"] == "box":
            prims.append(make_box(entry["half_extents"], rot, t))
        elif entry["kind"] == "sphere":
            prims.append(make_sphere(entry["radius"], t))
        else:
            prims.append(make_cylinder(entry["radius"], entry["half_height"], rot, t))
    return SyntheticScene(primitives=prims, table_z=d.get("table_plane"))


def save_scene(scene: SyntheticScene, path) -> None:
    with open(path, "w") as f:
        json.dump(scene_to_dict(scene), f, indent=2)
        f.write("\n")


def load_scene(path) -> SyntheticScene:
    with open(path) as f:
        return scene_from_dict(json.load(f))
