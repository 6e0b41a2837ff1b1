"""Discretized gripper orientations.

An orientation is factored into an approach direction (a "view" on the unit
upper hemisphere, z >= 0) and an in-plane rotation angle about it. Views are
generated with a Fibonacci lattice, angles on a uniform grid over [0, pi);
the half turn suffices because a parallel-jaw gripper maps onto itself under
a 180 degree in-plane rotation.

Rotations are 3x3 matrices whose columns are the gripper axes in the parent
frame: column 0 the closing axis (fingers travel along it), column 2 the
approach axis (the view), column 1 completing a right-handed frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))

# Half-turn about the approach axis; maps a parallel-jaw grasp onto itself.
JAW_FLIP = np.diag([-1.0, -1.0, 1.0])

_X = np.array([1.0, 0.0, 0.0])
_Y = np.array([0.0, 1.0, 0.0])


def unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / n


def sample_views(v_count: int) -> np.ndarray:
    """Fibonacci lattice on the upper hemisphere, (v_count, 3), all z > 0.

    z_i = (i + 0.5) / V, phi_i = i * pi * (3 - sqrt(5)). Deterministic.
    """
    if v_count < 1:
        raise ValueError(f"v_count must be >= 1, got {v_count}")
    i = np.arange(v_count, dtype=float)
    z = (i + 0.5) / v_count
    r = np.sqrt(1.0 - z * z)
    phi = i * GOLDEN_ANGLE
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def sample_angles(a_count: int) -> np.ndarray:
    """In-plane rotation grid j * pi / A for j = 0..A-1."""
    if a_count < 1:
        raise ValueError(f"a_count must be >= 1, got {a_count}")
    return np.arange(a_count, dtype=float) * (np.pi / a_count)


def rotation_about(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    x, y, z = axis
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def canonical_closing_axis(view) -> np.ndarray:
    """Zero-angle closing axis for a view: x-hat projected off the view.

    Falls back to y-hat when the view is near-parallel to x-hat so the
    construction stays well-conditioned and deterministic.
    """
    view = np.asarray(view, dtype=float)
    ref = _Y if abs(view @ _X) > 0.99 else _X
    return unit(ref - (ref @ view) * view)


def orientation_from(view, angle: float) -> np.ndarray:
    """Rotation matrix with approach column equal to `view`.

    The closing axis is the canonical closing axis rotated by `angle` about
    the view. Any finite angle is accepted; the class tables only use
    [0, pi).
    """
    view = np.asarray(view, dtype=float)
    if abs(np.linalg.norm(view) - 1.0) > 1e-9:
        raise ValueError("view must be unit length")
    closing = rotation_about(view, angle) @ canonical_closing_axis(view)
    return np.column_stack([closing, np.cross(view, closing), view])


def class_index(v_idx: int, a_idx: int, a_count: int) -> int:
    if a_idx < 0 or a_idx >= a_count:
        raise ValueError(f"a_idx {a_idx} out of range for a_count {a_count}")
    if v_idx < 0:
        raise ValueError(f"v_idx must be >= 0, got {v_idx}")
    return v_idx * a_count + a_idx


def class_pair(index: int, a_count: int) -> tuple[int, int]:
    if index < 0:
        raise ValueError(f"class index must be >= 0, got {index}")
    return divmod(index, a_count)


def rotation_angle(r) -> float:
    """Geodesic angle of a rotation matrix, in [0, pi]."""
    return float(np.arccos(np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)))


def rotation_distance(r1, r2, jaw_symmetric: bool = True) -> float:
    """Geodesic distance between rotations, optionally up to the jaw flip."""
    rel = np.asarray(r1).T @ np.asarray(r2)
    d = rotation_angle(rel)
    if jaw_symmetric:
        d = min(d, rotation_angle(rel @ JAW_FLIP))
    return d


def quat_from_rotation(r) -> np.ndarray:
    """Unit quaternion [w, x, y, z] from a rotation matrix."""
    r = np.asarray(r, dtype=float)
    t = np.trace(r)
    if t > 0.0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s]
        )
    else:
        i = int(np.argmax(np.diag(r)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(max(r[i, i] - r[j, j] - r[k, k] + 1.0, 0.0)) * 2.0
        q = np.empty(4)
        q[0] = (r[k, j] - r[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (r[j, i] + r[i, j]) / s
        q[1 + k] = (r[k, i] + r[i, k]) / s
    return q / np.linalg.norm(q)


def rotation_from_quat(q) -> np.ndarray:
    w, x, y, z = unit(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


@dataclass(frozen=True)
class OrientationTable:
    """All V*A class rotations, indexed by v_idx * A + a_idx."""

    views: np.ndarray  # (V, 3) unit vectors, z > 0
    angles: np.ndarray  # (A,) radians in [0, pi)
    rotations: np.ndarray  # (V*A, 3, 3)

    @classmethod
    def build(cls, v_count: int = 60, a_count: int = 6) -> "OrientationTable":
        views = sample_views(v_count)
        angles = sample_angles(a_count)
        rotations = np.empty((v_count * a_count, 3, 3))
        for v in range(v_count):
            for a in range(a_count):
                rotations[v * a_count + a] = orientation_from(views[v], angles[a])
        return cls(views=views, angles=angles, rotations=rotations)

    @property
    def v_count(self) -> int:
        return self.views.shape[0]

    @property
    def a_count(self) -> int:
        return self.angles.shape[0]

    @property
    def n_classes(self) -> int:
        return self.rotations.shape[0]

    def rotation_of(self, v_idx: int, a_idx: int) -> np.ndarray:
        return self.rotations[class_index(v_idx, a_idx, self.a_count)]


def nearest_class(table: OrientationTable, rotation) -> tuple[int, int]:
    """Closest (view, angle) class of a rotation.

    The view maximizes alignment with the approach column; the angle then
    minimizes in-plane distance mod pi after projecting the closing axis
    into the view's tangent plane. Ties resolve to the lower index (argmax /
    argmin take the first hit).
    """
    rotation = np.asarray(rotation, dtype=float)
    approach = rotation[:, 2]
    v_idx = int(np.argmax(table.views @ approach))
    view = table.views[v_idx]

    closing = rotation[:, 0]
    c_proj = closing - (closing @ view) * view
    n = np.linalg.norm(c_proj)
    if n < 1e-12:
        phi = 0.0
    else:
        c_proj = c_proj / n
        c0 = canonical_closing_axis(view)
        phi = np.arctan2(np.cross(c0, c_proj) @ view, c0 @ c_proj)

    # distance mod pi: min_k |phi - angle + k*pi|
    d = np.abs(np.mod(phi - table.angles + np.pi / 2.0, np.pi) - np.pi / 2.0)
    return v_idx, int(np.argmin(d))
