"""Benchmark metric: collision labeling, force closure, top-k precision.

Predicted grasps (confidence-sorted) are labeled per friction coefficient:
a grasp colliding with the scene cloud is negative everywhere; otherwise two
antipodal contacts are extracted from the between-fingers box and tested
against the friction cone. The score is the mean of per-friction average
precision over k = 1..k_max.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .fas import GripperConfig, check_rules, gripper_boxes_world
from .spatial import SpatialIndex

DEFAULT_FRICTIONS = (0.2, 0.4, 0.6, 0.8, 1.0, 1.2)


@dataclass
class ContactPair:
    """Two contact points with unit inward surface normals."""

    p1: np.ndarray
    p2: np.ndarray
    n1: np.ndarray
    n2: np.ndarray


@dataclass
class APReport:
    ap: float
    ap_per_mu: dict  # friction -> average precision
    precision_at_k: dict  # friction -> list over k = 1..k_max

    def to_dict(self) -> dict:
        return {
            "ap": self.ap,
            "ap_per_mu": {f"{mu:g}": v for mu, v in self.ap_per_mu.items()},
            "precision_at_k": {f"{mu:g}": v for mu, v in self.precision_at_k.items()},
        }


def validate_frictions(mus) -> np.ndarray:
    mus = np.asarray(mus, dtype=float)
    if mus.size == 0 or np.any(mus <= 0) or np.any(mus > 2.0):
        raise ValueError("friction coefficients must lie in (0, 2]")
    if np.any(np.diff(mus) <= 0):
        raise ValueError("friction coefficients must be strictly increasing")
    return mus


def surface_normals(points, k: int = 10):
    """Per-point normals from the k-NN covariance, oriented toward the camera.

    Returns (normals (N, 3), valid (N,)); a point whose neighborhood is
    rank-deficient (collinear) gets valid=False and a zero normal.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if k < 3:
        raise ValueError("k must be >= 3")
    if n < k + 1:
        raise ValueError(f"need at least {k + 1} points, got {n}")
    tree = cKDTree(points)
    _, idx = tree.query(points, k=k + 1)
    nbrs = points[idx]  # (N, k+1, 3)
    centered = nbrs - nbrs.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered)
    w, v = np.linalg.eigh(cov)
    normals = v[:, :, 0]
    valid = w[:, 1] > 1e-9 * np.maximum(w[:, 2], 1e-300)

    # orient toward the camera at the origin; tie-break with the -z hemisphere
    dots = np.einsum("ni,ni->n", normals, points)
    flip = (dots > 0) | ((dots == 0) & (normals[:, 2] > 0))
    normals = np.where(flip[:, None], -normals, normals)
    normals = np.where(valid[:, None], normals, 0.0)
    return normals, valid


def estimate_contacts(pose, cloud, normals, valid=None, gripper: GripperConfig | None = None):
    """Antipodal contact pair inside the between-fingers box, or None.

    Contacts are the extreme points along the closing axis. Their normals
    are flipped inward (toward the opposite contact). None when the box
    holds fewer than two points, the extremes coincide, or a contact normal
    is flagged invalid.
    """
    gripper = gripper or GripperConfig()
    cloud = np.asarray(cloud, dtype=float)
    _, grasp_box = gripper_boxes_world(pose, gripper)
    inside = np.flatnonzero(grasp_box.contains(cloud))
    if inside.size < 2:
        return None
    closing = pose.rotation[:, 0]
    proj = cloud[inside] @ closing
    i1 = inside[int(np.argmin(proj))]
    i2 = inside[int(np.argmax(proj))]
    p1, p2 = cloud[i1], cloud[i2]
    u = p2 - p1
    norm_u = np.linalg.norm(u)
    if norm_u < 1e-12:
        return None
    if valid is not None and not (valid[i1] and valid[i2]):
        return None
    u = u / norm_u
    n1 = normals[i1] if normals[i1] @ u >= 0 else -normals[i1]
    n2 = normals[i2] if normals[i2] @ (-u) >= 0 else -normals[i2]
    return ContactPair(p1=p1, p2=p2, n1=n1, n2=n2)


def force_closure(contacts: ContactPair, mu: float) -> bool:
    """Two-contact antipodal friction-cone test.

    True iff the contact line lies within atan(mu) of both inward normals.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    u = contacts.p2 - contacts.p1
    u = u / np.linalg.norm(u)
    cone = np.arctan(mu)
    a1 = np.arccos(np.clip(u @ contacts.n1, -1.0, 1.0))
    a2 = np.arccos(np.clip(-u @ contacts.n2, -1.0, 1.0))
    return bool(a1 <= cone and a2 <= cone)


def label_grasps(
    grasps,
    cloud,
    index: SpatialIndex,
    gripper: GripperConfig | None = None,
    frictions=DEFAULT_FRICTIONS,
    normals=None,
    normals_valid=None,
    normals_k: int = 10,
):
    """Per-grasp, per-friction success labels, (N, M) bool.

    Grasps must arrive confidence-sorted. A colliding grasp is negative for
    every friction; so is one without a usable contact pair. Labels are
    monotone in the friction coefficient by construction.
    """
    gripper = gripper or GripperConfig()
    mus = validate_frictions(frictions)
    if normals is None:
        normals, normals_valid = surface_normals(cloud, k=normals_k)
    labels = np.zeros((len(grasps), mus.size), dtype=bool)
    for i, (pose, _) in enumerate(grasps):
        if check_rules(index, pose, gripper).collision:
            continue
        contacts = estimate_contacts(pose, cloud, normals, normals_valid, gripper)
        if contacts is None:
            continue
        for m, mu in enumerate(mus):
            labels[i, m] = force_closure(contacts, mu)
    return labels


def compute_ap(labels, frictions=DEFAULT_FRICTIONS, k_max: int = 50) -> APReport:
    """Mean average precision over frictions and k = 1..k_max.

    Precision at k uses the top min(k, N) predictions; with no predictions
    every precision is zero.
    """
    mus = validate_frictions(frictions)
    labels = np.asarray(labels, dtype=bool).reshape(-1, mus.size)
    n = labels.shape[0]
    ks = np.arange(1, k_max + 1)
    precision = {}
    ap_per_mu = {}
    for m, mu in enumerate(mus):
        if n == 0:
            p = np.zeros(k_max)
        else:
            cum = np.cumsum(labels[:, m])
            kk = np.minimum(ks, n)
            p = cum[kk - 1] / kk
        precision[float(mu)] = p.tolist()
        ap_per_mu[float(mu)] = float(p.mean())
    ap = float(np.mean(list(ap_per_mu.values())))
    return APReport(ap=ap, ap_per_mu=ap_per_mu, precision_at_k=precision)
