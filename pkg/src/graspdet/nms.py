"""Grasp-pose non-maximum suppression.

Greedy pass over confidence-sorted grasps: a grasp is suppressed when an
already-accepted grasp lies within BOTH the translation radius and the
rotation radius. The rotation distance treats the 180-degree jaw flip as
identity, so physically identical grasps suppress each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import JAW_FLIP


@dataclass(frozen=True)
class NMSConfig:
    t_trans: float = 0.03  # meters
    t_rot: float = np.deg2rad(30.0)  # radians

    def __post_init__(self):
        if self.t_trans <= 0 or self.t_rot <= 0:
            raise ValueError("NMS thresholds must be positive")


def _pairwise_rot_dist(rot, kept_rots):
    """Jaw-symmetric geodesic distance from one rotation to a stack."""
    rel = np.einsum("ki,nkj->nij", rot, kept_rots)  # rot.T @ kept
    tr = np.clip((np.einsum("nii->n", rel) - 1.0) / 2.0, -1.0, 1.0)
    rel_f = rel @ JAW_FLIP
    tr_f = np.clip((np.einsum("nii->n", rel_f) - 1.0) / 2.0, -1.0, 1.0)
    return np.minimum(np.arccos(tr), np.arccos(tr_f))


def gpnms(grasps, cfg: NMSConfig | None = None):
    """Filter [(GraspPose, confidence)] down to local maxima.

    Output keeps acceptance order (confidence descending, stable for ties).
    """
    cfg = cfg or NMSConfig()
    if not grasps:
        return []
    conf = np.array([c for _, c in grasps])
    order = np.argsort(-conf, kind="stable")

    kept = []
    kept_t = np.empty((0, 3))
    kept_r = np.empty((0, 3, 3))
    for i in order:
        pose = grasps[i][0]
        if kept:
            d_t = np.linalg.norm(kept_t - pose.translation, axis=1)
            near = d_t < cfg.t_trans
            if np.any(near):
                d_r = _pairwise_rot_dist(pose.rotation, kept_r[near])
                if np.any(d_r < cfg.t_rot):
                    continue
        kept.append(i)
        kept_t = np.vstack([kept_t, pose.translation[None, :]])
        kept_r = np.vstack([kept_r, pose.rotation[None, :, :]])
    return [grasps[i] for i in kept]
