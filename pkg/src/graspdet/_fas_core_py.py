"""Pure-numpy feasibility kernel; fallback twin of the compiled extension.

Both backends must evaluate the same comparisons on the same floats: the
width thresholds are expressed as 2*|x| against precomputed `width` and
`width + 2*t_f` arrays, and the depth bands as z-offset differences. Keep
any change here mirrored in _fas_core.pyx.
"""

from __future__ import annotations

import numpy as np

COMPILED = False

_COORD_LIMIT = 1 << 20


def _pack(ci, cj, ck):
    return ((ci + _COORD_LIMIT) << 42) | ((cj + _COORD_LIMIT) << 21) | (ck + _COORD_LIMIT)


def _gather(points, keys, starts, cell, center, reach, rot, halves):
    """Positions of points in voxels overlapping the box's world AABB.

    Voxels whose center projects beyond a box half-extent plus the cell's
    support radius along that gripper axis cannot hold a passing point and
    are skipped before the key lookup.
    """
    v_lo = np.maximum(np.floor((center - reach) / cell).astype(np.int64), -_COORD_LIMIT)
    v_hi = np.minimum(np.floor((center + reach) / cell).astype(np.int64), _COORD_LIMIT - 1)
    if np.any(v_hi < v_lo) or keys.size == 0:
        return np.empty(0, dtype=np.int64)
    ii, jj, kk = np.meshgrid(
        np.arange(v_lo[0], v_hi[0] + 1),
        np.arange(v_lo[1], v_hi[1] + 1),
        np.arange(v_lo[2], v_hi[2] + 1),
        indexing="ij",
    )
    coords = np.stack([ii.ravel(), jj.ravel(), kk.ravel()], axis=1)
    margins = np.abs(rot).sum(axis=0) * (0.5 * cell) + 1e-9
    proj = ((coords + 0.5) * cell - center) @ rot
    keep = np.all(np.abs(proj) <= halves + margins, axis=1)
    coords = coords[keep]
    if coords.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    cand = _pack(coords[:, 0], coords[:, 1], coords[:, 2])
    pos = np.searchsorted(keys, cand)
    ok = (pos < keys.size) & (keys[np.minimum(pos, keys.size - 1)] == cand)
    if not np.any(ok):
        return np.empty(0, dtype=np.int64)
    return np.concatenate([np.arange(starts[p], starts[p + 1]) for p in pos[ok]])


def feasibility_grid(
    points,
    keys,
    starts,
    cell,
    anchors,
    rotations,
    offsets,
    widths,
    half_h,
    half_l,
    t_f,
    b_d,
    brute=False,
):
    """Rule evaluation for every (candidate, depth offset, width).

    Returns feasible (C, D, W) uint8: 1 iff the gripper volume is point-free
    (no collision) and the between-fingers box holds at least one point.
    """
    anchors = np.asarray(anchors, dtype=float).reshape(-1, 3)
    rotations = np.asarray(rotations, dtype=float).reshape(-1, 3, 3)
    offsets = np.asarray(offsets, dtype=float)
    widths = np.asarray(widths, dtype=float)
    n_c, n_d, n_w = anchors.shape[0], offsets.size, widths.size

    two_tf = 2.0 * t_f
    wtf = widths + two_tf
    base_lo = -half_l - b_d
    neg_half_l = -half_l
    x_reach = 0.5 * widths[-1] + t_f
    lo_loc = np.array([-x_reach, -half_h, offsets[0] - half_l - b_d])
    hi_loc = np.array([x_reach, half_h, offsets[-1] + half_l])
    mid_loc = 0.5 * (lo_loc + hi_loc)
    half_loc = 0.5 * (hi_loc - lo_loc)

    out = np.zeros((n_c, n_d, n_w), dtype=np.uint8)
    for c in range(n_c):
        a = anchors[c]
        rot = rotations[c]
        if brute:
            pts = points
        else:
            center = a + rot @ mid_loc
            reach = np.abs(rot) @ half_loc + 1e-9
            pos = _gather(points, keys, starts, cell, center, reach, rot, half_loc)
            if pos.size == 0:
                continue
            pts = points[pos]

        q = (pts - a) @ rot
        keep = np.abs(q[:, 1]) <= half_h
        if not np.any(keep):
            continue
        q = q[keep]
        two_ax = 2.0 * np.abs(q[:, 0])
        zz = q[:, 2][None, :] - offsets[:, None]  # (D, n)

        grasp_band = (np.abs(zz) <= half_l).astype(float)
        base_band = ((zz >= base_lo) & (zz <= neg_half_l)).astype(float)
        in_grasp = (widths[:, None] >= two_ax[None, :]).astype(float)  # (W, n)
        in_base = (wtf[:, None] >= two_ax[None, :]).astype(float)
        in_finger = (widths[:, None] <= two_ax[None, :]).astype(float) * in_base

        grasp_cnt = grasp_band @ in_grasp.T  # (D, W)
        finger_cnt = grasp_band @ in_finger.T
        base_cnt = base_band @ in_base.T
        out[c] = ((finger_cnt == 0) & (base_cnt == 0) & (grasp_cnt > 0)).astype(np.uint8)
    return out
