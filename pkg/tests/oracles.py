"""Independent brute-force references the production code is checked against.

Everything here is written from the definitions, not from the library
internals: boxes are built explicitly and membership is the plain
|R^T (p - c)| <= half test over the whole cloud.
"""

import numpy as np


def _inside(points, center, rotation, half):
    local = (points - center) @ rotation
    return np.all(np.abs(local) <= half, axis=1)


def gripper_boxes(center, rotation, width, gripper):
    """(occupied boxes, grasping box) as (center, rotation, half) triples."""
    hh, hl = gripper.h / 2.0, gripper.l / 2.0
    boxes = []
    for side in (-1.0, 1.0):
        c = center + rotation @ np.array([side * (width / 2.0 + gripper.t_f / 2.0), 0.0, 0.0])
        boxes.append((c, rotation, np.array([gripper.t_f / 2.0, hh, hl])))
    c = center + rotation @ np.array([0.0, 0.0, -(hl + gripper.b_d / 2.0)])
    boxes.append((c, rotation, np.array([width / 2.0 + gripper.t_f, hh, gripper.b_d / 2.0])))
    grasping = (center, rotation, np.array([width / 2.0, hh, hl]))
    return boxes, grasping


def check_rules_brute(points, center, rotation, width, gripper):
    """(collision, empty) by scanning every point against every box."""
    occupied, grasping = gripper_boxes(center, rotation, width, gripper)
    collision = any(bool(_inside(points, *box).any()) for box in occupied)
    empty = not bool(_inside(points, *grasping).any())
    return collision, empty


def feasibility_grid_brute(points, anchor, rotation, offsets, widths, gripper):
    """(D, W) bool table of rule outcomes, one exhaustive scan per pair."""
    n_d, n_w = len(offsets), len(widths)
    out = np.zeros((n_d, n_w), dtype=bool)
    approach = rotation[:, 2]
    for d, off in enumerate(offsets):
        center = anchor + off * approach
        for w, width in enumerate(widths):
            collision, empty = check_rules_brute(points, center, rotation, width, gripper)
            out[d, w] = not collision and not empty
    return out


def feasibility_grid_brute_fast(points, anchor, rotation, offsets, widths, gripper):
    """Same table as feasibility_grid_brute, vectorized over points.

    Still independent of the production kernels: per (offset, width) the
    five boxes are tested from their definitions, just with one shared
    frame transform.
    """
    local = (points - anchor) @ rotation
    x, y, z = np.abs(local[:, 0]), np.abs(local[:, 1]), local[:, 2]
    hh, hl = gripper.h / 2.0, gripper.l / 2.0
    in_y = y <= hh
    n_d, n_w = len(offsets), len(widths)
    out = np.zeros((n_d, n_w), dtype=bool)
    for d, off in enumerate(offsets):
        zz = z - off
        finger_band = in_y & (np.abs(zz) <= hl)
        base_band = in_y & (zz >= -hl - gripper.b_d) & (zz <= -hl)
        for w, width in enumerate(widths):
            grasp_hit = finger_band & (x <= width / 2.0)
            finger_hit = finger_band & (x >= width / 2.0) & (x <= width / 2.0 + gripper.t_f)
            base_hit = base_band & (x <= width / 2.0 + gripper.t_f)
            collision = bool(finger_hit.any() or base_hit.any())
            out[d, w] = (not collision) and bool(grasp_hit.any())
    return out


def select_best_reference(feasible, offsets, widths):
    """Lexicographic optimum: largest offset, then smallest width."""
    best = None
    for d in range(len(offsets)):
        for w in range(len(widths)):
            if feasible[d, w]:
                key = (offsets[d], -widths[w])
                if best is None or key > best[0]:
                    best = (key, (d, w))
    return None if best is None else best[1]


def average_precision_reference(labels, k_max):
    """Per-friction AP by explicit counting, lists over k = 1..k_max."""
    labels = np.asarray(labels, dtype=bool)
    n, m = labels.shape if labels.ndim == 2 else (0, 0)
    per_mu = []
    for col in range(m):
        precisions = []
        for k in range(1, k_max + 1):
            kk = min(k, n)
            if kk == 0:
                precisions.append(0.0)
            else:
                hits = sum(1 for i in range(kk) if labels[i, col])
                precisions.append(hits / kk)
        per_mu.append(sum(precisions) / k_max)
    return per_mu
