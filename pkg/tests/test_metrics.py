import numpy as np
import pytest

from oracles import average_precision_reference

from graspdet.fas import FASConfig, GraspPose, GripperConfig, default_cell_size
from graspdet.geometry import orientation_from, rotation_about
from graspdet.metrics import (
    DEFAULT_FRICTIONS,
    ContactPair,
    compute_ap,
    estimate_contacts,
    force_closure,
    label_grasps,
    surface_normals,
)
from graspdet.scenegen import SyntheticScene, make_box, sample_surface_cloud
from graspdet.spatial import build_index


def _plane_cloud(rng, n=400, z=1.0):
    xy = rng.uniform(-0.2, 0.2, size=(n, 2))
    return np.column_stack([xy, np.full(n, z)])


# ---------------------------------------------------------------------------
# normals


def test_normals_on_plane(rng):
    pts = _plane_cloud(rng)
    normals, valid = surface_normals(pts, k=8)
    assert valid.all()
    assert np.allclose(normals, [0.0, 0.0, -1.0], atol=1e-6)


def test_normals_on_sphere(rng):
    center = np.array([0.0, 0.0, 0.8])
    dirs = rng.normal(size=(4000, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    pts = center + 0.1 * dirs
    normals, valid = surface_normals(pts, k=10)
    radial = (pts - center) / 0.1
    cos = np.abs(np.einsum("ni,ni->n", normals[valid], radial[valid]))
    assert np.degrees(np.arccos(np.clip(cos, -1, 1))).max() < 5.0


def test_normals_collinear_flagged_invalid(rng):
    line = np.column_stack([np.linspace(0, 0.1, 12), np.zeros(12), np.full(12, 2.0)])
    plane = _plane_cloud(rng, 100, z=1.0)
    normals, valid = surface_normals(np.vstack([line, plane]), k=5)
    assert not valid[:12].any()
    assert valid[12:].all()


def test_normals_input_validation(rng):
    with pytest.raises(ValueError):
        surface_normals(_plane_cloud(rng, 5), k=10)
    with pytest.raises(ValueError):
        surface_normals(_plane_cloud(rng, 50), k=2)


# ---------------------------------------------------------------------------
# contacts


def _side_grasp(translation, width):
    rot = orientation_from(np.array([0.0, 0.0, 1.0]), 0.0)  # closing along +x
    return GraspPose(np.asarray(translation, float), rot, width)


def test_contacts_two_opposite_points():
    cloud = np.array([[-0.02, 0.0, 0.5], [0.02, 0.0, 0.5], [0.0, 0.0, 0.8]])
    normals = np.array([[1.0, 0, 0], [-1.0, 0, 0], [0, 0, -1.0]])
    pose = _side_grasp([0, 0, 0.5], 0.05)
    contacts = estimate_contacts(pose, cloud, normals, np.ones(3, bool))
    assert contacts is not None
    assert np.allclose(contacts.p1, [-0.02, 0, 0.5])
    assert np.allclose(contacts.p2, [0.02, 0, 0.5])
    # inward orientation points each normal toward the other contact
    assert contacts.n1 @ (contacts.p2 - contacts.p1) > 0
    assert contacts.n2 @ (contacts.p1 - contacts.p2) > 0


def test_contacts_absent_for_empty_box():
    cloud = np.array([[1.0, 1.0, 1.0], [1.1, 1.0, 1.0]])
    normals = np.tile([0.0, 0.0, -1.0], (2, 1))
    pose = _side_grasp([0, 0, 0.5], 0.05)
    assert estimate_contacts(pose, cloud, normals) is None


def test_contacts_on_cube_faces(gripper, rng):
    cube = SyntheticScene([make_box([0.02, 0.02, 0.02], None, (0.0, 0.0, 0.5))])
    cloud = sample_surface_cloud(cube, 5e5, seed=2, cull_backfaces=False)
    normals, valid = surface_normals(cloud, k=10)
    pose = _side_grasp([0.0, 0.0, 0.5], 0.05)
    contacts = estimate_contacts(pose, cloud, normals, valid, gripper)
    assert contacts is not None
    assert abs(abs(contacts.p1[0]) - 0.02) < 1e-6
    assert abs(abs(contacts.p2[0]) - 0.02) < 1e-6


# ---------------------------------------------------------------------------
# force closure


def _pair(angle_deg):
    """Contacts 4 cm apart with normals angle_deg off the contact line."""
    p1 = np.array([-0.02, 0.0, 0.5])
    p2 = np.array([0.02, 0.0, 0.5])
    tilt = rotation_about(np.array([0.0, 0.0, 1.0]), np.deg2rad(angle_deg))
    n1 = tilt @ np.array([1.0, 0.0, 0.0])
    n2 = tilt @ np.array([-1.0, 0.0, 0.0])
    return ContactPair(p1=p1, p2=p2, n1=n1, n2=n2)


def test_force_closure_perfect_contacts():
    assert force_closure(_pair(0.0), 0.05)
    assert force_closure(_pair(0.0), 1.2)


def test_force_closure_cone_boundary():
    pair = _pair(30.0)
    assert not force_closure(pair, 0.4)  # atan(0.4) = 21.8 deg < 30
    assert force_closure(pair, 0.8)  # atan(0.8) = 38.7 deg > 30
    assert not force_closure(pair, 0.2)
    assert force_closure(pair, 0.6)  # atan(0.6) = 31.0 deg


def test_force_closure_symmetric_under_swap(rng):
    for _ in range(50):
        pair = _pair(rng.uniform(0, 80))
        mu = rng.uniform(0.1, 1.2)
        swapped = ContactPair(p1=pair.p2, p2=pair.p1, n1=pair.n2, n2=pair.n1)
        assert force_closure(pair, mu) == force_closure(swapped, mu)


def test_force_closure_rejects_bad_mu():
    with pytest.raises(ValueError):
        force_closure(_pair(0.0), 0.0)


# ---------------------------------------------------------------------------
# labels


def test_labels_cube_grasp_positive_and_monotone(gripper, fas_cfg):
    cube = SyntheticScene([make_box([0.02, 0.02, 0.02], None, (0.0, 0.0, 0.5))])
    cloud = sample_surface_cloud(cube, 5e5, seed=4, cull_backfaces=False)
    index = build_index(cloud, default_cell_size(gripper, fas_cfg))
    good = (_side_grasp([0.0, 0.0, 0.5], 0.05), 0.9)
    colliding = (_side_grasp([0.0, 0.0, 0.5], 0.03), 0.8)  # fingers inside the cube walls
    labels = label_grasps([good, colliding], cloud, index, gripper)
    assert labels[0].all()  # flat faces give on-axis contacts
    assert not labels[1].any()
    # monotone in mu for every grasp
    assert np.all(np.diff(labels.astype(int), axis=1) >= 0)


def test_planar_contact_sound_at_low_friction(gripper, rng):
    """Parallel faces grasped perpendicular: contacts align with the closing
    line up to sampling noise, so even a 0.05 friction cone accepts them."""
    n = 400
    face = np.column_stack(
        [
            np.empty(n),
            rng.uniform(-0.015, 0.015, n),
            rng.uniform(0.48, 0.52, n),
        ]
    )
    left = face.copy()
    left[:, 0] = -0.02
    right = face.copy()
    right[:, 0] = 0.02
    cloud = np.vstack([left, right])
    normals, valid = surface_normals(cloud, k=8)
    pose = _side_grasp([0.0, 0.0, 0.5], 0.05)
    contacts = estimate_contacts(pose, cloud, normals, valid, gripper)
    assert contacts is not None
    for mu in (0.05, 0.2, 0.6, 1.2):
        assert force_closure(contacts, mu)


def test_labels_empty_grasp_negative(gripper, fas_cfg, rng):
    cloud = _plane_cloud(rng, 500, z=0.5)
    index = build_index(cloud, 0.05)
    floating = (_side_grasp([2.0, 2.0, 1.5], 0.05), 0.9)
    labels = label_grasps([floating], cloud, index, gripper)
    assert not labels.any()


# ---------------------------------------------------------------------------
# average precision


def test_ap_all_positive_and_all_negative():
    ones = np.ones((50, len(DEFAULT_FRICTIONS)), bool)
    assert compute_ap(ones).ap == 1.0
    zeros = np.zeros((50, len(DEFAULT_FRICTIONS)), bool)
    assert compute_ap(zeros).ap == 0.0


def test_ap_two_grasp_example():
    labels = np.array([[True], [False]])
    report = compute_ap(labels, frictions=[0.4], k_max=2)
    assert report.ap == pytest.approx(0.75, abs=1e-15)  # mean of {1, 0.5}


def test_ap_matches_reference(rng):
    for _ in range(200):
        n = int(rng.integers(0, 80))
        labels = rng.random((n, 6)) < rng.random()
        report = compute_ap(labels, DEFAULT_FRICTIONS, k_max=50)
        expect = average_precision_reference(labels.reshape(n, 6), 50)
        got = [report.ap_per_mu[mu] for mu in DEFAULT_FRICTIONS]
        assert np.allclose(got, expect, atol=1e-12)
        assert report.ap == pytest.approx(np.mean(expect), abs=1e-12)


def test_ap_equals_mean_of_per_mu(rng):
    labels = rng.random((30, 6)) < 0.5
    report = compute_ap(labels)
    assert report.ap == pytest.approx(np.mean(list(report.ap_per_mu.values())), abs=0)


def test_ap_no_predictions_zero():
    report = compute_ap(np.zeros((0, 6), bool))
    assert report.ap == 0.0
    assert all(len(v) == 50 for v in report.precision_at_k.values())


def test_ap_report_serialization():
    labels = np.ones((3, 6), bool)
    d = compute_ap(labels).to_dict()
    assert set(d) == {"ap", "ap_per_mu", "precision_at_k"}
    assert d["ap_per_mu"]["0.4"] == 1.0
    assert len(d["precision_at_k"]["0.8"]) == 50


def test_friction_validation():
    with pytest.raises(ValueError):
        compute_ap(np.ones((2, 2), bool), frictions=[0.4, 0.2])
    with pytest.raises(ValueError):
        compute_ap(np.ones((2, 1), bool), frictions=[2.5])
