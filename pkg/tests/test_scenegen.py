import numpy as np
import pytest

from graspdet.camera import Intrinsics, backproject
from graspdet.fas import FASConfig, GripperConfig, check_rules, default_cell_size
from graspdet.scenegen import (
    SyntheticScene,
    make_box,
    make_cylinder,
    make_sphere,
    oracle_grasps,
    random_scene,
    render_depth,
    sample_surface_cloud,
    scene_from_dict,
    scene_to_dict,
    signed_distance,
    surface_area,
)
from graspdet.spatial import build_index


def test_render_empty_scene_all_zero(small_intr):
    depth = render_depth(SyntheticScene([], table_z=None), small_intr)
    assert not depth.data.any()


def test_render_sphere_principal_ray(small_intr):
    scene = SyntheticScene([make_sphere(1.0, (0.0, 0.0, 2.0))], table_z=None)
    depth = render_depth(scene, small_intr)
    assert depth.data[48, 64] == 10000  # 1.0 m at 1e-4 m per unit


def test_render_nearest_hit_wins(small_intr):
    scene = SyntheticScene(
        [
            make_sphere(0.05, (0.0, 0.0, 0.8)),
            make_box([0.05, 0.05, 0.01], None, (0.0, 0.0, 0.5)),
        ],
        table_z=None,
    )
    depth = render_depth(scene, small_intr)
    assert depth.data[48, 64] == 4900  # box front face at 0.49 m


def test_render_table_fills_frame(small_intr):
    depth = render_depth(SyntheticScene([], table_z=0.7), small_intr)
    assert np.all(depth.data == 7000)


def test_depth_cloud_consistency(small_intr):
    scene = random_scene(21, 3, small_intr, table_z=0.6)
    depth = render_depth(scene, small_intr)
    cloud = backproject(depth, small_intr)
    d = signed_distance(scene, cloud)
    stretch = np.sqrt(1 + (64 / 200) ** 2 + (48 / 200) ** 2)
    assert np.abs(d).max() < 0.5 * small_intr.depth_scale * stretch + 1e-4


def test_sample_sphere_radius_exact():
    scene = SyntheticScene([make_sphere(0.05, (0.0, 0.0, 0.6))])
    pts = sample_surface_cloud(scene, 1e5, seed=1)
    r = np.linalg.norm(pts - [0, 0, 0.6], axis=1)
    assert np.abs(r - 0.05).max() < 1e-9


def test_sample_deterministic():
    scene = SyntheticScene([make_sphere(0.05, (0.0, 0.0, 0.6))])
    a = sample_surface_cloud(scene, 1e5, seed=9)
    b = sample_surface_cloud(scene, 1e5, seed=9)
    assert np.array_equal(a, b)


def test_sample_sphere_visible_count_within_3_sigma():
    r, c = 0.05, 0.6
    scene = SyntheticScene([make_sphere(r, (0.0, 0.0, c))])
    density = 2e5
    pts = sample_surface_cloud(scene, density, seed=3)
    n_total = round(density * 4 * np.pi * r * r)
    p_vis = (1.0 - r / c) / 2.0  # spherical cap below the horizon from the origin
    sigma = np.sqrt(n_total * p_vis * (1 - p_vis))
    assert abs(len(pts) - n_total * p_vis) < 3 * sigma


def test_sample_box_visible_faces_only():
    h = np.array([0.02, 0.03, 0.04])
    scene = SyntheticScene([make_box(h, None, (0.1, 0.0, 0.6))])
    density = 2e5
    pts = sample_surface_cloud(scene, density, seed=5)
    # visible: top face (toward camera) and the -x face; y faces graze, +x/+z behind
    area_total = surface_area(scene.primitives[0])
    a_top = 4 * h[0] * h[1]
    a_minus_x = 4 * h[1] * h[2]
    n_total = round(density * area_total)
    p_vis = (a_top + a_minus_x) / area_total
    sigma = np.sqrt(n_total * p_vis * (1 - p_vis))
    assert abs(len(pts) - n_total * p_vis) < 3 * sigma
    assert np.all(pts[:, 2] <= 0.6 - h[2] + 1e-12) | np.any(pts[:, 0] <= 0.1 - h[0] + 1e-12)


def test_oracle_box_width_from_separation(gripper):
    scene = SyntheticScene([make_box([0.02, 0.05, 0.05], None, (0.0, 0.0, 0.6))])
    anns = oracle_grasps(scene, gripper, n_per_object=6, seed=2)
    assert anns
    assert all(a.width == pytest.approx(0.05) for a in anns)  # 0.04 separation + 1 cm


def test_oracle_large_sphere_ungraspable(gripper):
    scene = SyntheticScene([make_sphere(0.06, (0.0, 0.0, 0.6))])
    assert oracle_grasps(scene, gripper, n_per_object=4, seed=2) == []


def test_oracle_approaches_face_camera(gripper):
    scene = random_scene(17, 4, None, table_z=0.6)
    anns = oracle_grasps(scene, gripper, n_per_object=6, seed=17)
    assert anns
    for a in anns:
        assert a.rotation[2, 2] > 0.1  # approach axis points into the scene
        assert 0 < a.width <= gripper.w_max


def test_oracle_grasps_pass_rules_on_dense_cloud(gripper, fas_cfg):
    scene = random_scene(31, 3, None, table_z=0.6)
    anns = oracle_grasps(scene, gripper, n_per_object=5, seed=31)
    assert anns
    cloud = sample_surface_cloud(scene, 1e6, seed=99)
    index = build_index(cloud, default_cell_size(gripper, fas_cfg))
    from graspdet.fas import GraspPose

    for a in anns:
        rc = check_rules(index, GraspPose(a.translation, a.rotation, a.width), gripper)
        assert rc.feasible, f"oracle grasp infeasible on object {a.object_id}"


def test_oracle_deterministic(gripper):
    scene = random_scene(8, 3, None, table_z=0.6)
    a = oracle_grasps(scene, gripper, 4, seed=8)
    b = oracle_grasps(scene, gripper, 4, seed=8)
    assert len(a) == len(b)
    for x, y in zip(a, b):
        assert np.array_equal(x.translation, y.translation)
        assert np.array_equal(x.rotation, y.rotation)


def test_random_scene_objects_above_table():
    scene = random_scene(4, 5, None, table_z=0.6)
    assert len(scene.primitives) == 5
    for p in scene.primitives:
        lo = signed_distance(SyntheticScene([p]), np.array([[0.0, 0.0, 0.0]]))
        assert lo[0] > 0  # camera outside every object
        # bounding extent stays above the plane
        reach = float(np.max(p.dims)) * np.sqrt(3)
        assert p.translation[2] - 1e-9 <= 0.6
        assert p.translation[2] + reach >= 0.6 - 1e-6


def test_scene_json_round_trip():
    scene = random_scene(13, 4, None, table_z=0.55)
    back = scene_from_dict(scene_to_dict(scene))
    assert back.table_z == scene.table_z
    assert len(back.primitives) == len(scene.primitives)
    for p, q in zip(scene.primitives, back.primitives):
        assert p.kind == q.kind
        assert np.allclose(p.dims, q.dims, atol=0)
        assert np.allclose(p.translation, q.translation, atol=0)
        assert np.allclose(p.rotation, q.rotation, atol=1e-9)


def test_cylinder_render_and_sample():
    scene = SyntheticScene([make_cylinder(0.03, 0.04, None, (0.0, 0.0, 0.5))])
    intr = Intrinsics(fx=200, fy=200, cx=64, cy=48, width=128, height=96, depth_scale=1e-4)
    depth = render_depth(scene, intr)
    assert depth.data[48, 64] == 4600  # top cap at 0.5 - 0.04
    pts = sample_surface_cloud(scene, 2e5, seed=7)
    local = pts - [0, 0, 0.5]
    on_barrel = np.abs(np.hypot(local[:, 0], local[:, 1]) - 0.03) < 1e-9
    on_caps = np.abs(np.abs(local[:, 2]) - 0.04) < 1e-9
    assert np.all(on_barrel | on_caps)
