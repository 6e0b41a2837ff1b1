import numpy as np
import pytest

from graspdet.avh import (
    AngleViewHeatmap,
    GraspAnnotation,
    extract_candidates,
    ground_truth_avh,
    random_avh,
    read_avh,
    write_avh,
)
from graspdet.camera import GridMap
from graspdet.errors import FormatError
from graspdet.geometry import (
    class_pair,
    nearest_class,
    orientation_from,
    rotation_distance,
)


def _grid(intr):
    return GridMap.for_image(intr.width, intr.height, 4)


def _random_annotation(rng, intr, table):
    u = rng.uniform(0, intr.width)
    v = rng.uniform(0, intr.height)
    z = rng.uniform(0.3, 1.0)
    t = np.array([(u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z])
    view = rng.normal(size=3)
    view[2] = abs(view[2]) + 0.05
    view /= np.linalg.norm(view)
    rot = orientation_from(view, rng.uniform(0, 2 * np.pi))
    return GraspAnnotation(translation=t, rotation=rot, width=rng.uniform(0.02, 0.1))


def test_empty_annotations_all_zero(small_intr, small_table):
    avh = ground_truth_avh([], small_intr, small_table, _grid(small_intr))
    assert not avh.data.any()


def test_single_annotation_single_positive_bin(small_intr, small_table, rng):
    ann = _random_annotation(rng, small_intr, small_table)
    avh = ground_truth_avh([ann], small_intr, small_table, _grid(small_intr))
    assert int((avh.data == 1.0).sum()) == 1
    assert int((avh.data != 0.0).sum()) == 1


def test_behind_camera_skipped(small_intr, small_table, rng):
    ann = _random_annotation(rng, small_intr, small_table)
    ann.translation = np.array([0.0, 0.0, -0.5])
    avh = ground_truth_avh([ann], small_intr, small_table, _grid(small_intr))
    assert not avh.data.any()


def test_out_of_frame_skipped(small_intr, small_table, rng):
    ann = _random_annotation(rng, small_intr, small_table)
    ann.translation = np.array([10.0, 0.0, 0.5])
    avh = ground_truth_avh([ann], small_intr, small_table, _grid(small_intr))
    assert not avh.data.any()


def test_gt_idempotent_and_order_independent(small_intr, small_table, rng):
    anns = [_random_annotation(rng, small_intr, small_table) for _ in range(30)]
    grid = _grid(small_intr)
    a = ground_truth_avh(anns, small_intr, small_table, grid)
    b = ground_truth_avh(anns + anns, small_intr, small_table, grid)
    c = ground_truth_avh(anns[::-1], small_intr, small_table, grid)
    assert np.array_equal(a.data, b.data)
    assert np.array_equal(a.data, c.data)


def test_gt_bin_reconstructs_annotation(small_intr, full_table, rng):
    """The positive bin must decode back to the annotation's neighborhood."""
    grid = _grid(small_intr)
    for _ in range(50):
        ann = _random_annotation(rng, small_intr, full_table)
        avh = ground_truth_avh([ann], small_intr, full_table, grid)
        cls, gi, gj = np.argwhere(avh.data == 1.0)[0]
        v_idx, a_idx = class_pair(int(cls), full_table.a_count)
        rec = orientation_from(full_table.views[v_idx], full_table.angles[a_idx])
        assert (v_idx, a_idx) == nearest_class(full_table, ann.rotation)
        assert rotation_distance(rec, ann.rotation) < 0.55  # covering radius margin
        u = ann.translation[0] * small_intr.fx / ann.translation[2] + small_intr.cx
        v = ann.translation[1] * small_intr.fy / ann.translation[2] + small_intr.cy
        cu, cv = grid.cell_center(int(gi), int(gj))
        assert abs(cu - u) < grid.stride and abs(cv - v) < grid.stride


def test_extract_empty_below_threshold():
    avh = AngleViewHeatmap.zeros(2, 2, 4, 4)
    assert extract_candidates(avh, 0.5, 10) == []


def test_extract_sort_and_truncate():
    avh = AngleViewHeatmap.zeros(1, 2, 2, 2)
    avh.data[0, 0, 0] = 0.9
    avh.data[1, 1, 1] = 0.8
    avh.data[0, 1, 0] = 0.7
    out = extract_candidates(avh, 0.5, 2)
    assert [c.confidence for c in out] == [pytest.approx(0.9), pytest.approx(0.8)]
    assert (out[0].u, out[0].v, out[0].class_id) == (0, 0, 0)
    assert (out[1].u, out[1].v, out[1].class_id) == (1, 1, 1)


def test_extract_tie_break_lexicographic():
    avh = AngleViewHeatmap(1, 3, np.full((3, 4, 4), 0.7, np.float32))
    out = extract_candidates(avh, 0.5, 5)
    assert [(c.v, c.u, c.class_id) for c in out] == [
        (0, 0, 0), (0, 0, 1), (0, 0, 2), (0, 1, 0), (0, 1, 1)
    ]


def test_extract_respects_grid_pixel_centers(small_intr):
    grid = GridMap.for_image(small_intr.width, small_intr.height, 4)
    avh = AngleViewHeatmap.zeros(1, 1, grid.g_h, grid.g_w)
    avh.data[0, 3, 7] = 1.0
    (c,) = extract_candidates(avh, 0.5, 1, grid)
    assert (c.u, c.v) == (7 * 4 + 2, 3 * 4 + 2)


def test_extract_validates_arguments():
    avh = AngleViewHeatmap.zeros(1, 1, 2, 2)
    with pytest.raises(ValueError):
        extract_candidates(avh, -0.1, 5)
    with pytest.raises(ValueError):
        extract_candidates(avh, 0.5, 0)


def test_random_avh_deterministic_and_bounded():
    a = random_avh(4, 3, 10, 12, seed=9, density=0.25)
    b = random_avh(4, 3, 10, 12, seed=9, density=0.25)
    assert np.array_equal(a.data, b.data)
    assert a.data.min() >= 0.0 and a.data.max() <= 1.0


def test_random_avh_full_density_all_nonzero():
    a = random_avh(2, 2, 6, 6, seed=1, density=1.0)
    assert np.all(a.data > 0)


def test_random_avh_density_binomial_bound():
    avh = random_avh(60, 6, 96, 72, seed=3, density=0.01)
    n = avh.data.size
    nonzero = int((avh.data > 0).sum())
    mean = 0.01 * n
    sigma = np.sqrt(n * 0.01 * 0.99)
    assert abs(nonzero - mean) < 3 * sigma


def test_random_avh_rejects_bad_density():
    with pytest.raises(ValueError):
        random_avh(1, 1, 2, 2, seed=0, density=0.0)


def test_avh_file_round_trip(tmp_path, rng):
    avh = random_avh(3, 2, 5, 7, seed=11, density=0.5)
    path = tmp_path / "t.avh"
    write_avh(avh, path)
    back = read_avh(path)
    assert (back.v_count, back.a_count, back.g_h, back.g_w) == (3, 2, 5, 7)
    assert np.array_equal(back.data, avh.data)
    # a second write is byte-identical
    path2 = tmp_path / "t2.avh"
    write_avh(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_avh_file_size_matches_header(tmp_path):
    avh = AngleViewHeatmap.zeros(60, 6, 72, 96)
    path = tmp_path / "full.avh"
    write_avh(avh, path)
    assert path.stat().st_size == 4 + 16 + 4 * 360 * 72 * 96


def test_avh_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.avh"
    path.write_bytes(b"AVH2" + b"\x00" * 32)
    with pytest.raises(FormatError):
        read_avh(path)


def test_avh_rejects_truncated_payload(tmp_path):
    avh = AngleViewHeatmap.zeros(1, 1, 2, 2)
    path = tmp_path / "short.avh"
    write_avh(avh, path)
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(FormatError):
        read_avh(path)


def test_avh_rejects_huge_dimensions(tmp_path):
    import struct

    path = tmp_path / "huge.avh"
    path.write_bytes(b"AVH1" + struct.pack("<4I", 2**16, 2**16, 2**10, 2**10))
    with pytest.raises(FormatError):
        read_avh(path)
