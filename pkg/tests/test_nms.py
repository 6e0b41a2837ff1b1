import numpy as np
import pytest

from graspdet.fas import GraspPose
from graspdet.geometry import JAW_FLIP, orientation_from, rotation_about, rotation_distance
from graspdet.nms import NMSConfig, gpnms


def _pose(t, angle=0.0, view=(0.0, 0.0, 1.0)):
    rot = orientation_from(np.asarray(view, float), angle)
    return GraspPose(np.asarray(t, float), rot, 0.05)


def _random_set(rng, n=40):
    out = []
    for _ in range(n):
        view = rng.normal(size=3)
        view[2] = abs(view[2]) + 0.01
        view /= np.linalg.norm(view)
        pose = _pose(rng.uniform(-0.05, 0.05, size=3), rng.uniform(0, np.pi), view)
        out.append((pose, float(rng.random())))
    return out


def test_duplicate_keeps_higher_confidence():
    a = (_pose([0, 0, 0.5]), 0.9)
    b = (_pose([0, 0, 0.5]), 0.8)
    kept = gpnms([b, a])
    assert len(kept) == 1 and kept[0][1] == 0.9


def test_distant_grasps_both_survive():
    a = (_pose([0, 0, 0.5]), 0.9)
    b = (_pose([1.0, 0, 0.5]), 0.8)
    assert len(gpnms([a, b])) == 2


def test_chain_suppression():
    """A-B-C spaced 2 cm with a 3 cm radius: B dies to A, C survives."""
    cfg = NMSConfig(t_trans=0.03, t_rot=np.deg2rad(30))
    a = (_pose([0.00, 0, 0.5]), 0.9)
    b = (_pose([0.02, 0, 0.5]), 0.8)
    c = (_pose([0.04, 0, 0.5]), 0.7)
    kept = gpnms([a, b, c], cfg)
    assert [g[1] for g in kept] == [0.9, 0.7]


def test_jaw_flip_counts_as_same_rotation():
    a = (_pose([0, 0, 0.5], angle=0.2), 0.9)
    flipped = GraspPose(a[0].translation.copy(), a[0].rotation @ JAW_FLIP, 0.05)
    kept = gpnms([a, (flipped, 0.8)])
    assert len(kept) == 1


def test_translation_or_rotation_alone_does_not_suppress():
    cfg = NMSConfig(t_trans=0.03, t_rot=np.deg2rad(30))
    near_but_rotated = (_pose([0.01, 0, 0.5], angle=np.pi / 2), 0.8)
    far_but_aligned = (_pose([0.1, 0, 0.5], angle=0.0), 0.7)
    kept = gpnms([(_pose([0, 0, 0.5]), 0.9), near_but_rotated, far_but_aligned], cfg)
    assert len(kept) == 3


def test_properties_random_sets(rng):
    cfg = NMSConfig()
    for _ in range(50):
        grasps = _random_set(rng)
        kept = gpnms(grasps, cfg)
        # subset, top survivor, idempotence
        assert len(kept) <= len(grasps)
        top = max(grasps, key=lambda gc: gc[1])
        assert any(k[1] == top[1] for k in kept)
        again = gpnms(kept, cfg)
        assert len(again) == len(kept)
        # no surviving pair within both radii
        for i in range(len(kept)):
            for j in range(i + 1, len(kept)):
                d_t = np.linalg.norm(kept[i][0].translation - kept[j][0].translation)
                d_r = rotation_distance(kept[i][0].rotation, kept[j][0].rotation)
                assert d_t >= cfg.t_trans or d_r >= cfg.t_rot


def test_empty_input():
    assert gpnms([]) == []


def test_config_validation():
    with pytest.raises(ValueError):
        NMSConfig(t_trans=0.0)
