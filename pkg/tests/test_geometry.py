import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vlnbound.geometry import (
    CalibrationError,
    OrientedBox,
    calibrate_offset,
    distort_dims,
    perturb_box,
    random_rotation,
    self_translation_iou,
    voxel_iou_oracle,
    yaw_rotation,
)

UNIT = OrientedBox(np.zeros(3), np.ones(3), np.eye(3))


def test_box_rejects_bad_inputs():
    with pytest.raises(ValueError, match="positive"):
        OrientedBox(np.zeros(3), [1, 0, 1], np.eye(3))
    with pytest.raises(ValueError, match="orthonormal"):
        OrientedBox(np.zeros(3), np.ones(3), np.diag([1, 2, 1]))
    with pytest.raises(ValueError, match="determinant"):
        OrientedBox(np.zeros(3), np.ones(3), np.diag([1, 1, -1]))
    with pytest.raises(ValueError):
        OrientedBox([0, 0, np.nan], np.ones(3), np.eye(3))


def test_box_is_read_only_and_copies():
    c = np.zeros(3)
    b = OrientedBox(c, np.ones(3), np.eye(3))
    c[0] = 5
    assert b.center[0] == 0
    with pytest.raises(ValueError):
        b.center[0] = 1


def test_box_dict_roundtrip():
    b = OrientedBox([1, 2, 3], [0.5, 1, 2], yaw_rotation(0.3))
    again = OrientedBox.from_dict(b.to_dict())
    assert again.same_as(b)


@pytest.mark.parametrize("delta, expected", [
    ((0, 0, 0), 1.0),
    ((0.5, 0, 0), 1 / 3),
    ((1.0, 0, 0), 0.0),
    ((0.2, 0.2, 0.2), 0.8 ** 3 / (2 - 0.8 ** 3)),
])
def test_iou_unit_cube(delta, expected):
    assert self_translation_iou(UNIT, delta) == pytest.approx(expected, abs=1e-12)


def test_iou_rotated_frame_invariance():
    rot = yaw_rotation(math.pi / 4)
    b = OrientedBox(np.zeros(3), np.ones(3), rot)
    assert self_translation_iou(b, 0.5 * rot[:, 0]) == pytest.approx(1 / 3, abs=1e-12)


def test_iou_against_voxel_oracle():
    rng = np.random.default_rng(11)
    for _ in range(8):
        b = OrientedBox(rng.normal(size=3), rng.uniform(0.5, 2.0, 3), random_rotation(rng))
        delta = rng.uniform(-0.4, 0.4, 3)
        ref = voxel_iou_oracle(b, b.translated(delta), resolution=100)
        assert self_translation_iou(b, delta) == pytest.approx(ref, abs=3e-2)


def test_voxel_oracle_cases():
    assert voxel_iou_oracle(UNIT, UNIT, 64) == pytest.approx(1.0, abs=1 / 64)
    assert voxel_iou_oracle(UNIT, UNIT.translated([3, 0, 0]), 64) == 0.0
    assert voxel_iou_oracle(UNIT, UNIT.translated([0.5, 0, 0]), 200) == pytest.approx(1 / 3, abs=2e-2)
    with pytest.raises(ValueError):
        voxel_iou_oracle(UNIT, UNIT, 8)


def test_calibrate_identity_target():
    pert = calibrate_offset(UNIT, 1.0, [1, 1, 1])
    assert np.array_equal(pert.delta, np.zeros(3))


def test_calibrate_hand_inverted():
    target = 0.8 ** 3 / (2 - 0.8 ** 3)
    assert target == pytest.approx(0.344086, abs=1e-6)
    pert = calibrate_offset(UNIT, target, [1, 1, 1])
    assert np.allclose(pert.delta, 0.2, atol=1e-5)
    assert abs(pert.achieved_iou - target) <= 1e-6


def test_calibrate_respects_signs():
    pert = calibrate_offset(UNIT, 0.5, [-1, 1, -1])
    assert np.all(np.sign(pert.delta) == [-1, 1, -1])


@pytest.mark.parametrize("target", [0.0, -0.1, 1.2, math.nan])
def test_calibrate_rejects_bad_targets(target):
    with pytest.raises(ValueError):
        calibrate_offset(UNIT, target, [1, 1, 1])


def test_calibrate_iteration_cap():
    with pytest.raises(CalibrationError):
        calibrate_offset(UNIT, 0.3, [1, 1, 1], tol=1e-30, max_iter=5)


@settings(max_examples=60, deadline=None)
@given(
    dims=st.lists(st.floats(0.05, 5.0), min_size=3, max_size=3),
    target=st.floats(0.05, 0.95),
    seed=st.integers(0, 2**32 - 1),
)
def test_calibration_property(dims, target, seed):
    rng = np.random.default_rng(seed)
    b = OrientedBox(rng.normal(size=3), dims, random_rotation(rng))
    pert = calibrate_offset(b, target, rng.choice([-1.0, 1.0], 3))
    assert abs(self_translation_iou(b, pert.delta) - target) <= 1e-6


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.floats(0, 1))
def test_iou_symmetry_and_range(delta, scale):
    d = np.array(delta)
    iou = self_translation_iou(UNIT, d)
    assert 0.0 <= iou <= 1.0
    assert self_translation_iou(UNIT, -d) == pytest.approx(iou)
    assert self_translation_iou(UNIT, scale * d) >= iou - 1e-12


def test_perturb_box_cases():
    rng = np.random.default_rng(0)
    assert perturb_box(UNIT, 1.0, rng) is UNIT
    out = perturb_box(UNIT, 0.05, np.random.default_rng(3))
    assert np.array_equal(out.size, np.ones(3))
    assert np.array_equal(out.rotation, np.eye(3))
    assert self_translation_iou(UNIT, out.center - UNIT.center) == pytest.approx(0.05, abs=1e-6)
    again = perturb_box(UNIT, 0.05, np.random.default_rng(3))
    assert again.same_as(out)


DOOR = OrientedBox([0, 0, 1], [1.0, 0.1, 2.0], np.eye(3))


def test_distort_dims():
    rng = np.random.default_rng(0)
    assert distort_dims(DOOR, "swap_min_mid", rng, 0.0) is DOOR
    swapped = distort_dims(DOOR, "swap_min_mid", rng, 1.0)
    assert swapped.size.tolist() == [0.1, 1.0, 2.0]
    equal = distort_dims(DOOR, "equalize_min_mid", rng, 1.0)
    assert equal.size.tolist() == pytest.approx([0.55, 0.55, 2.0])
    assert np.array_equal(swapped.center, DOOR.center)
    with pytest.raises(ValueError):
        distort_dims(DOOR, "shrink", rng, 1.0)
    with pytest.raises(ValueError):
        distort_dims(DOOR, "swap_min_mid", rng, 1.5)


def test_distort_tie_uses_lowest_axes():
    b = OrientedBox(np.zeros(3), [1.0, 1.0, 1.0], np.eye(3))
    out = distort_dims(b, "swap_min_mid", np.random.default_rng(0), 1.0)
    assert out.size.tolist() == [1.0, 1.0, 1.0]


def test_random_rotation_is_proper():
    rng = np.random.default_rng(5)
    for _ in range(20):
        r = random_rotation(rng)
        assert np.allclose(r.T @ r, np.eye(3), atol=1e-12)
        assert np.linalg.det(r) == pytest.approx(1.0)
