import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wholebody.camera import WeakPerspectiveCamera, project
from wholebody.errors import DimensionMismatch, MissingPart, TooShort
from wholebody.model import pose_model
from wholebody.parts import (
    PartEstimate,
    check_estimate,
    extract_hand_submodel,
    hand_wrist_2d,
    mirror_estimate,
    mirror_pose,
    part_joints,
    truncate_expression,
)
from wholebody.rotation import MIRROR, rodrigues


@pytest.mark.parametrize("side", ["left", "right"])
def test_submodel_joint_count(toy, side):
    sub = extract_hand_submodel(toy, side)
    assert sub.template.num_joints == len(toy.tree.joints_of(f"{side}_hand")) + 1
    assert sub.joint_ids[0] == toy.joint_index(f"{side}_wrist")
    assert np.allclose(sub.template.skinning_weights.sum(axis=1), 1.0)
    assert np.allclose(sub.template.joint_regressor.sum(axis=1), 1.0)


def test_submodel_rest_vertices(toy):
    sub = extract_hand_submodel(toy, "right_hand")
    mesh = pose_model(sub.template, sub.template.zero_pose())
    assert np.array_equal(sub.template.rest_vertices, toy.rest_vertices[sub.vertex_ids])
    assert np.allclose(mesh.vertices, toy.rest_vertices[sub.vertex_ids], atol=1e-14)


@pytest.mark.parametrize("side", ["left", "right"])
def test_submodel_matches_whole_body(toy, rng, side):
    sub = extract_hand_submodel(toy, side)
    fingers = part_joints(toy, f"{side}_hand")
    for _ in range(5):
        pose = toy.zero_pose()
        pose.shape = rng.normal(size=toy.num_shape)
        for j in fingers:
            pose.set_joint(j, rng.normal(0, 0.5, 3))
        est = PartEstimate(f"{side}_hand", np.zeros(3), [pose.get_joint(j) for j in fingers], pose.shape,
                           WeakPerspectiveCamera(1, [0, 0]))  # fmt: skip
        whole = pose_model(toy, pose)
        part = sub.pose(est)
        assert np.abs(part.vertices - whole.vertices[sub.vertex_ids]).max() < 1e-9
        assert np.abs(part.joints3d[0] - whole.joints3d[sub.joint_ids[0]]).max() < 1e-9


def test_missing_hand(toy):
    with pytest.raises(MissingPart):
        extract_hand_submodel(toy, "face")


def test_mirror_examples():
    p, g = mirror_pose(np.zeros((2, 3)), np.zeros(3))
    assert np.array_equal(p, np.zeros((2, 3))) and np.array_equal(g, np.zeros(3))
    p, _ = mirror_pose(np.array([[0.1, 0.2, 0.3]]), np.zeros(3))
    assert np.array_equal(p, [[0.1, -0.2, -0.3]])


@given(arrays(np.float64, (4, 3), elements=st.floats(-4, 4)), arrays(np.float64, 3, elements=st.floats(-4, 4)))
def test_mirror_involution_preserves_magnitude(pose, orient):
    p, g = mirror_pose(pose, orient)
    assert np.array_equal(np.linalg.norm(p, axis=1), np.linalg.norm(pose, axis=1))
    p2, g2 = mirror_pose(p, g)
    assert np.array_equal(p2, pose) and np.array_equal(g2, orient)
    assert np.allclose(rodrigues(g), MIRROR @ rodrigues(orient) @ MIRROR, atol=1e-12)


def test_mirror_estimate_flips_image(toy, rng):
    left = extract_hand_submodel(toy, "left")
    right = extract_hand_submodel(toy, "right")
    n = len(part_joints(toy, "left_hand"))
    est = PartEstimate("left_hand", rng.normal(0, 0.5, 3), rng.normal(0, 0.4, (n, 3)), np.zeros(toy.num_shape),
                       WeakPerspectiveCamera(200.0, [300.0, 120.0]))  # fmt: skip
    W = 640.0
    flipped = mirror_estimate(est, W)
    assert flipped.part == "right_hand"
    a = project(est.camera, left.pose(est).vertices)
    b = project(flipped.camera, right.pose(flipped).vertices)
    # the toy hands are mirror images, so vertex order matches after sorting by the mirror map
    from wholebody.toy import vertex_mirror_map

    vm = vertex_mirror_map(toy)
    pos = {int(v): i for i, v in enumerate(right.vertex_ids)}
    order = [pos[int(vm[v])] for v in left.vertex_ids]
    assert np.allclose(b[order][:, 0], W - a[:, 0], atol=1e-9)
    assert np.allclose(b[order][:, 1], a[:, 1], atol=1e-9)


def test_truncate_expression():
    e = np.arange(50.0)
    assert np.array_equal(truncate_expression(e), np.arange(10.0))
    assert np.array_equal(truncate_expression(np.arange(10.0)), np.arange(10.0))
    assert np.array_equal(truncate_expression(np.zeros(12)), np.zeros(10))
    with pytest.raises(TooShort):
        truncate_expression(np.zeros(9))


def test_estimate_validation(toy):
    cam = WeakPerspectiveCamera(1, [0, 0])
    with pytest.raises(ValueError):
        PartEstimate("right_hand", np.zeros(3), np.zeros((6, 3)), [], cam, keypoints2d=[[0, 0, 1.5]])
    with pytest.raises(MissingPart):
        PartEstimate("tail", np.zeros(3), np.zeros((6, 3)), [], cam)
    with pytest.raises(DimensionMismatch):
        check_estimate(toy, PartEstimate("right_hand", np.zeros(3), np.zeros((5, 3)), [], cam))


def test_hand_wrist_2d_prefers_keypoint(toy):
    sub = extract_hand_submodel(toy, "right")
    cam = WeakPerspectiveCamera(100.0, [50.0, 60.0])
    est = PartEstimate("right_hand", np.zeros(3), np.zeros((6, 3)), [], cam)
    projected = project(cam, toy.rest_joints()[toy.joint_index("right_wrist")])
    assert np.allclose(hand_wrist_2d(sub, est), projected)
    est.keypoints2d = np.array([[1.0, 2.0, 0.9]])
    assert np.array_equal(hand_wrist_2d(sub, est), [1.0, 2.0])
    est.keypoints2d = np.array([[1.0, 2.0, 0.0]])
    assert np.allclose(hand_wrist_2d(sub, est), projected)
