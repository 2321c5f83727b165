import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wholebody.camera import WeakPerspectiveCamera, project
from wholebody.errors import DegenerateArm
from wholebody.integrate import WholeBodyResult
from wholebody.model import global_rotations, pose_model
from wholebody.parts import PartEstimate, extract_hand_submodel, part_joints
from wholebody.rotation import rodrigues, rodrigues_inverse
from wholebody.toy import sample_pose
from wholebody.wristnet import (
    DIMS,
    ArmPoseEncoding,
    WristNet,
    apply_wristnet,
    decode_arm,
    direction_vector,
    encode_arm,
    forward,
    synthesize_dataset,
    train,
)

from .oracles import mlp_loop

finite = st.floats(-3, 3, allow_nan=False)


@pytest.fixture(scope="module")
def net():
    return WristNet.initialize(seed=3)


@pytest.fixture(scope="module")
def small_data(toy):
    return synthesize_dataset(toy, 6, seed=11)


def test_architecture(net):
    assert net.dims == DIMS
    manual = sum(a * b + b for a, b in zip(DIMS[:-1], DIMS[1:]))
    assert net.num_parameters() == manual == 330758


def test_zero_weights_give_final_bias(net):
    z = net.copy()
    for w in z.weights:
        w[:] = 0.0
    z.biases[-1][:] = np.arange(6.0)
    out = z(np.random.default_rng(0).normal(size=(4, 8)))
    assert np.array_equal(out, np.tile(np.arange(6.0), (4, 1)))


def test_matches_loop_oracle(net, rng):
    x = rng.normal(size=8)
    want = mlp_loop(net.weights, net.biases, x)
    assert np.abs(net(x[None])[0] - want).max() < 1e-12


def test_backprop_matches_finite_differences(rng):
    small = WristNet.initialize(seed=1, dims=(8, 5, 4, 6))
    x, y = rng.normal(size=(3, 8)), rng.normal(size=(3, 6))
    _, gw, gb = small.loss_and_grads(x, y)
    h = 1e-6
    for k, (i, j) in enumerate([(0, 0), (3, 2), (7, 4)]):
        W = small.weights[k % 3]
        i, j = i % W.shape[0], j % W.shape[1]
        W[i, j] += h
        up = np.mean((small(x) - y) ** 2)
        W[i, j] -= 2 * h
        dn = np.mean((small(x) - y) ** 2)
        W[i, j] += h
        assert gw[k % 3][i, j] == pytest.approx((up - dn) / (2 * h), rel=1e-5, abs=1e-9)
    b = small.biases[1]
    b[2] += h
    up = np.mean((small(x) - y) ** 2)
    b[2] -= 2 * h
    dn = np.mean((small(x) - y) ** 2)
    b[2] += h
    assert gb[1][2] == pytest.approx((up - dn) / (2 * h), rel=1e-5, abs=1e-9)


@given(st.lists(finite, min_size=8, max_size=8))
def test_left_is_mirrored_right_bitwise(net, v):
    enc = ArmPoseEncoding(v[:3], v[3:6])
    d = np.array(v[6:])
    left = forward(net, enc, d, "left")
    right = forward(net, enc.mirrored(), [-d[0], d[1]], "right").mirrored()
    assert np.array_equal(left.as_vector(), right.as_vector())


@pytest.mark.parametrize("side", ["left", "right"])
def test_encode_decode_round_trip(toy, rng, side):
    pose = sample_pose(toy, rng)
    enc = encode_arm(toy, pose, side)
    back = decode_arm(toy, pose, enc, side)
    assert np.abs(back.rotations() - pose.rotations()).max() < 1e-9
    # decoding a different encoding and re-encoding returns it
    other = encode_arm(toy, sample_pose(toy, rng), side)
    again = encode_arm(toy, decode_arm(toy, pose, other, side), side)
    assert np.abs(rodrigues(again.shoulder_global) - rodrigues(other.shoulder_global)).max() < 1e-9
    assert np.abs(again.elbow_local - other.elbow_local).max() < 1e-12


def test_identity_pose_encodes_to_zeros(toy):
    enc = encode_arm(toy, toy.zero_pose(), "right")
    assert np.abs(enc.as_vector()).max() < 1e-12


def test_direction_vector():
    assert np.allclose(direction_vector([100, 50], [110, 50], 100.0), [0.1, 0.0])
    assert np.allclose(direction_vector([0, 0], [0, 0], 80.0), [0.0, 0.0])
    with pytest.raises(DegenerateArm):
        direction_vector([0, 0], [1, 1], 0.0)
    with pytest.raises(DegenerateArm):
        direction_vector([0, 0], [1, 1], float("nan"))


def test_synthesis_is_deterministic(toy, small_data):
    again = synthesize_dataset(toy, 6, seed=11)
    assert np.array_equal(small_data.inputs, again.inputs)
    assert np.array_equal(small_data.targets, again.targets)
    other = synthesize_dataset(toy, 6, seed=12)
    assert not np.array_equal(small_data.inputs, other.inputs)


def test_synthesized_fits_reduce_cost(small_data):
    assert len(small_data) == 6
    assert np.all(small_data.cost_after <= 0.1 * small_data.cost_before)
    d = small_data.inputs[:, 6:]
    assert np.all(np.linalg.norm(d, axis=1) <= 0.3 + 1e-12)


def test_zero_displacement_keeps_the_arm(toy):
    ds = synthesize_dataset(toy, 3, seed=5, max_displacement=0.0)
    assert np.abs(ds.inputs[:, 6:]).max() == 0.0
    assert np.abs(ds.targets - ds.inputs[:, :6]).max() < 1e-9


def test_memorizes_a_repeated_sample(small_data):
    one = small_data.subset(np.zeros(32, dtype=int))
    net = WristNet.initialize(seed=0)
    trained, curve = train(net, one, epochs=150, lr=1e-3, batch_size=32)
    assert curve[-1] < 1e-6 * max(curve[0], 1e-3)
    assert np.abs(trained(one.inputs[:1])[0] - one.targets[0]).max() < 1e-3


def test_training_is_reproducible(small_data):
    net = WristNet.initialize(seed=0)
    a, ca = train(net, small_data, epochs=3, seed=4, batch_size=4)
    b, cb = train(net, small_data, epochs=3, seed=4, batch_size=4)
    assert ca == cb
    assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))
    # the input network is untouched
    assert np.array_equal(net.weights[0], WristNet.initialize(seed=0).weights[0])


def _hand(toy, pose, cam, part, offset_px):
    """A hand estimate at the pose's wrist, with the wrist keypoint moved by ``offset_px``."""
    sub = extract_hand_submodel(toy, part)
    mesh = pose_model(toy, pose)
    wrist = int(sub.joint_ids[0])
    kp = np.zeros((len(sub.keypoint_ids), 3))
    kp[0, :2] = project(cam, mesh.joints3d[wrist]) + offset_px
    kp[0, 2] = 1.0
    R = global_rotations(toy, pose)
    fingers = np.array([pose.get_joint(j) for j in part_joints(toy, part)])
    return PartEstimate(part, rodrigues_inverse(R[wrist]), fingers, pose.shape, cam.copy(), keypoints2d=kp)


def test_apply_leaves_arms_without_a_hand(toy, rng, net):
    pose = sample_pose(toy, rng)
    cam = WeakPerspectiveCamera(250.0, [256.0, 256.0])
    base = WholeBodyResult(pose, cam)
    hand = _hand(toy, pose, cam, "left_hand", [10.0, 0.0])
    # full confidence keypoint rows only where detected; mean must pass the threshold
    hand.keypoints2d[:, 2] = 1.0
    out = apply_wristnet(net, base, {"left_hand": hand, "right_hand": None}, toy)
    left = {toy.joint_index(f"left_{j}") for j in ("shoulder", "elbow", "wrist")}
    for j in range(toy.num_joints):
        if j not in left:
            assert np.array_equal(out.pose.get_joint(j), pose.get_joint(j))
    assert np.array_equal(apply_wristnet(net, base, {}, toy).pose.rotations(), pose.rotations())


def test_apply_keeps_hand_orientation(toy, rng, net):
    pose = sample_pose(toy, rng)
    cam = WeakPerspectiveCamera(250.0, [256.0, 256.0])
    hand = _hand(toy, pose, cam, "right_hand", [5.0, -8.0])
    hand.keypoints2d[:, 2] = 1.0
    out = apply_wristnet(net, WholeBodyResult(pose, cam), {"right_hand": hand}, toy)
    wrist = toy.joint_index("right_wrist")
    assert np.abs(global_rotations(toy, out.pose)[wrist] - rodrigues(hand.global_orient)).max() < 1e-9


def test_low_confidence_hand_is_ignored(toy, rng, net):
    pose = sample_pose(toy, rng)
    cam = WeakPerspectiveCamera(250.0, [256.0, 256.0])
    hand = _hand(toy, pose, cam, "right_hand", [20.0, 0.0])
    hand.keypoints2d[:, 2] = 0.1
    out = apply_wristnet(net, WholeBodyResult(pose, cam), {"right_hand": hand}, toy)
    assert np.array_equal(out.pose.rotations(), pose.rotations())


def test_fixed_point_net_leaves_arm_unchanged(toy):
    # trained only on zero displacements, the network learns the identity there
    ds = synthesize_dataset(toy, 3, seed=21, max_displacement=0.0)
    reps = ds.subset(np.tile(np.arange(3), 10))
    net, _ = train(WristNet.initialize(seed=0), reps, epochs=400, lr=1e-3, batch_size=30)
    for i in range(3):
        enc = ArmPoseEncoding.from_vector(ds.inputs[i, :6])
        out = forward(net, enc, [0.0, 0.0], "right")
        assert np.abs(out.as_vector() - enc.as_vector()).max() < 1e-2
