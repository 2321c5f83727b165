import numpy as np
import pytest

from wholebody.camera import WeakPerspectiveCamera, project
from wholebody.errors import DimensionMismatch, NoEvidence, NonFinite
from wholebody.fit import (
    Evidence,
    FitConfig,
    Objective,
    ParamLayout,
    cost_2d,
    cost_3d_anchor,
    cost_mesh,
    cost_prior,
    finite_difference_gradient,
    fit_arm,
    fit_whole_body,
    merge_keypoints,
    training_losses,
)
from wholebody.integrate import WholeBodyResult, copy_paste
from wholebody.model import PosedMesh, pose_model
from wholebody.parts import HANDS, extract_hand_submodel
from wholebody.synthetic import simulate_frame
from wholebody.toy import sample_pose

CAM = WeakPerspectiveCamera(250.0, [256.0, 100.0])


def keypoints_of(template, pose, cam=CAM):
    J = pose_model(template, pose).joints3d
    return np.c_[project(cam, J), np.ones(len(J))]


def stage2_objective(template, frame, anchor=True):
    layout = ParamLayout(template)
    hands = {p: frame.estimates[p] for p in HANDS}
    kp = merge_keypoints(template, Evidence(frame.keypoints2d, hands))
    ids = np.array(template.keypoints_of("body"))
    anc = (ids, np.random.default_rng(0).normal(0, 0.5, (len(ids), 3))) if anchor else None
    free = layout.mask(range(template.num_joints), shape=True, expression=True, camera=True)
    weights = {"w2d": 1.0, "wmesh": 1e3, "wpri": 0.1, "w3d": 10.0}
    return layout, Objective(template, layout, free, keypoints2d=kp, hands=hands, weights=weights, anchor=anc)


# ---------------------------------------------------------------- cost terms


def test_cost_2d_examples(toy, rng):
    pose = sample_pose(toy, rng)
    kp = keypoints_of(toy, pose)
    assert cost_2d(pose, CAM, toy, kp) == pytest.approx(0.0, abs=1e-18)
    kp[5, :2] += [3.0, 4.0]
    assert cost_2d(pose, CAM, toy, kp) == pytest.approx(25.0, rel=1e-12)
    kp[5, 2] = 0.0
    assert cost_2d(pose, CAM, toy, kp) == pytest.approx(0.0, abs=1e-18)


def test_cost_2d_matches_summation_oracle(toy, rng):
    pose = sample_pose(toy, rng)
    kp = np.c_[rng.uniform(0, 500, (toy.num_keypoints, 2)), rng.uniform(0, 1, toy.num_keypoints)]
    J = pose_model(toy, pose).joints3d
    want = 0.0
    for k in range(toy.num_keypoints):
        u = CAM.scale * J[k, 0] + CAM.translation[0] - kp[k, 0]
        v = CAM.scale * J[k, 1] + CAM.translation[1] - kp[k, 1]
        want += kp[k, 2] * (u * u + v * v)
    assert abs(cost_2d(pose, CAM, toy, kp) - want) <= 1e-12 * want


def test_cost_2d_dimension_check(toy):
    with pytest.raises(DimensionMismatch):
        cost_2d(toy.zero_pose(), CAM, toy, np.zeros((3, 3)))


def _hand_setup(toy, rng, side="left"):
    frame, truth = simulate_frame(toy, rng)
    est = frame.estimates[f"{side}_hand"]
    return truth["pose"], est, extract_hand_submodel(toy, side)


def test_cost_mesh_zero_and_offset(toy, rng):
    pose, est, sub = _hand_setup(toy, rng)
    mesh = pose_model(toy, pose)
    wrist = int(sub.joint_ids[0])
    hand = sub.pose(est)
    aligned = hand.vertices - hand.joints3d[0] + mesh.joints3d[wrist]
    verts = mesh.vertices.copy()
    verts[sub.vertex_ids] = aligned
    exact = PosedMesh(verts, mesh.joints3d, mesh.global_transforms)
    assert cost_mesh(exact, est, toy, "left") == pytest.approx(0.0, abs=1e-20)
    d = np.array([0.01, -0.02, 0.005])
    verts[sub.vertex_ids] += d
    shifted = PosedMesh(verts, mesh.joints3d, mesh.global_transforms)
    assert cost_mesh(shifted, est, toy, "left") == pytest.approx(len(sub.vertex_ids) * d @ d, rel=1e-9)


def test_cost_mesh_matches_vertex_loop(toy, rng):
    pose, est, sub = _hand_setup(toy, rng, "right")
    mesh = pose_model(toy, pose)
    hand = sub.pose(est)
    wrist = mesh.joints3d[int(sub.joint_ids[0])]
    want = 0.0
    for i, v in enumerate(sub.vertex_ids):
        target = hand.vertices[i] - hand.joints3d[0] + wrist
        want += float(np.sum((mesh.vertices[v] - target) ** 2))
    assert cost_mesh(mesh, est, toy, "right") == pytest.approx(want, rel=1e-12)


def test_prior_and_anchor(rng):
    assert cost_prior(np.zeros(10)) == 0.0
    assert cost_prior([3.0, 4.0, 0.0]) == 25.0
    b = rng.normal(size=10)
    assert cost_prior(b) == pytest.approx(float(np.dot(b, b)))
    J = rng.normal(size=(6, 3))
    assert cost_3d_anchor(J, J) == 0.0
    K = J.copy()
    K[2, 1] += 1.0
    assert cost_3d_anchor(K, J) == pytest.approx(1.0)
    A = rng.normal(size=(6, 3))
    assert cost_3d_anchor(J, A) == pytest.approx(sum(np.sum((J[i] - A[i]) ** 2) for i in range(6)))


def test_training_losses(rng):
    zero = {"pose": np.zeros(6), "joints3d": np.zeros((2, 3)), "joints2d": np.zeros((2, 2)), "shape": np.zeros(4)}
    assert all(v == 0 for v in training_losses(zero, zero).values())
    unit = {"pose": np.eye(6)[0], "joints3d": np.eye(6)[0].reshape(2, 3), "joints2d": np.eye(4)[0].reshape(2, 2),
            "shape": np.eye(4)[0]}  # fmt: skip
    assert training_losses(unit, zero)["L"] == pytest.approx(120.1, rel=1e-12)
    a = {k: rng.normal(size=v.shape) for k, v in zero.items()}
    b = {k: rng.normal(size=v.shape) for k, v in zero.items()}
    out = training_losses(a, b)
    assert out["L_theta"] == pytest.approx(sum((x - y) ** 2 for x, y in zip(a["pose"], b["pose"])))
    assert out["L_2D"] == pytest.approx(sum(abs(x - y) for x, y in zip(a["joints2d"].ravel(), b["joints2d"].ravel())))
    assert out["L_reg"] == pytest.approx(sum(x * x for x in a["shape"]))


# ---------------------------------------------------------------- objective


def test_term_decomposition(toy, rng):
    frame, _ = simulate_frame(toy, rng)
    layout, obj = stage2_objective(toy, frame)
    x = layout.pack(sample_pose(toy, rng), CAM) + rng.normal(0, 0.01, layout.size)
    terms, total = obj.terms(x)
    w = obj.weights
    manual = w["w2d"] * terms["2d"] + w["wmesh"] * terms["mesh"] + w["wpri"] * terms["pri"] + w["w3d"] * terms["3d"]
    assert abs(total - manual) <= 1e-10 * max(1.0, total)
    r = obj.residuals(x)
    assert abs(total - r @ r) <= 1e-10 * max(1.0, total)


def test_terms_agree_with_public_costs(toy, rng):
    frame, _ = simulate_frame(toy, rng)
    layout, obj = stage2_objective(toy, frame, anchor=False)
    pose = sample_pose(toy, rng)
    pose.shape = rng.normal(size=toy.num_shape)
    x = layout.pack(pose, CAM)
    terms, _ = obj.terms(x)
    kp = merge_keypoints(toy, Evidence(frame.keypoints2d, {p: frame.estimates[p] for p in HANDS}))
    assert terms["2d"] == pytest.approx(cost_2d(pose, CAM, toy, kp), rel=1e-10)
    mesh = pose_model(toy, pose)
    want = sum(cost_mesh(mesh, frame.estimates[p], toy, p) for p in HANDS)
    assert terms["mesh"] == pytest.approx(want, rel=1e-10)
    assert terms["pri"] == pytest.approx(cost_prior(pose.shape))


def test_analytic_gradient_matches_finite_differences(toy, rng):
    frame, _ = simulate_frame(toy, rng)
    layout, obj = stage2_objective(toy, frame)
    for _ in range(3):
        pose = sample_pose(toy, rng)
        pose.shape = rng.normal(size=toy.num_shape)
        pose.expression = rng.normal(size=toy.num_expression)
        x = layout.pack(pose, CAM)
        g = obj.gradient(x)
        fd = finite_difference_gradient(obj.cost, x, obj.free_order(), 1e-5)
        assert np.linalg.norm(g - fd) / np.linalg.norm(fd) < 1e-4


# ---------------------------------------------------------------- fitting


def test_zero_residual_start_is_kept(toy, rng):
    gt = sample_pose(toy, rng)
    init = WholeBodyResult(gt.copy(), CAM.copy())
    res, report = fit_whole_body(init, Evidence(keypoints_of(toy, gt)), toy, FitConfig(wpri=1e-12))
    assert report.stages[0].costs[0] < 1e-6
    assert np.abs(res.pose.rotations() - gt.rotations()).max() < 1e-6


def test_monotone_costs_and_report(toy, rng):
    gt = sample_pose(toy, rng)
    init = gt.copy()
    init.joint_rotations += rng.normal(0, 0.1, init.joint_rotations.shape)
    _, report = fit_whole_body(WholeBodyResult(init, CAM.copy()), Evidence(keypoints_of(toy, gt)), toy)
    assert [s.name for s in report.stages] == ["stage1", "stage2"]
    for s in report.stages:
        assert all(b <= a for a, b in zip(s.costs, s.costs[1:]))
    assert report.stages[0].costs[-1] < 1e-2 * report.stages[0].costs[0]
    assert set(report.to_dict()["final_terms"]) == {"2d", "mesh", "pri", "3d"}


def test_hand_mesh_cost_decreases_from_copy_paste(toy, rng):
    frame, _ = simulate_frame(toy, rng)
    e = frame.estimates
    init = copy_paste(e["body"], e["left_hand"], e["right_hand"], e["face"], toy)
    hands = {p: e[p] for p in HANDS}
    # offset the hand targets so the copy-paste hands are wrong
    for h in hands.values():
        h.pose = h.pose + 0.3
    before = sum(cost_mesh(pose_model(toy, init.pose), h, toy, p) for p, h in hands.items())
    res, _ = fit_whole_body(init, Evidence(None, hands), toy, FitConfig(stage2_iters=10))
    after = sum(cost_mesh(pose_model(toy, res.pose), h, toy, p) for p, h in hands.items())
    assert after < before


def test_anchor_weight_limits_body_drift(toy, rng):
    frame, _ = simulate_frame(toy, rng)
    e = frame.estimates
    init = copy_paste(e["body"], e["left_hand"], e["right_hand"], e["face"], toy)
    hands = {p: e[p] for p in HANDS}
    drift = []
    for w3d in (0.1, 10.0, 1000.0):
        cfg = FitConfig(w3d=w3d, stage1_iters=20, stage2_iters=50)
        _, report = fit_whole_body(init, Evidence(frame.keypoints2d, hands), toy, cfg)
        # the 3d term is the squared drift of body keypoints from their stage-1 positions
        drift.append(report.final_terms["3d"])
    assert drift[0] > drift[1] > drift[2]
    assert np.sqrt(drift[2]) < 0.05


def test_fit_errors(toy, rng):
    init = WholeBodyResult(toy.zero_pose(), CAM.copy())
    with pytest.raises(NoEvidence):
        fit_whole_body(init, Evidence(), toy)
    kp = keypoints_of(toy, toy.zero_pose())
    kp[0, 0] = np.nan
    with pytest.raises(NonFinite):
        fit_whole_body(init, Evidence(kp), toy)


def test_finite_difference_mode_descends(toy, rng):
    gt = sample_pose(toy, rng)
    init = gt.copy()
    init.joint_rotations += rng.normal(0, 0.05, init.joint_rotations.shape)
    cfg = FitConfig(gradient="fd", stage1_iters=5, stage2_iters=1)
    _, report = fit_whole_body(WholeBodyResult(init, CAM.copy()), Evidence(keypoints_of(toy, gt)), toy, cfg)
    costs = report.stages[0].costs
    assert costs[-1] < costs[0]
    assert all(b <= a for a, b in zip(costs, costs[1:]))


def test_fit_arm_moves_only_the_arm(toy, rng):
    pose = sample_pose(toy, rng)
    wrist = toy.joint_index("right_wrist")
    start = project(CAM, pose_model(toy, pose).joints3d[wrist])
    target = start + [15.0, -10.0]
    new, stage = fit_arm(toy, pose, CAM, "right", target)
    reached = project(CAM, pose_model(toy, new).joints3d[wrist])
    assert np.linalg.norm(reached - target) < 0.1
    changed = {j for j in range(toy.num_joints) if not np.allclose(new.get_joint(j), pose.get_joint(j))}
    assert changed <= {toy.joint_index("right_shoulder"), toy.joint_index("right_elbow")}


def test_config_validation():
    with pytest.raises(ValueError):
        FitConfig(stage1_iters=0)
    with pytest.raises(ValueError):
        FitConfig(w2d=-1)
    with pytest.raises(ValueError):
        FitConfig(gradient="newton")
