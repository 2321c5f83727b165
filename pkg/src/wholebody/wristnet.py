"""Wrist-integration network.

A six-layer MLP maps the copy-paste arm pose (global shoulder orientation,
local elbow rotation) and a normalized 2D wrist displacement to an adjusted
arm pose.  The network is trained on right arms only; left arms are
mirrored in, evaluated, and mirrored back.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .camera import project
from .errors import DegenerateArm
from .fit import cost_2d, fit_arm
from .integrate import DEFAULT_HAND_CONFIDENCE, global_from_local, local_from_global
from .model import pose_model, shaped_vertices
from .parts import extract_hand_submodel, hand_wrist_2d, side_of
from .rotation import mirror_axis_angle, rodrigues, rodrigues_inverse
from .toy import sample_pose

log = logging.getLogger(__name__)

DIMS = (8, 128, 256, 512, 256, 128, 6)


@dataclass(eq=False)
class ArmPoseEncoding:
    shoulder_global: np.ndarray
    elbow_local: np.ndarray

    def __post_init__(self):
        self.shoulder_global = np.asarray(self.shoulder_global, dtype=float).reshape(3)
        self.elbow_local = np.asarray(self.elbow_local, dtype=float).reshape(3)

    def as_vector(self):
        return np.concatenate([self.shoulder_global, self.elbow_local])

    @classmethod
    def from_vector(cls, v):
        return cls(v[:3], v[3:6])

    def mirrored(self):
        return ArmPoseEncoding(mirror_axis_angle(self.shoulder_global), mirror_axis_angle(self.elbow_local))


def _arm_joints(template, side):
    side = side_of(side)
    return (
        template.joint_index(f"{side}_shoulder"),
        template.joint_index(f"{side}_elbow"),
        template.joint_index(f"{side}_wrist"),
    )


def encode_arm(template, pose, side):
    shoulder, elbow, _ = _arm_joints(template, side)
    return ArmPoseEncoding(
        rodrigues_inverse(global_from_local(template, pose, shoulder)), pose.get_joint(elbow)
    )


def decode_arm(template, pose, enc, side):
    shoulder, elbow, _ = _arm_joints(template, side)
    out = pose.copy()
    out.set_joint(shoulder, local_from_global(template, out, shoulder, rodrigues(enc.shoulder_global)))
    out.set_joint(elbow, enc.elbow_local)
    return out


def direction_vector(body_wrist2d, hand_wrist2d, arm_length):
    if not arm_length >= 1e-6:
        raise DegenerateArm(f"projected arm length {arm_length!r} is too small")
    return (np.asarray(hand_wrist2d, dtype=float) - np.asarray(body_wrist2d, dtype=float)) / arm_length


def arm_length_px(template, pose, camera, side):
    """Upper plus lower arm length of the shaped rest skeleton, in pixels."""
    shoulder, elbow, wrist = _arm_joints(template, side)
    shaped = shaped_vertices(template, pose.shape, pose.expression)
    q = template.joint_regressor[[shoulder, elbow, wrist]] @ shaped
    return camera.scale * float(np.linalg.norm(q[1] - q[0]) + np.linalg.norm(q[2] - q[1]))


# ---------------------------------------------------------------- network


@dataclass(eq=False)
class WristNet:
    weights: list  # (d_in, d_out) matrices
    biases: list
    activation: str = "relu"

    @classmethod
    def initialize(cls, seed=0, dims=DIMS):
        rng = np.random.default_rng(seed)
        weights = [rng.normal(0.0, np.sqrt(2.0 / a), (a, b)) for a, b in zip(dims[:-1], dims[1:])]
        weights[-1] *= 0.1
        biases = [np.zeros(b) for b in dims[1:]]
        return cls(weights, biases)

    @property
    def dims(self):
        return tuple([self.weights[0].shape[0]] + [w.shape[1] for w in self.weights])

    def num_parameters(self):
        return int(sum(w.size + b.size for w, b in zip(self.weights, self.biases)))

    def copy(self):
        return WristNet([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.activation)

    def _act(self, z):
        if self.activation == "relu":
            return np.maximum(z, 0.0)
        if self.activation == "tanh":
            return np.tanh(z)
        raise ValueError(f"unknown activation {self.activation!r}")

    def __call__(self, inputs):
        h = np.asarray(inputs, dtype=float)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = self._act(h)
        return h

    def _forward_cache(self, x):
        acts, pre = [x], []
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            pre.append(z)
            h = self._act(z) if i < last else z
            acts.append(h)
        return acts, pre

    def loss_and_grads(self, x, y):
        """Mean squared error over the batch and its parameter gradients."""
        acts, pre = self._forward_cache(x)
        diff = acts[-1] - y
        loss = float(np.mean(diff**2))
        delta = 2.0 * diff / diff.size
        gw, gb = [None] * len(self.weights), [None] * len(self.weights)
        for i in range(len(self.weights) - 1, -1, -1):
            gw[i] = acts[i].T @ delta
            gb[i] = delta.sum(axis=0)
            if i > 0:
                delta = delta @ self.weights[i].T
                if self.activation == "relu":
                    delta = delta * (pre[i - 1] > 0)
                else:
                    delta = delta * (1.0 - acts[i] ** 2)
        return loss, gw, gb


def forward(net, enc, d, side="right"):
    """Adjusted arm encoding; left arms go through the mirrored right-arm network."""
    d = np.asarray(d, dtype=float).reshape(2)
    if side_of(side) == "left":
        out = forward(net, enc.mirrored(), np.array([-d[0], d[1]]), "right")
        return out.mirrored()
    y = net(np.concatenate([enc.as_vector(), d])[None])[0]
    return ArmPoseEncoding.from_vector(y)


# ---------------------------------------------------------------- data


@dataclass(eq=False)
class WristDataset:
    """Right-arm training samples with enough context to re-evaluate them.

    ``inputs`` rows are ``[shoulder_global, elbow_local, d]`` and ``targets``
    rows the adjusted ``[shoulder_global, elbow_local]``.
    """

    inputs: np.ndarray
    targets: np.ndarray
    global_orient: np.ndarray
    joint_rotations: np.ndarray
    shape: np.ndarray
    camera: np.ndarray  # (n, 3): scale, tx, ty
    target_wrist2d: np.ndarray
    cost_before: np.ndarray
    cost_after: np.ndarray
    failed: int = 0
    side: str = "right"
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.inputs)

    def subset(self, idx):
        idx = np.asarray(idx)
        return WristDataset(
            self.inputs[idx], self.targets[idx], self.global_orient[idx], self.joint_rotations[idx],
            self.shape[idx], self.camera[idx], self.target_wrist2d[idx], self.cost_before[idx],
            self.cost_after[idx], 0, self.side, dict(self.meta),
        )  # fmt: skip

    def split(self, holdout_fraction=0.2):
        n_test = int(round(len(self) * holdout_fraction))
        return self.subset(np.arange(n_test, len(self))), self.subset(np.arange(n_test))

    def sample_pose(self, i):
        from .model import PoseState

        return PoseState(self.global_orient[i], self.joint_rotations[i], self.shape[i], np.zeros(0))


def _sample_context(template, rng, shape_noise):
    from .camera import WeakPerspectiveCamera

    pose = sample_pose(template, rng)
    pose.shape = rng.normal(0.0, shape_noise, template.num_shape)
    camera = WeakPerspectiveCamera(rng.uniform(150.0, 300.0), rng.uniform(100.0, 400.0, 2))
    return pose, camera


def synthesize_dataset(template, n, seed=0, max_displacement=0.3, shape_noise=0.5, min_reduction=0.9,
                       max_attempts=None):  # fmt: skip
    """Right-arm samples whose targets come from arm-only 2D fits.

    For each sample: random whole-body pose within the angle limits, random
    shape, random camera; the projected right wrist is displaced by a random
    vector of length at most ``max_displacement`` arm lengths and shoulder +
    elbow are refitted to the displaced wrist.  Fits that do not cut the
    wrist cost by ``min_reduction`` are counted in ``failed`` and skipped.
    Sample ``i`` uses its own generator seeded with ``(seed, attempt)``.
    """
    side = "right"
    _, _, wrist = _arm_joints(template, side)
    max_attempts = max_attempts or 3 * n + 10
    rows = {k: [] for k in ("inp", "tgt", "go", "rot", "shape", "cam", "t2d", "c0", "c1")}
    failed = 0
    attempt = 0
    while len(rows["inp"]) < n and attempt < max_attempts:
        rng = np.random.default_rng([seed, attempt])
        attempt += 1
        pose, camera = _sample_context(template, rng, shape_noise)
        pose.expression = np.zeros(template.num_expression)
        wrist2d = project(camera, pose_model(template, pose).joints3d[wrist])
        arm = arm_length_px(template, pose, camera, side)
        radius = max_displacement * np.sqrt(rng.uniform())
        angle = rng.uniform(0.0, 2.0 * np.pi)
        disp = arm * radius * np.array([np.cos(angle), np.sin(angle)])
        target = wrist2d + disp
        kp = np.zeros((template.num_keypoints, 3))
        kp[wrist] = [target[0], target[1], 1.0]
        before = cost_2d(pose, camera, template, kp)
        new_pose, _ = fit_arm(template, pose, camera, side, target)
        after = cost_2d(new_pose, camera, template, kp)
        if not (after <= (1.0 - min_reduction) * before or before == 0.0):
            failed += 1
            continue
        d = disp / arm
        rows["inp"].append(np.concatenate([encode_arm(template, pose, side).as_vector(), d]))
        rows["tgt"].append(encode_arm(template, new_pose, side).as_vector())
        rows["go"].append(pose.global_orient)
        rows["rot"].append(pose.joint_rotations)
        rows["shape"].append(pose.shape)
        rows["cam"].append(camera.as_vector())
        rows["t2d"].append(target)
        rows["c0"].append(before)
        rows["c1"].append(after)
    if failed:
        log.info("wrist data: %d of %d arm fits failed and were skipped", failed, attempt)
    J = template.num_joints
    B = template.num_shape

    def arr(key, shape):
        return np.array(rows[key], dtype=float).reshape(shape)

    m = len(rows["inp"])
    return WristDataset(
        arr("inp", (m, 8)), arr("tgt", (m, 6)), arr("go", (m, 3)), arr("rot", (m, J - 1, 3)),
        arr("shape", (m, B)), arr("cam", (m, 3)), arr("t2d", (m, 2)), arr("c0", (m,)), arr("c1", (m,)),
        failed, side, {"seed": seed, "max_displacement": max_displacement, "shape_noise": shape_noise},
    )  # fmt: skip


# ---------------------------------------------------------------- training


def train(net, dataset, epochs=200, lr=1e-3, seed=0, batch_size=64, betas=(0.9, 0.999), eps=1e-8):
    """Mini-batch Adam on the mean squared error; returns the trained copy and per-epoch losses.

    The first entry of the loss curve is the full-dataset loss before training.
    """
    net = net.copy()
    x, y = dataset.inputs, dataset.targets
    rng = np.random.default_rng(seed)
    params = net.weights + net.biases
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2 = betas
    step = 0
    curve = [float(np.mean((net(x) - y) ** 2))]
    for _ in range(epochs):
        order = rng.permutation(len(x))
        total = 0.0
        for start in range(0, len(x), batch_size):
            idx = order[start : start + batch_size]
            loss, gw, gb = net.loss_and_grads(x[idx], y[idx])
            total += loss * len(idx)
            step += 1
            c1 = 1.0 - b1**step
            c2 = 1.0 - b2**step
            for i, g in enumerate(gw + gb):
                m[i] *= b1
                m[i] += (1.0 - b1) * g
                v[i] *= b2
                v[i] += (1.0 - b2) * g * g
                params[i] -= lr * (m[i] / c1) / (np.sqrt(v[i] / c2) + eps)
        curve.append(total / len(x))
    return net, curve


# ---------------------------------------------------------------- inference


def apply_wristnet(net, wholebody, hands, template, hand_confidence=DEFAULT_HAND_CONFIDENCE):
    """Adjust each arm with an available hand estimate toward the hand's 2D wrist.

    After the arm update the wrist is re-solved so the hand keeps its global
    orientation.
    """
    result = wholebody.copy()
    pose, camera = result.pose, result.camera
    for part, est in (hands or {}).items():
        if est is None or est.mean_confidence() < hand_confidence:
            continue
        side = side_of(part)
        _, _, wrist = _arm_joints(template, side)
        sub = extract_hand_submodel(template, side)
        body_wrist = project(camera, pose_model(template, pose).joints3d[wrist])
        hand_wrist = hand_wrist_2d(sub, est)
        d = direction_vector(body_wrist, hand_wrist, arm_length_px(template, pose, camera, side))
        enc = forward(net, encode_arm(template, pose, side), d, side)
        pose = decode_arm(template, pose, enc, side)
        pose.set_joint(wrist, local_from_global(template, pose, wrist, rodrigues(est.global_orient)))
    result.pose = pose
    return result


def wrist_errors(net, dataset, template):
    """Per-sample 2D wrist error (px) of copy-paste and of the wrist-net adjustment.

    Each sample becomes a whole-body result plus a hand estimate whose wrist
    keypoint sits at the displaced target; copy-paste leaves the arm where it
    is, the network moves it through :func:`apply_wristnet`.
    """
    from .camera import WeakPerspectiveCamera
    from .integrate import WholeBodyResult
    from .model import global_rotations
    from .parts import PartEstimate, part_joints

    side = dataset.side
    part = f"{side}_hand"
    _, _, wrist = _arm_joints(template, side)
    fingers = part_joints(template, part)
    base, adjusted = np.empty(len(dataset)), np.empty(len(dataset))
    for i in range(len(dataset)):
        pose = dataset.sample_pose(i)
        pose.expression = np.zeros(template.num_expression)
        camera = WeakPerspectiveCamera(dataset.camera[i, 0], dataset.camera[i, 1:])
        target = dataset.target_wrist2d[i]
        hand = PartEstimate(
            part, rodrigues_inverse(global_rotations(template, pose)[wrist]),
            np.array([pose.get_joint(j) for j in fingers]), pose.shape, camera,
            keypoints2d=np.array([[target[0], target[1], 1.0]]),
        )  # fmt: skip
        before = project(camera, pose_model(template, pose).joints3d[wrist])
        out = apply_wristnet(net, WholeBodyResult(pose, camera), {part: hand}, template)
        after = project(camera, pose_model(template, out.pose).joints3d[wrist])
        base[i] = np.linalg.norm(before - target)
        adjusted[i] = np.linalg.norm(after - target)
    return base, adjusted
