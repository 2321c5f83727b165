"""Simulated part-module outputs.

Stands in for trained body, hand and face regressors: ground-truth poses
are drawn on the template, and each part estimate is the ground truth plus
noise.  Body arm estimates are noisier than the rest of the body, which
reproduces the typical failure that integration has to repair (hands that
are accurate on their own but land away from the body's wrists).
"""

from dataclasses import dataclass

import numpy as np

from .camera import WeakPerspectiveCamera, project
from .fileio import Frame
from .model import global_rotations, pose_model
from .parts import HANDS, PartEstimate, extract_hand_submodel, part_joints
from .rotation import rodrigues, rodrigues_inverse
from .toy import sample_pose


@dataclass
class NoiseConfig:
    body_rot: float = 0.05
    arm_rot: float = 0.2
    shape: float = 0.1
    camera_scale: float = 0.02  # relative
    camera_shift: float = 2.0  # px
    hand_orient: float = 0.03
    finger_rot: float = 0.05
    keypoint_px: float = 1.0
    jaw_rot: float = 0.03
    expression: float = 0.05
    face_expression_size: int = 50


IMAGE_SIZE = (512, 512)


def _jitter_rotation(aa, sigma, rng):
    """Compose a rotation with a small random one (noise on the rotation, not the vector)."""
    return rodrigues_inverse(rodrigues(rng.normal(0.0, sigma, 3)) @ rodrigues(aa))


def simulate_frame(template, rng, frame_id=0, noise=None, shape_std=0.5, expression_std=0.5):
    """Ground-truth pose/camera plus noisy body, hand and face estimates for one frame."""
    noise = noise or NoiseConfig()
    gt = sample_pose(template, rng)
    gt.shape = rng.normal(0.0, shape_std, template.num_shape)
    gt.expression = rng.normal(0.0, expression_std, template.num_expression)
    height = template.height()
    scale = rng.uniform(0.6, 0.8) * IMAGE_SIZE[1] / height
    cam = WeakPerspectiveCamera(scale, [IMAGE_SIZE[0] / 2 + rng.normal(0, 10), IMAGE_SIZE[1] / 2 + rng.normal(0, 10)])
    mesh = pose_model(template, gt)
    R = global_rotations(template, gt)

    arms = {template.joint_index(f"{s}_{j}") for s in ("left", "right") for j in ("shoulder", "elbow")}
    body_ids = part_joints(template, "body")
    body_pose = np.array(
        [gt.get_joint(j) + rng.normal(0.0, noise.arm_rot if j in arms else noise.body_rot, 3) for j in body_ids]
    )
    body = PartEstimate(
        "body",
        _jitter_rotation(gt.global_orient, noise.body_rot, rng),
        body_pose,
        gt.shape + rng.normal(0.0, noise.shape, template.num_shape),
        WeakPerspectiveCamera(
            scale * (1 + rng.normal(0.0, noise.camera_scale)), cam.translation + rng.normal(0, noise.camera_shift, 2)
        ),
    )
    estimates = {"body": body}

    for part in HANDS:
        sub = extract_hand_submodel(template, part)
        wrist = int(sub.joint_ids[0])
        fingers = part_joints(template, part)
        kp2d = project(cam, mesh.joints3d[sub.keypoint_ids]) + rng.normal(0.0, noise.keypoint_px, (len(sub.keypoint_ids), 2))
        est = PartEstimate(
            part,
            rodrigues_inverse(rodrigues(rng.normal(0.0, noise.hand_orient, 3)) @ R[wrist]),
            np.array([gt.get_joint(j) + rng.normal(0.0, noise.finger_rot, 3) for j in fingers]),
            gt.shape,
            cam.copy(),
            keypoints2d=np.c_[kp2d, np.ones(len(kp2d))],
        )
        # hand camera: full-image frame, wrist landing on its detected keypoint
        hand_wrist = sub.pose(est).joints3d[0]
        est.camera = WeakPerspectiveCamera(scale, kp2d[0] - scale * hand_wrist[:2])
        estimates[part] = est

    jaw = part_joints(template, "face")
    expression = rng.normal(0.0, expression_std, max(noise.face_expression_size, template.num_expression))
    expression[: template.num_expression] = gt.expression + rng.normal(0.0, noise.expression, template.num_expression)
    estimates["face"] = PartEstimate(
        "face", np.zeros(3), np.array([gt.get_joint(j) + rng.normal(0.0, noise.jaw_rot, 3) for j in jaw]),
        np.zeros(0), cam.copy(), expression=expression,
    )  # fmt: skip

    body_kp = template.keypoints_of("body")
    kp = np.zeros((template.num_keypoints, 3))
    kp[body_kp, :2] = project(cam, mesh.joints3d[body_kp]) + rng.normal(0.0, noise.keypoint_px, (len(body_kp), 2))
    kp[body_kp, 2] = 1.0
    frame = Frame(frame_id, estimates, keypoints2d=kp, image_width=IMAGE_SIZE[0])
    return frame, {"frame": frame_id, "pose": gt, "camera": cam}


def simulate_frames(template, n, seed=0, noise=None):
    """``n`` frames; frame ``i`` draws from its own generator seeded by ``(seed, i)``."""
    frames, truth = [], []
    for i in range(n):
        f, g = simulate_frame(template, np.random.default_rng([seed, i]), i, noise)
        frames.append(f)
        truth.append(g)
    return frames, truth
