"""Part submodels and the containers that carry part-module outputs."""

from dataclasses import dataclass, field

import numpy as np

from .camera import WeakPerspectiveCamera, project
from .errors import DimensionMismatch, MissingPart, TooShort
from .model import PARTS, KinematicTree, ModelTemplate, PoseState, pose_model
from .rotation import mirror_axis_angle

HANDS = ("left_hand", "right_hand")


def side_of(part):
    """``"left_hand"`` -> ``"left"``; also accepts ``"left"``/``"right"``."""
    if part in ("left", "right"):
        return part
    if part in HANDS:
        return part.split("_")[0]
    raise MissingPart(f"{part!r} is not a hand")


@dataclass(frozen=True, eq=False)
class HandSubmodel:
    """Stand-alone hand cut out of a whole-body template.

    Joint 0 of ``template`` is the wrist; ``joint_ids``, ``vertex_ids`` and
    ``keypoint_ids`` map submodel indices back to the whole-body template.
    """

    side: str
    vertex_ids: np.ndarray
    joint_ids: np.ndarray
    keypoint_ids: np.ndarray
    template: ModelTemplate

    @property
    def num_hand_joints(self):
        return len(self.joint_ids) - 1

    def pose(self, estimate):
        """Posed hand mesh for a hand estimate (global orient = wrist rotation)."""
        shape = estimate.shape if estimate.shape.size else np.zeros(self.template.num_shape)
        state = PoseState(estimate.global_orient, estimate.pose, shape, np.zeros(0))
        return pose_model(self.template, state)


@dataclass(eq=False)
class PartEstimate:
    """Output of one part module.

    ``pose`` holds local rotations of the part's joints in template order
    (body: every body joint except the root; hand: finger joints; face: jaw).
    For hands ``global_orient`` is the global wrist rotation.
    ``keypoints2d`` rows are ``(x, y, confidence)`` in full-image pixels.
    """

    part: str
    global_orient: np.ndarray
    pose: np.ndarray
    shape: np.ndarray
    camera: WeakPerspectiveCamera
    keypoints2d: np.ndarray = None
    expression: np.ndarray = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.part not in PARTS:
            raise MissingPart(f"unknown part {self.part!r}")
        self.global_orient = np.asarray(self.global_orient, dtype=float).reshape(3)
        self.pose = np.asarray(self.pose, dtype=float).reshape(-1, 3)
        self.shape = np.asarray(self.shape, dtype=float).reshape(-1)
        if self.keypoints2d is not None:
            self.keypoints2d = np.asarray(self.keypoints2d, dtype=float).reshape(-1, 3)
            conf = self.keypoints2d[:, 2]
            if np.any((conf < 0) | (conf > 1)):
                raise ValueError("keypoint confidences must lie in [0, 1]")
        if self.expression is not None:
            self.expression = np.asarray(self.expression, dtype=float).reshape(-1)

    def mean_confidence(self):
        if self.keypoints2d is None or len(self.keypoints2d) == 0:
            return 1.0
        return float(self.keypoints2d[:, 2].mean())


def part_joints(template, part):
    """Template joints whose rotations a part estimate carries, in ``pose`` order."""
    if part == "body":
        return [j for j in template.tree.joints_of("body") if j != 0]
    return template.tree.joints_of(part)


def check_estimate(template, estimate):
    n = len(part_joints(template, estimate.part))
    if estimate.pose.shape[0] != n:
        raise DimensionMismatch(f"{estimate.part} estimate has {estimate.pose.shape[0]} joints, model expects {n}")
    if estimate.shape.size not in (0, template.num_shape):
        raise DimensionMismatch(f"{estimate.part} estimate has {estimate.shape.size} shape coefficients")


def extract_hand_submodel(template, side):
    """Restrict a whole-body template to one hand (wrist + finger joints).

    Vertices come from the part's vertex mask; skinning weights are
    renormalized over the retained joints and regressor rows over the
    retained vertices.
    """
    part = f"{side_of(side)}_hand"
    finger = template.tree.joints_of(part)
    if not finger or part not in template.part_vertices:
        raise MissingPart(f"template has no tagged {part}")
    wrist = int(template.tree.parent[finger[0]])
    joint_ids = np.array([wrist] + finger)
    vertex_ids = np.array(template.part_vertices[part])
    local = {int(j): i for i, j in enumerate(joint_ids)}
    parent = [-1] + [local[int(template.tree.parent[j])] for j in finger]
    names = [template.tree.joint_names[j] for j in joint_ids]
    tree = KinematicTree(np.array(parent), names, ["body"] + [part] * len(finger))

    W = template.skinning_weights[np.ix_(vertex_ids, joint_ids)]
    W = W / W.sum(axis=1, keepdims=True)
    kp_ids = np.array(
        list(joint_ids) + [k for k in range(template.num_joints, template.num_keypoints)
                           if int(template.keypoint_joint[k]) in local]
    )  # fmt: skip
    reg = template.joint_regressor[np.ix_(kp_ids, vertex_ids)]
    reg = reg / reg.sum(axis=1, keepdims=True)
    sub = ModelTemplate(
        rest_vertices=template.rest_vertices[vertex_ids],
        shape_basis=template.shape_basis[vertex_ids],
        expression_basis=np.zeros((len(vertex_ids), 3, 0)),
        skinning_weights=W,
        joint_regressor=reg,
        tree=tree,
        keypoint_names=tuple(template.keypoint_names[k] for k in kp_ids),
        keypoint_joint=np.array([local[int(template.keypoint_joint[k])] for k in kp_ids]),
        angle_limits=template.angle_limits[joint_ids],
        part_vertices={part: np.arange(len(vertex_ids))},
    )
    return HandSubmodel(side_of(side), vertex_ids, joint_ids, kp_ids, sub)


def mirror_pose(pose, global_orient):
    """Mirror a part pose across the sagittal (x = 0) plane; an involution."""
    return mirror_axis_angle(pose), mirror_axis_angle(global_orient)


def mirror_estimate(estimate, image_width):
    """Left/right flip of a hand estimate, including its camera and keypoints.

    Image x maps to ``image_width - x``; the camera translation follows so
    that the mirrored 3D model projects onto the flipped image.
    """
    pose, orient = mirror_pose(estimate.pose, estimate.global_orient)
    cam = WeakPerspectiveCamera(
        estimate.camera.scale, [image_width - estimate.camera.translation[0], estimate.camera.translation[1]]
    )
    kp = None
    if estimate.keypoints2d is not None:
        kp = estimate.keypoints2d.copy()
        kp[:, 0] = image_width - kp[:, 0]
    part = {"left_hand": "right_hand", "right_hand": "left_hand"}.get(estimate.part, estimate.part)
    return PartEstimate(part, orient, pose, estimate.shape.copy(), cam, kp, estimate.expression)


def truncate_expression(expression, size=10):
    """Keep the leading ``size`` expression coefficients."""
    expression = np.asarray(expression, dtype=float).reshape(-1)
    if expression.size < size:
        raise TooShort(f"expression has {expression.size} coefficients, need at least {size}")
    return expression[:size].copy()


def hand_wrist_2d(submodel, estimate):
    """Wrist location of a hand estimate in image pixels.

    Uses the wrist keypoint when it is confidently detected, otherwise
    projects the posed hand model's wrist with the hand camera.
    """
    kp = estimate.keypoints2d
    if kp is not None and len(kp) and kp[0, 2] > 0:
        return kp[0, :2].copy()
    mesh = submodel.pose(estimate)
    return project(estimate.camera, mesh.joints3d[0])
