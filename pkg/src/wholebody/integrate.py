"""Copy-paste integration of part estimates into one whole-body pose."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, MissingPart
from .model import PoseState, check_joint, global_rotations
from .parts import HANDS, PartEstimate, check_estimate, part_joints, truncate_expression
from .rotation import rodrigues, rodrigues_inverse

DEFAULT_HAND_CONFIDENCE = 0.3


@dataclass(eq=False)
class WholeBodyResult:
    pose: PoseState
    camera: object
    provenance: dict = field(default_factory=dict)  # joint name -> source part or "default"

    def copy(self):
        return WholeBodyResult(self.pose.copy(), self.camera.copy(), dict(self.provenance))


def global_orientation_of_joint(template, pose, joint):
    joint = check_joint(template, joint)
    return global_rotations(template, pose)[joint]


def _parent_rotation(template, pose, joint):
    parent = int(template.tree.parent[joint])
    if parent < 0:
        return np.eye(3)
    chain = template.tree.chain(parent)
    R = np.eye(3)
    for Rl in rodrigues(pose.rotations()[chain]):
        R = R @ Rl
    return R


def local_from_global(template, pose, joint, target_global):
    """Local axis-angle that gives ``joint`` the global rotation ``target_global``.

    The rest of ``pose`` (in particular every ancestor) is held fixed.
    """
    joint = check_joint(template, joint)
    target_global = np.asarray(target_global, dtype=float)
    parent_R = _parent_rotation(template, pose, joint)
    return rodrigues_inverse(parent_R.T @ target_global)


def global_from_local(template, pose, joint):
    """Global rotation of ``joint`` from its local rotation and its ancestors."""
    joint = check_joint(template, joint)
    return _parent_rotation(template, pose, joint) @ rodrigues(pose.get_joint(joint))


def _hand_usable(estimate, threshold):
    return estimate is not None and estimate.mean_confidence() >= threshold


def copy_paste(body, left=None, right=None, face=None, template=None, hand_confidence=DEFAULT_HAND_CONFIDENCE):
    """Transplant part estimates into a whole-body pose.

    Body orientation, pose, shape and camera come from ``body``.  Finger
    rotations come from the hand estimates, and each wrist gets the local
    rotation that reproduces the hand's global orientation under the body's
    arm chain.  The face contributes its jaw rotation and the leading
    expression coefficients.  Missing or low-confidence hands keep the body
    wrist and flat fingers.
    """
    if template is None:
        raise TypeError("copy_paste needs the model template")
    if body is None or body.part != "body":
        raise MissingPart("copy_paste needs a body estimate")
    check_estimate(template, body)
    tree = template.tree
    pose = PoseState.zeros(template)
    pose.global_orient = body.global_orient.copy()
    provenance = {name: "default" for name in tree.joint_names}
    provenance[tree.joint_names[0]] = "body"
    for j, aa in zip(part_joints(template, "body"), body.pose):
        pose.joint_rotations[j - 1] = aa
        provenance[tree.joint_names[j]] = "body"
    if body.shape.size:
        pose.shape = body.shape.copy()

    for part, est in zip(HANDS, (left, right)):
        if est is None:
            continue
        if est.part != part:
            raise DimensionMismatch(f"expected a {part} estimate, got {est.part}")
        check_estimate(template, est)
        if not _hand_usable(est, hand_confidence):
            continue
        fingers = part_joints(template, part)
        for j, aa in zip(fingers, est.pose):
            pose.joint_rotations[j - 1] = aa
            provenance[tree.joint_names[j]] = part
        wrist = int(tree.parent[fingers[0]])
        pose.joint_rotations[wrist - 1] = local_from_global(template, pose, wrist, rodrigues(est.global_orient))
        provenance[tree.joint_names[wrist]] = part

    if face is not None:
        if face.part != "face":
            raise DimensionMismatch(f"expected a face estimate, got {face.part}")
        check_estimate(template, face)
        for j, aa in zip(part_joints(template, "face"), face.pose):
            pose.joint_rotations[j - 1] = aa
            provenance[tree.joint_names[j]] = "face"
        if face.expression is not None and template.num_expression:
            pose.expression = truncate_expression(face.expression, template.num_expression)
    return WholeBodyResult(pose, body.camera.copy(), provenance)


def split_parts(template, result):
    """Part estimates that ``copy_paste`` would turn back into ``result``."""
    pose = result.pose
    R = global_rotations(template, pose)
    out = {}
    body = part_joints(template, "body")
    out["body"] = PartEstimate(
        "body", pose.global_orient, np.array([pose.get_joint(j) for j in body]), pose.shape, result.camera.copy()
    )
    for part in HANDS:
        fingers = part_joints(template, part)
        if not fingers:
            continue
        wrist = int(template.tree.parent[fingers[0]])
        out[part] = PartEstimate(
            part,
            rodrigues_inverse(R[wrist]),
            np.array([pose.get_joint(j) for j in fingers]),
            pose.shape,
            result.camera.copy(),
        )
    jaw = part_joints(template, "face")
    if jaw:
        out["face"] = PartEstimate(
            "face", np.zeros(3), np.array([pose.get_joint(j) for j in jaw]), np.zeros(0),
            result.camera.copy(), expression=pose.expression,
        )  # fmt: skip
    return out
