"""Parametric skinned body model.

A :class:`ModelTemplate` holds a rest mesh, linear shape and expression
bases, linear blend skinning weights and a joint regressor.  The first
``J`` regressor rows are the kinematic joints; any further rows are extra
keypoints (finger tips, feet, ...) attached to a kinematic joint.

Posing follows the usual skinned-model recipe: blend shapes are applied to
the rest mesh, joint centres are regressed from the shaped mesh, forward
kinematics turns per-joint axis-angle rotations into global rigid
transforms, and vertices are blended from those transforms.
"""

import functools
from dataclasses import dataclass, field

import numpy as np

from .errors import BadIndex, DimensionMismatch, MissingPart, ModelFormatError
from .rotation import rodrigues

PARTS = ("body", "left_hand", "right_hand", "face")
ROOT = -1


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class KinematicTree:
    parent: np.ndarray
    joint_names: tuple
    part_tags: tuple

    def __post_init__(self):
        object.__setattr__(self, "parent", _frozen(self.parent, dtype=np.int64))
        object.__setattr__(self, "joint_names", tuple(self.joint_names))
        object.__setattr__(self, "part_tags", tuple(self.part_tags))
        self.validate()

    def validate(self):
        n = len(self.parent)
        if len(self.joint_names) != n or len(self.part_tags) != n:
            raise ModelFormatError(
                f"tree has {n} parents, {len(self.joint_names)} names, {len(self.part_tags)} part tags",
                "joints",
            )
        roots = [j for j in range(n) if self.parent[j] == ROOT]
        if roots != [0]:
            raise ModelFormatError(f"expected exactly one root at index 0, found roots {roots}", "joints")
        for j in range(n):
            if self.part_tags[j] not in PARTS:
                raise ModelFormatError(f"unknown part tag {self.part_tags[j]!r}", f"joints[{j}].part")
            p = int(self.parent[j])
            if j == 0:
                continue
            if not 0 <= p < n:
                raise ModelFormatError(f"parent index {p} out of range", f"joints[{j}].parent")
            if p >= j:
                # walk up to tell a cycle apart from a mere ordering violation
                seen, k = {j}, p
                while k != ROOT and k not in seen:
                    seen.add(k)
                    k = int(self.parent[k])
                if k != ROOT:
                    raise ModelFormatError(
                        f"kinematic cycle through joint {self.joint_names[j]!r}", f"joints[{j}].parent"
                    )
                raise ModelFormatError(
                    f"joint {self.joint_names[j]!r} precedes its parent {self.joint_names[p]!r}",
                    f"joints[{j}].parent",
                )
        if len(set(self.joint_names)) != n:
            raise ModelFormatError("joint names are not unique", "joints")

    @property
    def num_joints(self):
        return len(self.parent)

    def index(self, name):
        try:
            return self.joint_names.index(name)
        except ValueError:
            raise MissingPart(f"no joint named {name!r}") from None

    def joints_of(self, part):
        return [j for j, t in enumerate(self.part_tags) if t == part]

    def chain(self, joint):
        """Joint indices from the root down to ``joint`` (inclusive)."""
        out = []
        j = joint
        while j != ROOT:
            out.append(j)
            j = int(self.parent[j])
        return out[::-1]

    def children(self, joint):
        return [j for j in range(self.num_joints) if self.parent[j] == joint]


@dataclass(frozen=True, eq=False)
class ModelTemplate:
    """Immutable model definition; safe to share between threads."""

    rest_vertices: np.ndarray  # (V, 3)
    shape_basis: np.ndarray  # (V, 3, B)
    expression_basis: np.ndarray  # (V, 3, E)
    skinning_weights: np.ndarray  # (V, J)
    joint_regressor: np.ndarray  # (K, V), first J rows are the kinematic joints
    tree: KinematicTree
    keypoint_names: tuple = ()
    keypoint_joint: np.ndarray = None  # (K,) joint each keypoint moves with
    angle_limits: np.ndarray = None  # (J, 3, 2) per-component axis-angle bounds
    part_vertices: dict = field(default_factory=dict)

    def __post_init__(self):
        J = self.tree.num_joints
        K = self.joint_regressor.shape[0]
        names = tuple(self.keypoint_names) or tuple(self.tree.joint_names)
        kp_joint = np.arange(J) if self.keypoint_joint is None else self.keypoint_joint
        limits = self.angle_limits
        if limits is None:
            limits = np.tile(np.array([-np.pi, np.pi]), (J, 3, 1))
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("rest_vertices", _frozen(self.rest_vertices))
        set_("shape_basis", _frozen(self.shape_basis))
        set_("expression_basis", _frozen(self.expression_basis))
        set_("skinning_weights", _frozen(self.skinning_weights))
        set_("joint_regressor", _frozen(self.joint_regressor))
        set_("keypoint_names", names)
        set_("keypoint_joint", _frozen(kp_joint, dtype=np.int64))
        set_("angle_limits", _frozen(limits))
        set_("part_vertices", {k: _frozen(v, dtype=np.int64) for k, v in self.part_vertices.items()})
        if K < J:
            raise ModelFormatError(f"regressor has {K} rows but the tree has {J} joints", "joint_regressor")
        self.validate()

    @property
    def num_vertices(self):
        return self.rest_vertices.shape[0]

    @property
    def num_joints(self):
        return self.tree.num_joints

    @property
    def num_keypoints(self):
        return self.joint_regressor.shape[0]

    @property
    def num_shape(self):
        return self.shape_basis.shape[2]

    @property
    def num_expression(self):
        return self.expression_basis.shape[2]

    def validate(self, atol=1e-6):
        V, J, K = self.num_vertices, self.num_joints, self.num_keypoints
        checks = [
            ("rest_vertices", self.rest_vertices.shape, (V, 3)),
            ("shape_basis", self.shape_basis.shape[:2], (V, 3)),
            ("expression_basis", self.expression_basis.shape[:2], (V, 3)),
            ("skinning_weights", self.skinning_weights.shape, (V, J)),
            ("joint_regressor", self.joint_regressor.shape, (K, V)),
            ("keypoints", (len(self.keypoint_names), len(self.keypoint_joint)), (K, K)),
            ("angle_limits", self.angle_limits.shape, (J, 3, 2)),
        ]
        for loc, got, want in checks:
            if tuple(got) != tuple(want):
                raise ModelFormatError(f"shape {tuple(got)} does not match expected {tuple(want)}", loc)
        W = self.skinning_weights
        if np.any(W < 0):
            v = int(np.argwhere(W < 0)[0, 0])
            raise ModelFormatError("negative skinning weight", f"skinning_weights[{v}]")
        bad = np.flatnonzero(np.abs(W.sum(axis=1) - 1.0) > atol)
        if bad.size:
            raise ModelFormatError("skinning weights do not sum to 1", f"skinning_weights[{bad[0]}]")
        bad = np.flatnonzero(np.abs(self.joint_regressor.sum(axis=1) - 1.0) > atol)
        if bad.size:
            raise ModelFormatError("regressor row does not sum to 1", f"joint_regressor[{bad[0]}]")
        if np.any((self.keypoint_joint < 0) | (self.keypoint_joint >= J)):
            raise ModelFormatError("keypoint attached to unknown joint", "keypoints")
        if not np.array_equal(self.keypoint_joint[:J], np.arange(J)):
            raise ModelFormatError("first J keypoints must be the kinematic joints", "keypoints")
        for part, ids in self.part_vertices.items():
            if part not in PARTS:
                raise ModelFormatError(f"unknown part {part!r}", "part_vertices")
            if ids.size and (ids.min() < 0 or ids.max() >= V):
                raise ModelFormatError("vertex index out of range", f"part_vertices.{part}")
        for arr, loc in [
            (self.rest_vertices, "rest_vertices"),
            (self.shape_basis, "shape_basis"),
            (self.expression_basis, "expression_basis"),
        ]:
            if not np.all(np.isfinite(arr)):
                raise ModelFormatError("non-finite values", loc)

    def joint_index(self, name):
        return self.tree.index(name)

    def keypoint_index(self, name):
        try:
            return self.keypoint_names.index(name)
        except ValueError:
            raise MissingPart(f"no keypoint named {name!r}") from None

    def keypoints_of(self, part):
        tags = self.tree.part_tags
        return [k for k, j in enumerate(self.keypoint_joint) if tags[j] == part]

    def rest_joints(self):
        return regress_joints(self, self.rest_vertices)[: self.num_joints]

    def height(self):
        y = self.rest_vertices[:, 1]
        return float(y.max() - y.min())

    def zero_pose(self):
        return PoseState.zeros(self)


@dataclass(eq=False)
class PoseState:
    """Whole-body parameters.

    ``joint_rotations[j - 1]`` is the local axis-angle rotation of joint ``j``;
    the root rotation lives in ``global_orient``.
    """

    global_orient: np.ndarray
    joint_rotations: np.ndarray
    shape: np.ndarray
    expression: np.ndarray

    def __post_init__(self):
        self.global_orient = np.asarray(self.global_orient, dtype=float).reshape(3)
        self.joint_rotations = np.asarray(self.joint_rotations, dtype=float).reshape(-1, 3)
        self.shape = np.asarray(self.shape, dtype=float).reshape(-1)
        self.expression = np.asarray(self.expression, dtype=float).reshape(-1)

    @classmethod
    def zeros(cls, template):
        return cls(
            np.zeros(3),
            np.zeros((template.num_joints - 1, 3)),
            np.zeros(template.num_shape),
            np.zeros(template.num_expression),
        )

    @classmethod
    def from_rotations(cls, rotations, shape, expression):
        rotations = np.asarray(rotations, dtype=float)
        return cls(rotations[0], rotations[1:], shape, expression)

    def rotations(self):
        """All ``J`` local rotations with the root first, shape ``(J, 3)``."""
        return np.vstack([self.global_orient[None], self.joint_rotations])

    def copy(self):
        return PoseState(
            self.global_orient.copy(), self.joint_rotations.copy(), self.shape.copy(), self.expression.copy()
        )

    def get_joint(self, j):
        return self.global_orient.copy() if j == 0 else self.joint_rotations[j - 1].copy()

    def set_joint(self, j, aa):
        if j == 0:
            self.global_orient = np.asarray(aa, dtype=float).reshape(3).copy()
        else:
            self.joint_rotations[j - 1] = aa

    def check(self, template):
        if self.joint_rotations.shape != (template.num_joints - 1, 3):
            raise DimensionMismatch(
                f"pose has {self.joint_rotations.shape[0]} joint rotations, model expects {template.num_joints - 1}"
            )
        if self.shape.shape != (template.num_shape,):
            raise DimensionMismatch(f"pose has {self.shape.size} shape coefficients, model expects {template.num_shape}")
        if self.expression.shape != (template.num_expression,):
            raise DimensionMismatch(
                f"pose has {self.expression.size} expression coefficients, model expects {template.num_expression}"
            )

    def allclose(self, other, atol=1e-9):
        return all(
            a.shape == b.shape and np.allclose(a, b, atol=atol, rtol=0)
            for a, b in [
                (self.global_orient, other.global_orient),
                (self.joint_rotations, other.joint_rotations),
                (self.shape, other.shape),
                (self.expression, other.expression),
            ]
        )


@dataclass(eq=False)
class PosedMesh:
    vertices: np.ndarray  # (V, 3)
    joints3d: np.ndarray  # (K, 3)
    global_transforms: np.ndarray  # (J, 4, 4)

    @property
    def rotations(self):
        return self.global_transforms[:, :3, :3]

    @property
    def translations(self):
        return self.global_transforms[:, :3, 3]


def shaped_vertices(template, shape, expression):
    v = template.rest_vertices + template.shape_basis @ shape
    if template.num_expression:
        v = v + template.expression_basis @ expression
    return v


def regress_joints(template, vertices):
    vertices = np.asarray(vertices, dtype=float)
    if vertices.shape[-2:] != (template.num_vertices, 3):
        raise DimensionMismatch(f"expected ({template.num_vertices}, 3) vertices, got {vertices.shape}")
    return template.joint_regressor @ vertices


@functools.lru_cache(maxsize=64)
def _levels(parent_bytes):
    parents = np.frombuffer(parent_bytes, dtype=np.int64)
    depth = np.zeros(len(parents), dtype=int)
    for j in range(1, len(parents)):
        depth[j] = depth[parents[j]] + 1
    return tuple(np.flatnonzero(depth == d) for d in range(1, depth.max(initial=0) + 1))


def global_chain(parents, rest_joints, local_rotations):
    """Compose local rotations down the tree.

    Returns global rotations ``(J, 3, 3)`` and joint positions ``(J, 3)``.
    The root rotates about its own rest location; every other joint keeps its
    rest offset from its parent.  Joints at the same depth are processed
    together.
    """
    parents = np.asarray(parents, dtype=np.int64)
    R = np.empty((len(parents), 3, 3))
    p = np.empty((len(parents), 3))
    R[0] = local_rotations[0]
    p[0] = rest_joints[0]
    for idx in _levels(parents.tobytes()):
        q = parents[idx]
        R[idx] = R[q] @ local_rotations[idx]
        p[idx] = p[q] + np.einsum("jab,jb->ja", R[q], rest_joints[idx] - rest_joints[q])
    return R, p


def global_rotations(template, pose):
    """Global rotation of every joint; cheaper than full FK (no shape or translation)."""
    pose.check(template)
    Rl = rodrigues(pose.rotations())
    parents = np.asarray(template.tree.parent, dtype=np.int64)
    R = np.empty_like(Rl)
    R[0] = Rl[0]
    for idx in _levels(parents.tobytes()):
        R[idx] = R[parents[idx]] @ Rl[idx]
    return R


def _homogeneous(R, p):
    T = np.zeros(R.shape[:-2] + (4, 4))
    T[..., :3, :3] = R
    T[..., :3, 3] = p
    T[..., 3, 3] = 1.0
    return T


def forward_kinematics(template, pose):
    """Global rigid transforms ``(J, 4, 4)`` of every joint.

    The translation column is the posed joint centre; joints are anchored at
    their shaped rest locations.
    """
    pose.check(template)
    shaped = shaped_vertices(template, pose.shape, pose.expression)
    rest_joints = template.joint_regressor[: template.num_joints] @ shaped
    R, p = global_chain(template.tree.parent, rest_joints, rodrigues(pose.rotations()))
    return _homogeneous(R, p)


def skin(shaped, rest_joints, weights, R, p):
    """Linear blend skinning of ``shaped`` vertices with global joint transforms."""
    # x_ij = R_j (v_i - q_j) + p_j, blended with w_ij
    offsets = p - np.einsum("jab,jb->ja", R, rest_joints)  # (J, 3)
    blended_R = np.einsum("vj,jab->vab", weights, R)
    return np.einsum("vab,vb->va", blended_R, shaped) + weights @ offsets


def pose_model(template, pose):
    pose.check(template)
    shaped = shaped_vertices(template, pose.shape, pose.expression)
    rest_joints = template.joint_regressor[: template.num_joints] @ shaped
    R, p = global_chain(template.tree.parent, rest_joints, rodrigues(pose.rotations()))
    vertices = skin(shaped, rest_joints, template.skinning_weights, R, p)
    return PosedMesh(vertices, template.joint_regressor @ vertices, _homogeneous(R, p))


def check_joint(template, joint):
    if not isinstance(joint, (int, np.integer)) or not 0 <= joint < template.num_joints:
        raise BadIndex(f"joint index {joint!r} out of range for {template.num_joints} joints")
    return int(joint)

