"""Small procedurally generated humanoid.

The mesh is a set of vertex rings: one ring centred on every joint and
keypoint, skinned rigidly to the joint it moves with, plus rings sampled
along each bone with blended weights.  The joint regressor averages each
joint's ring, so regressed joints coincide with the kinematic joint centres
for every pose and shape.  Geometry, bases and limits are mirror-symmetric
about the x = 0 plane (left side at +x).
"""

from dataclasses import dataclass

import numpy as np

from .model import KinematicTree, ModelTemplate, PoseState

_MIRROR = np.array([-1.0, 1.0, 1.0])


@dataclass(frozen=True)
class ToyConfig:
    n_fingers: int = 2
    finger_joints: int = 3
    num_shape: int = 10
    num_expression: int = 10
    ring_vertices: int = 4
    bone_samples: int = 2
    jitter: float = 0.01
    shape_scale: float = 0.015
    expression_scale: float = 0.005


# name, parent, part, left-side (or midline) rest position, limits (lo, hi) per axis
_BODY = [
    ("pelvis", None, (0.0, 0.92, 0.0), [(-0.4, 0.4)] * 3),
    ("spine", "pelvis", (0.0, 1.15, 0.0), [(-0.4, 0.4)] * 3),
    ("neck", "spine", (0.0, 1.42, 0.0), [(-0.4, 0.4)] * 3),
    ("head", "neck", (0.0, 1.52, 0.0), [(-0.4, 0.4)] * 3),
    ("left_shoulder", "spine", (0.17, 1.38, 0.0), [(-0.9, 0.9)] * 3),
    ("left_elbow", "left_shoulder", (0.44, 1.38, 0.0), [(-0.3, 0.3), (-2.0, -0.3), (-0.3, 0.3)]),
    ("left_wrist", "left_elbow", (0.70, 1.38, 0.0), [(-0.8, 0.8)] * 3),
    ("left_hip", "pelvis", (0.09, 0.88, 0.0), [(-0.6, 0.6)] * 3),
]
_JAW = ("jaw", "head", (0.0, 1.50, 0.04), [(-0.3, 0.3)] * 3)
_TIPS = [
    ("left_foot", "left_hip", (0.10, 0.05, 0.02)),
    ("head_top", "head", (0.0, 1.68, 0.0)),
    ("jaw_tip", "jaw", (0.0, 1.45, 0.10)),
]


def _mirror_name(name):
    if name.startswith("left_"):
        return "right_" + name[5:]
    if name.startswith("right_"):
        return "left_" + name[6:]
    return name


def _mirror_limits(limits):
    (xl, xh), (yl, yh), (zl, zh) = limits
    return [(xl, xh), (-yh, -yl), (-zh, -zl)]


def _skeleton(config):
    """Joint and tip definitions in template order (parents before children)."""
    body = []
    for name, parent, pos, lim in _BODY:
        body.append((name, parent, "body", np.array(pos), lim))
        if name.startswith("left_"):
            body.append(
                (_mirror_name(name), _mirror_name(parent), "body", np.array(pos) * _MIRROR, _mirror_limits(lim))
            )
    order = [
        "pelvis", "spine", "neck", "head", "left_shoulder", "left_elbow", "left_wrist",
        "right_shoulder", "right_elbow", "right_wrist", "left_hip", "right_hip",
    ]  # fmt: skip
    by_name = {b[0]: b for b in body}
    joints = [by_name[n] for n in order]
    joints.append((_JAW[0], _JAW[1], "face", np.array(_JAW[2]), _JAW[3]))
    tips = []
    for name, joint, pos in _TIPS:
        tips.append((name, joint, np.array(pos)))
        if name.startswith("left_"):
            tips.append((_mirror_name(name), _mirror_name(joint), np.array(pos) * _MIRROR))

    wrist = by_name["left_wrist"][3]
    left_fingers, left_tips = [], []
    n = config.n_fingers
    for f in range(n):
        spread = 0.0 if n == 1 else f / (n - 1)
        base = wrist + np.array([0.06, -0.01 * spread, 0.03 - 0.05 * spread])
        direction = np.array([1.0, -0.1, 0.5 - 0.7 * spread])
        direction /= np.linalg.norm(direction)
        parent = "left_wrist"
        for k in range(config.finger_joints):
            name = f"left_finger{f}_{k + 1}"
            lim = [(-0.3, 0.3), (-0.3, 0.3), (-1.2, 0.2)]
            left_fingers.append((name, parent, "left_hand", base + 0.028 * k * direction, lim))
            parent = name
        left_tips.append((f"left_finger{f}_tip", parent, base + 0.028 * config.finger_joints * direction))

    for side, tag in (("left", "left_hand"), ("right", "right_hand")):
        for name, parent, _, pos, lim in left_fingers:
            if side == "left":
                joints.append((name, parent, tag, pos, lim))
            else:
                joints.append((_mirror_name(name), _mirror_name(parent), tag, pos * _MIRROR, _mirror_limits(lim)))
    for name, joint, pos in left_tips:
        tips.append((name, joint, pos))
    for name, joint, pos in left_tips:
        tips.append((_mirror_name(name), _mirror_name(joint), pos * _MIRROR))
    return joints, tips


def _ring_frame(direction):
    d = direction / np.linalg.norm(direction)
    ref = np.array([0.0, 0.0, 1.0]) if abs(d[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    u = np.cross(d, ref)
    u /= np.linalg.norm(u)
    return u, np.cross(d, u)


def _ring(center, direction, radius, count):
    u, v = _ring_frame(direction)
    angles = 2.0 * np.pi * np.arange(count) / count
    return center + radius * (np.cos(angles)[:, None] * u + np.sin(angles)[:, None] * v)


def _mirror_map(vertices, tol=1e-9):
    mirrored = vertices * _MIRROR
    d = np.linalg.norm(vertices[None, :, :] - mirrored[:, None, :], axis=-1)
    m = np.argmin(d, axis=1)
    if d[np.arange(len(m)), m].max() > tol:
        raise AssertionError("toy geometry is not mirror-symmetric")
    return m


def _symmetrize(field, mirror):
    """Average a per-vertex vector field with its mirror image."""
    flip = _MIRROR.reshape((1, 3) + (1,) * (field.ndim - 2))
    return 0.5 * (field + field[mirror] * flip)


def make_toy_model(config=None, seed=0):
    """Deterministic toy humanoid satisfying every template invariant."""
    config = config or ToyConfig()
    rng = np.random.default_rng(seed)
    joints, tips = _skeleton(config)
    names = [j[0] for j in joints]
    index = {n: i for i, n in enumerate(names)}
    J = len(joints)
    parent = np.array([-1 if j[1] is None else index[j[1]] for j in joints])
    tags = [j[2] for j in joints]

    # symmetric jitter of the rest skeleton
    jitter = {}
    for name, *_ in joints + tips:
        if name in jitter:
            continue
        delta = rng.normal(0.0, config.jitter, 3)
        if _mirror_name(name) == name:
            delta[0] = 0.0
            jitter[name] = delta
        else:
            jitter[name] = delta
            jitter[_mirror_name(name)] = delta * _MIRROR
    pos = {j[0]: j[3] + jitter[j[0]] for j in joints}
    pos.update({t[0]: t[2] + jitter[t[0]] for t in tips})
    owner = {j[0]: j[0] for j in joints}
    owner.update({t[0]: t[1] for t in tips})
    point_parent = {j[0]: j[1] for j in joints}
    point_parent.update({t[0]: t[1] for t in tips})

    radius = {"body": 0.05, "face": 0.035, "left_hand": 0.008, "right_hand": 0.008}
    wrists = {index["left_wrist"], index["right_wrist"]}

    verts, weights, anchors = [], [], []  # anchors: (point_a, point_b, t) for shape interpolation
    ring_ids = {}
    for name in names + [t[0] for t in tips]:
        j = index[owner[name]]
        par = point_parent[name]
        direction = pos[name] - pos[par] if par is not None else np.array([0.0, 1.0, 0.0])
        ring = _ring(pos[name], direction, radius[tags[j]], config.ring_vertices)
        ring_ids[name] = list(range(len(verts), len(verts) + len(ring)))
        for x in ring:
            w = np.zeros(J)
            w[j] = 1.0
            verts.append(x)
            weights.append(w)
            anchors.append((name, name, 0.0))

    ts = np.arange(1, config.bone_samples + 1) / (config.bone_samples + 1)
    for name in names[1:] + [t[0] for t in tips]:
        p_name = point_parent[name]
        p = index[p_name]
        direction = pos[name] - pos[p_name]
        child_joint = index.get(name) if name in index else None
        for t in ts:
            center = pos[p_name] + t * direction
            ring = _ring(center, direction, radius[tags[p]], config.ring_vertices)
            w = np.zeros(J)
            w[p] = 1.0
            grand = parent[p]
            if t < 0.5 and grand >= 0 and p not in wrists:
                w[p], w[grand] = 0.75, 0.25
            elif t > 0.5 and child_joint is not None:
                w[p], w[child_joint] = 0.75, 0.25
            for x in ring:
                verts.append(x)
                weights.append(w.copy())
                anchors.append((p_name, name, t))

    verts = np.array(verts)
    weights = np.array(weights)
    V = len(verts)
    mirror = _mirror_map(verts)

    point_names = names + [t[0] for t in tips]
    point_index = {n: i for i, n in enumerate(point_names)}
    interp = np.zeros((V, len(point_names)))
    for i, (a, b, t) in enumerate(anchors):
        interp[i, point_index[a]] += 1.0 - t
        interp[i, point_index[b]] += t

    def displacement_basis(count, scale, vertex_mask):
        basis = np.zeros((V, 3, count))
        for c in range(count):
            delta = rng.normal(0.0, scale, (len(point_names), 3))
            field = interp @ delta + rng.normal(0.0, 0.2 * scale, (V, 3))
            field[~vertex_mask] = 0.0
            basis[:, :, c] = _symmetrize(field, mirror)
        return basis

    hand_sets = {
        side: {index[f"{side}_wrist"]} | {i for i, t in enumerate(tags) if t == f"{side}_hand"}
        for side in ("left", "right")
    }
    face_set = {index["head"], index["jaw"]}

    def all_weight_in(joint_set):
        cols = sorted(joint_set)
        return np.isclose(weights[:, cols].sum(axis=1), 1.0)

    parts = {
        "left_hand": np.flatnonzero(all_weight_in(hand_sets["left"])),
        "right_hand": np.flatnonzero(all_weight_in(hand_sets["right"])),
        "face": np.flatnonzero(all_weight_in(face_set)),
    }
    taken = np.zeros(V, dtype=bool)
    for ids in parts.values():
        taken[ids] = True
    parts["body"] = np.flatnonzero(~taken)
    face_mask = np.zeros(V, dtype=bool)
    face_mask[parts["face"]] = True

    shape_basis = displacement_basis(config.num_shape, config.shape_scale, np.ones(V, dtype=bool))
    expression_basis = displacement_basis(config.num_expression, config.expression_scale, face_mask)

    K = len(point_names)
    regressor = np.zeros((K, V))
    for k, name in enumerate(point_names):
        regressor[k, ring_ids[name]] = 1.0 / len(ring_ids[name])

    limits = np.array([j[4] for j in joints], dtype=float)
    tree = KinematicTree(parent, names, tags)
    return ModelTemplate(
        rest_vertices=verts,
        shape_basis=shape_basis,
        expression_basis=expression_basis,
        skinning_weights=weights,
        joint_regressor=regressor,
        tree=tree,
        keypoint_names=tuple(point_names),
        keypoint_joint=np.array([index[owner[n]] for n in point_names]),
        angle_limits=limits,
        part_vertices=parts,
    )


def vertex_mirror_map(template):
    """Index of each vertex's mirror image (requires a symmetric template)."""
    return _mirror_map(template.rest_vertices, tol=1e-6)


def joint_mirror_map(template):
    return np.array([template.joint_index(_mirror_name(n)) for n in template.tree.joint_names])


def sample_pose(template, rng, scale=1.0):
    """Pose drawn uniformly inside the template's angle limits (shrunk about their midpoint by ``scale``)."""
    lo = template.angle_limits[..., 0]
    hi = template.angle_limits[..., 1]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo) * scale
    rot = rng.uniform(mid - half, mid + half)
    return PoseState.from_rotations(rot, np.zeros(template.num_shape), np.zeros(template.num_expression))
