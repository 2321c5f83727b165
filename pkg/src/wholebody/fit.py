"""Optimization-based integration.

Whole-body parameters are fitted to 2D keypoints, hand-module meshes and a
shape prior in two stages.  Every cost term is a sum of squares, so the
objective exposes its residual vector and an analytic Jacobian; the total
cost gradient is ``2 J^T r``.

Parameter vector layout: ``[root + joint rotations (3J), shape (B),
expression (E), camera scale, camera tx, camera ty]``.
"""

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .camera import WeakPerspectiveCamera, project
from .errors import DimensionMismatch, NoEvidence, NonFinite
from .integrate import WholeBodyResult
from .model import PoseState, global_chain, pose_model, shaped_vertices, skin
from .parts import HANDS, extract_hand_submodel
from .rotation import canonicalize, left_jacobian, rodrigues, skew

log = logging.getLogger(__name__)

# Hand-module training losses use these weights (theta, 3D, 2D, shape).
TRAINING_LOSS_WEIGHTS = (10.0, 100.0, 10.0, 0.1)


@dataclass
class FitConfig:
    stage1_iters: int = 50
    stage2_iters: int = 50
    step_size: float = 1.0
    w2d: float = 1.0
    wmesh: float = 1.0
    wpri: float = 1e-3
    w3d: float = 1.0
    fd_step: float = 1e-5
    convergence_tol: float = 1e-10
    gradient: str = "analytic"  # "analytic" (damped Gauss-Newton) or "fd" (finite-difference steepest descent)
    damping: float = 1e-3

    def __post_init__(self):
        for name in ("step_size", "fd_step", "convergence_tol", "damping"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("w2d", "wmesh", "wpri", "w3d"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.stage1_iters < 1 or self.stage2_iters < 1:
            raise ValueError("iteration counts must be at least 1")
        if self.gradient not in ("analytic", "fd"):
            raise ValueError(f"unknown gradient mode {self.gradient!r}")

    @property
    def term_weights(self):
        return {"w2d": self.w2d, "wmesh": self.wmesh, "wpri": self.wpri, "w3d": self.w3d}


@dataclass
class StageReport:
    name: str
    costs: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    skipped: bool = False


@dataclass
class FitReport:
    stages: list = field(default_factory=list)
    final_terms: dict = field(default_factory=dict)
    total_cost: float = 0.0
    wall_time: float = 0.0

    def to_dict(self):
        return asdict(self)


@dataclass(eq=False)
class Evidence:
    """Observations for a fit: whole-body 2D keypoints ``(K, 3)`` and/or hand estimates."""

    keypoints2d: np.ndarray = None
    hands: dict = field(default_factory=dict)

    def __bool__(self):
        return self.keypoints2d is not None or bool(self.hands)


# ---------------------------------------------------------------- cost terms


def cost_2d(pose, camera, template, keypoints2d):
    """Confidence-weighted squared reprojection error over all keypoints."""
    keypoints2d = np.asarray(keypoints2d, dtype=float)
    if keypoints2d.shape != (template.num_keypoints, 3):
        raise DimensionMismatch(f"expected ({template.num_keypoints}, 3) keypoints, got {keypoints2d.shape}")
    joints = pose_model(template, pose).joints3d
    diff = project(camera, joints) - keypoints2d[:, :2]
    return float(np.sum(keypoints2d[:, 2] * np.sum(diff**2, axis=1)))


def aligned_hand_mesh(hand_estimate, submodel, wholebody_wrist):
    """Hand-module vertices translated so its wrist lands on ``wholebody_wrist``."""
    mesh = submodel.pose(hand_estimate)
    return mesh.vertices - mesh.joints3d[0] + wholebody_wrist


def cost_mesh(wholebody_mesh, hand_estimate, template, side, submodel=None):
    """Squared distance between the whole-body hand and the wrist-aligned hand-module mesh."""
    submodel = submodel or extract_hand_submodel(template, side)
    wrist = int(submodel.joint_ids[0])
    target = aligned_hand_mesh(hand_estimate, submodel, wholebody_mesh.joints3d[wrist])
    diff = wholebody_mesh.vertices[submodel.vertex_ids] - target
    return float(np.sum(diff**2))


def cost_prior(shape):
    shape = np.asarray(shape, dtype=float)
    return float(shape @ shape)


def cost_3d_anchor(joints3d, anchor_joints3d):
    d = np.asarray(joints3d, dtype=float) - np.asarray(anchor_joints3d, dtype=float)
    return float(np.sum(d**2))


def training_losses(pred, gt, weights=TRAINING_LOSS_WEIGHTS):
    """Hand-module training losses.

    ``pred`` and ``gt`` are mappings with ``pose``, ``joints3d`` and
    ``joints2d`` arrays; ``pred`` also carries ``shape``.  Returns the four
    terms and their weighted sum under ``"L"``.
    """
    l_theta = float(np.sum((np.asarray(pred["pose"]) - np.asarray(gt["pose"])) ** 2))
    l_3d = float(np.sum((np.asarray(pred["joints3d"]) - np.asarray(gt["joints3d"])) ** 2))
    l_2d = float(np.sum(np.abs(np.asarray(pred["joints2d"]) - np.asarray(gt["joints2d"]))))
    shape = np.asarray(pred["shape"])
    l_reg = float(shape @ shape)
    out = {"L_theta": l_theta, "L_3D": l_3d, "L_2D": l_2d, "L_reg": l_reg}
    out["L"] = float(np.dot(weights, [l_theta, l_3d, l_2d, l_reg]))
    return out


# ----------------------------------------------------------- parameter layout


class ParamLayout:
    def __init__(self, template):
        self.J = template.num_joints
        self.B = template.num_shape
        self.E = template.num_expression
        self.rot = slice(0, 3 * self.J)
        self.shape = slice(3 * self.J, 3 * self.J + self.B)
        self.expr = slice(self.shape.stop, self.shape.stop + self.E)
        self.cam = slice(self.expr.stop, self.expr.stop + 3)
        self.size = self.cam.stop

    def pack(self, pose, camera):
        return np.concatenate([pose.rotations().ravel(), pose.shape, pose.expression, camera.as_vector()])

    def unpack(self, x):
        pose = PoseState.from_rotations(x[self.rot].reshape(self.J, 3), x[self.shape], x[self.expr])
        return pose, WeakPerspectiveCamera.from_vector(x[self.cam])

    def mask(self, joints=(), shape=False, expression=False, camera=False):
        m = np.zeros(self.size, dtype=bool)
        for j in joints:
            m[3 * j : 3 * j + 3] = True
        m[self.shape] = shape
        m[self.expr] = expression
        m[self.cam] = camera
        return m


class Objective:
    """Weighted least-squares objective over the packed parameter vector.

    Residual blocks (each already multiplied by the square root of its
    weight): 2D reprojection, hand mesh, shape prior, 3D joint anchor.
    """

    def __init__(self, template, layout, free, keypoints2d=None, hands=None, weights=None, anchor=None):
        self.template = template
        self.layout = layout
        self.free = np.asarray(free, dtype=bool)
        w = {"w2d": 1.0, "wmesh": 1.0, "wpri": 0.0, "w3d": 0.0}
        w.update(weights or {})
        self.weights = w
        reg = template.joint_regressor

        self.kp_ids = np.zeros(0, dtype=int)
        if keypoints2d is not None and w["w2d"] > 0:
            keypoints2d = np.asarray(keypoints2d, dtype=float)
            if keypoints2d.shape != (template.num_keypoints, 3):
                raise DimensionMismatch(f"expected ({template.num_keypoints}, 3) keypoints, got {keypoints2d.shape}")
            if not np.all(np.isfinite(keypoints2d)):
                raise NonFinite("keypoints contain non-finite values")
            self.kp_ids = np.flatnonzero(keypoints2d[:, 2] > 0)
            self.kp_target = keypoints2d[self.kp_ids, :2]
            self.kp_conf = keypoints2d[self.kp_ids, 2]

        self.hands = []
        for part, est in (hands or {}).items() if w["wmesh"] > 0 else ():
            sub = extract_hand_submodel(template, part)
            mesh = sub.pose(est)
            self.hands.append((sub.vertex_ids, int(sub.joint_ids[0]), mesh.vertices - mesh.joints3d[0]))

        self.anchor_ids = np.zeros(0, dtype=int)
        if anchor is not None and w["w3d"] > 0:
            self.anchor_ids, self.anchor_pos = anchor

        needed_kp = np.unique(np.concatenate([self.kp_ids, self.anchor_ids, [h[1] for h in self.hands]]).astype(int))
        support = np.flatnonzero(np.any(reg[needed_kp] != 0, axis=0)) if needed_kp.size else np.zeros(0, int)
        mesh_ids = [h[0] for h in self.hands]
        self.vertex_ids = np.unique(np.concatenate([support] + mesh_ids)).astype(int)
        self.kp_row = {int(k): i for i, k in enumerate(needed_kp)}
        self.needed_kp = needed_kp
        self.sub_reg = reg[np.ix_(needed_kp, self.vertex_ids)]
        pos = {int(v): i for i, v in enumerate(self.vertex_ids)}
        self.hands = [(np.array([pos[int(v)] for v in ids]), wrist, local) for ids, wrist, local in self.hands]
        self.weights_sub = template.skinning_weights[self.vertex_ids]

        free_rot = self.free[layout.rot].reshape(layout.J, 3)
        self.free_joints = np.flatnonzero(free_rot.any(axis=1))
        if not np.array_equal(free_rot[self.free_joints], np.ones((len(self.free_joints), 3), bool)):
            raise ValueError("rotation parameters must be freed per joint")
        basis = np.concatenate([template.shape_basis, template.expression_basis], axis=2)
        coef_free = np.concatenate([self.free[layout.shape], self.free[layout.expr]])
        self.free_coef = np.flatnonzero(coef_free)
        self.basis_free = basis[:, :, self.free_coef]
        self.basis_free_sub = self.basis_free[self.vertex_ids]
        self.dq_free = np.einsum("jv,vac->jac", reg[: layout.J], self.basis_free)
        self.free_cam = np.flatnonzero(self.free[layout.cam])
        self.n_free = int(self.free.sum())

    # -- forward pass

    def _forward(self, x):
        L, t = self.layout, self.template
        a = x[L.rot].reshape(L.J, 3)
        shaped = shaped_vertices(t, x[L.shape], x[L.expr])
        q = t.joint_regressor[: L.J] @ shaped
        Rl = rodrigues(a)
        R, p = global_chain(t.tree.parent, q, Rl)
        v = skin(shaped[self.vertex_ids], q, self.weights_sub, R, p)
        joints = self.sub_reg @ v
        return a, shaped, q, R, p, v, joints

    def _blocks(self, x, joints, v):
        L, w = self.layout, self.weights
        s, tr = x[L.cam][0], x[L.cam][1:]
        blocks = {}
        if self.kp_ids.size:
            J3 = joints[[self.kp_row[int(k)] for k in self.kp_ids]]
            diff = s * J3[:, :2] + tr - self.kp_target
            blocks["2d"] = (np.sqrt(self.kp_conf)[:, None] * diff).ravel()
        if self.hands:
            res = []
            for ids, wrist, local in self.hands:
                res.append((v[ids] - joints[self.kp_row[wrist]] - local).ravel())
            blocks["mesh"] = np.concatenate(res)
        if w["wpri"] > 0:
            blocks["pri"] = x[L.shape].copy()
        if self.anchor_ids.size:
            J3 = joints[[self.kp_row[int(k)] for k in self.anchor_ids]]
            blocks["3d"] = (J3 - self.anchor_pos).ravel()
        return blocks

    _WEIGHT_OF = {"2d": "w2d", "mesh": "wmesh", "pri": "wpri", "3d": "w3d"}

    def terms(self, x):
        """Unweighted term values and the weighted total."""
        *_, v, joints = self._forward(x)
        blocks = self._blocks(x, joints, v)
        terms = {name: float(r @ r) for name, r in blocks.items()}
        total = sum(self.weights[self._WEIGHT_OF[n]] * val for n, val in terms.items())
        return terms, float(total)

    def cost(self, x):
        return self.terms(x)[1]

    def residuals(self, x):
        *_, v, joints = self._forward(x)
        blocks = self._blocks(x, joints, v)
        return np.concatenate(
            [np.sqrt(self.weights[self._WEIGHT_OF[n]]) * r for n, r in blocks.items()] or [np.zeros(0)]
        )

    # -- Jacobian

    def _vertex_jacobian(self, x, a, shaped, q, R, p):
        """d(posed subset vertices)/d(free pose/shape params): ``(n, 3, P_pose)``."""
        L, t = self.layout, self.template
        parents = t.tree.parent
        W = self.weights_sub
        n = len(self.vertex_ids)
        cols = []
        if self.free_joints.size:
            r = shaped[self.vertex_ids]
            X = np.einsum("jab,njb->nja", R, r[:, None, :] - q[None]) + p[None]  # (n, J, 3)
            S = W[:, :, None] * X
            Wacc = W.copy()
            for j in range(L.J - 1, 0, -1):
                S[:, parents[j]] += S[:, j]
                Wacc[:, parents[j]] += Wacc[:, j]
            fj = self.free_joints
            D = S[:, fj] - Wacc[:, fj, None] * p[fj][None]  # (n, F, 3)
            Rpar = np.array([R[parents[k]] if k > 0 else np.eye(3) for k in fj])
            U = Rpar @ left_jacobian(a[fj])  # columns: world axis per component
            dv = -np.einsum("nkab,kbm->nakm", skew(D), U)
            cols.append(dv.reshape(n, 3, -1))
        if self.free_coef.size:
            dq = self.dq_free
            dp = np.empty_like(dq)
            dp[0] = dq[0]
            for j in range(1, L.J):
                k = parents[j]
                dp[j] = dp[k] + R[k] @ (dq[j] - dq[k])
            c = np.einsum("jab,jbc->jac", R, dq) - dp
            Rbar = np.einsum("nj,jab->nab", W, R)
            cols.append(np.einsum("nab,nbc->nac", Rbar, self.basis_free_sub) - np.einsum("nj,jac->nac", W, c))
        if not cols:
            return np.zeros((n, 3, 0))
        return np.concatenate(cols, axis=2)

    def residuals_and_jacobian(self, x):
        """Weighted residual vector and its Jacobian w.r.t. the free parameters."""
        L, w = self.layout, self.weights
        a, shaped, q, R, p, v, joints = self._forward(x)
        blocks = self._blocks(x, joints, v)
        dv = self._vertex_jacobian(x, a, shaped, q, R, p)
        dJ = np.einsum("kn,nap->kap", self.sub_reg, dv)
        n_pose = dv.shape[2]
        s = x[L.cam][0]
        rows, res = [], []
        if "2d" in blocks:
            idx = [self.kp_row[int(k)] for k in self.kp_ids]
            J3 = joints[idx]
            sq = np.sqrt(self.kp_conf)[:, None, None]
            jac = np.zeros((len(idx), 2, self.n_free))
            jac[:, :, :n_pose] = s * dJ[idx, :2]
            cam_cols = {0: J3[:, :2], 1: np.array([1.0, 0.0]), 2: np.array([0.0, 1.0])}
            for i, c in enumerate(self.free_cam):
                jac[:, :, n_pose + i] = cam_cols[int(c)]
            rows.append(np.sqrt(w["w2d"]) * (sq * jac).reshape(-1, self.n_free))
            res.append(np.sqrt(w["w2d"]) * blocks["2d"])
        if "mesh" in blocks:
            for ids, wrist, _ in self.hands:
                jac = np.zeros((len(ids), 3, self.n_free))
                jac[:, :, :n_pose] = dv[ids] - dJ[self.kp_row[wrist]][None]
                rows.append(np.sqrt(w["wmesh"]) * jac.reshape(-1, self.n_free))
            res.append(np.sqrt(w["wmesh"]) * blocks["mesh"])
        if "pri" in blocks:
            jac = np.zeros((L.B, self.n_free))
            n_rot = 3 * len(self.free_joints)
            for i, c in enumerate(self.free_coef):
                if c < L.B:
                    jac[c, n_rot + i] = 1.0
            rows.append(np.sqrt(w["wpri"]) * jac)
            res.append(np.sqrt(w["wpri"]) * blocks["pri"])
        if "3d" in blocks:
            idx = [self.kp_row[int(k)] for k in self.anchor_ids]
            jac = np.zeros((len(idx), 3, self.n_free))
            jac[:, :, :n_pose] = dJ[idx]
            rows.append(np.sqrt(w["w3d"]) * jac.reshape(-1, self.n_free))
            res.append(np.sqrt(w["w3d"]) * blocks["3d"])
        if not rows:
            return np.zeros(0), np.zeros((0, self.n_free))
        return np.concatenate(res), np.vstack(rows)

    def free_order(self):
        """Indices into the full parameter vector in Jacobian column order."""
        L = self.layout
        rot = [3 * j + m for j in self.free_joints for m in range(3)]
        coef = [L.shape.start + c for c in self.free_coef]  # shape and expression are contiguous
        cam = [L.cam.start + c for c in self.free_cam]
        return np.array(rot + coef + cam, dtype=int)

    def gradient(self, x):
        """Analytic gradient of the total cost w.r.t. the free parameters (Jacobian column order)."""
        r, jac = self.residuals_and_jacobian(x)
        return 2.0 * jac.T @ r


def finite_difference_gradient(fn, x, indices, h=1e-5):
    """Central differences of ``fn`` at ``x`` along the given coordinates."""
    g = np.empty(len(indices))
    for i, k in enumerate(indices):
        xp = x.copy()
        xm = x.copy()
        xp[k] += h
        xm[k] -= h
        g[i] = (fn(xp) - fn(xm)) / (2.0 * h)
    return g


def minimize(objective, x0, iters, config, stage):
    """Descent with backtracking line search; only cost-decreasing steps are accepted.

    The search direction is a damped Gauss-Newton step from the analytic
    Jacobian, or steepest descent on a finite-difference gradient when
    ``config.gradient == "fd"``.
    """
    order = objective.free_order()
    x = np.array(x0, dtype=float, copy=True)
    if order.size == 0:
        stage.skipped = True
        return x
    cam_scale = objective.layout.cam.start
    cost = objective.cost(x)
    if not np.isfinite(cost):
        raise NonFinite(f"non-finite cost at the start of stage {stage.name!r}")
    stage.costs.append(cost)
    lam = config.damping
    for it in range(iters):
        if config.gradient == "analytic":
            r, jac = objective.residuals_and_jacobian(x)
            g = jac.T @ r
            A = jac.T @ jac
            # floor keeps null-space directions (e.g. twist about a bone) damped
            scale = np.maximum(np.diag(A), 1e-2 * max(np.mean(np.diag(A)), 1e-12))
        else:
            g = 0.5 * finite_difference_gradient(objective.cost, x, order, config.fd_step)
        if not np.all(np.isfinite(g)):
            raise NonFinite(f"non-finite gradient in stage {stage.name!r}")
        if np.linalg.norm(g) <= 1e-14 * max(1.0, cost):
            stage.converged = True
            break
        accepted = False
        for _ in range(12):
            if config.gradient == "analytic":
                step = np.linalg.solve(A + lam * np.diag(scale), -g)
            else:
                step = -g
            slope = 2.0 * g @ step
            alpha = config.step_size
            while alpha > 1e-12:
                xn = x.copy()
                xn[order] += alpha * step
                if xn[cam_scale] > 0:
                    cn = objective.cost(xn)
                    if np.isfinite(cn) and cn <= cost + 1e-4 * alpha * slope:
                        accepted = True
                        break
                alpha *= 0.5
            if accepted or config.gradient == "fd":
                break
            lam *= 10.0
        if not accepted:
            stage.converged = True
            break
        if config.gradient == "analytic":
            lam = max(lam * (0.3 if alpha == config.step_size else 2.0), 1e-12)
        decrease = cost - cn
        x, cost = xn, cn
        stage.costs.append(cost)
        stage.iterations = it + 1
        if decrease <= config.convergence_tol * max(cost, 1e-300) or cost < 1e-24:
            stage.converged = True
            break
    return x


def merge_keypoints(template, evidence):
    """Whole-body ``(K, 3)`` keypoints from frame keypoints plus hand-estimate keypoints."""
    kp = None if evidence.keypoints2d is None else np.array(evidence.keypoints2d, dtype=float)
    for part, est in evidence.hands.items():
        if est.keypoints2d is None:
            continue
        sub = extract_hand_submodel(template, part)
        if kp is None:
            kp = np.zeros((template.num_keypoints, 3))
        if len(est.keypoints2d) != len(sub.keypoint_ids):
            raise DimensionMismatch(f"{part} keypoints: expected {len(sub.keypoint_ids)}, got {len(est.keypoints2d)}")
        kp[sub.keypoint_ids] = est.keypoints2d
    return kp


def fit_whole_body(init, evidence, template, config=None):
    """Two-stage whole-body fit starting from ``init`` (typically copy-paste output).

    Stage 1 fits global orientation, body joints, shape and camera to the 2D
    keypoints with the shape prior.  Stage 2 frees every joint rotation,
    shape and camera, adds the hand mesh term and anchors body keypoints at
    their stage-1 positions.  Expression stays fixed: no term observes it.
    """
    config = config or FitConfig()
    if not evidence:
        raise NoEvidence("fit needs 2D keypoints or hand estimates")
    start = time.perf_counter()
    layout = ParamLayout(template)
    x = layout.pack(init.pose, init.camera)
    keypoints = merge_keypoints(template, evidence)
    hands = {p: e for p, e in evidence.hands.items() if p in HANDS}
    report = FitReport()

    body_joints = template.tree.joints_of("body")
    stage1 = StageReport("stage1")
    report.stages.append(stage1)
    if keypoints is not None and np.any(keypoints[:, 2] > 0):
        obj1 = Objective(
            template,
            layout,
            layout.mask(body_joints, shape=True, camera=True),
            keypoints2d=keypoints,
            weights={"w2d": config.w2d, "wpri": config.wpri, "wmesh": 0.0, "w3d": 0.0},
        )
        x = minimize(obj1, x, config.stage1_iters, config, stage1)
    else:
        stage1.skipped = True

    pose1, _ = layout.unpack(x)
    anchor_ids = np.array(template.keypoints_of("body"))
    anchor = (anchor_ids, pose_model(template, pose1).joints3d[anchor_ids])
    all_joints = range(template.num_joints)
    obj2 = Objective(
        template,
        layout,
        layout.mask(all_joints, shape=True, camera=True),
        keypoints2d=keypoints,
        hands=hands,
        weights=config.term_weights,
        anchor=anchor,
    )
    stage2 = StageReport("stage2")
    report.stages.append(stage2)
    x = minimize(obj2, x, config.stage2_iters, config, stage2)

    terms, total = obj2.terms(x)
    report.final_terms = {k: terms.get(k, 0.0) for k in ("2d", "mesh", "pri", "3d")}
    report.total_cost = total
    report.wall_time = time.perf_counter() - start
    pose, camera = layout.unpack(x)
    pose.global_orient = canonicalize(pose.global_orient)
    pose.joint_rotations = canonicalize(pose.joint_rotations)
    log.debug("fit finished: %s", report.final_terms)
    return WholeBodyResult(pose, camera, dict(init.provenance)), report


class _Proximal:
    """Objective plus ``mu * |x - x0|^2`` over its free coordinates."""

    def __init__(self, objective, x0, mu):
        self.objective, self.layout = objective, objective.layout
        self.order = objective.free_order()
        self.x0 = np.asarray(x0, dtype=float)[self.order].copy()
        self.sq = np.sqrt(mu)

    def free_order(self):
        return self.order

    def cost(self, x):
        d = x[self.order] - self.x0
        return self.objective.cost(x) + self.sq**2 * float(d @ d)

    def residuals_and_jacobian(self, x):
        r, jac = self.objective.residuals_and_jacobian(x)
        n = len(self.order)
        return np.concatenate([r, self.sq * (x[self.order] - self.x0)]), np.vstack([jac, self.sq * np.eye(n)])


def fit_arm(template, pose, camera, side, target_wrist2d, iters=50, tol=1e-12, proximal=1.0):
    """Move one shoulder and elbow so the projected wrist reaches ``target_wrist2d``.

    Everything else is frozen.  The wrist constraint leaves directions such
    as a twist about the forearm free, so a small ``proximal`` penalty (in
    squared pixels per squared radian) selects the solution closest to the
    starting arm.  Returns the new pose and the stage report.
    """
    layout = ParamLayout(template)
    shoulder = template.joint_index(f"{side}_shoulder")
    elbow = template.joint_index(f"{side}_elbow")
    wrist = template.joint_index(f"{side}_wrist")
    kp = np.zeros((template.num_keypoints, 3))
    kp[wrist] = [target_wrist2d[0], target_wrist2d[1], 1.0]
    obj = Objective(template, layout, layout.mask([shoulder, elbow]), keypoints2d=kp, weights={"w2d": 1.0})
    x0 = layout.pack(pose, camera)
    if proximal > 0:
        obj = _Proximal(obj, x0, proximal)
    config = FitConfig(stage1_iters=iters, stage2_iters=iters, convergence_tol=tol)
    stage = StageReport("arm")
    x = minimize(obj, x0, iters, config, stage)
    new_pose, _ = layout.unpack(x)
    new_pose.global_orient = pose.global_orient.copy()
    new_pose.joint_rotations = canonicalize(new_pose.joint_rotations)
    return new_pose, stage
