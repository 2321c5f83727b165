"""Pose and mesh evaluation metrics."""

from dataclasses import dataclass

import numpy as np

from .errors import Degenerate, DimensionMismatch

PCK_3D_RANGE_MM = (20.0, 50.0)
PCK_2D_RANGE_PX = (0.0, 30.0)


@dataclass(eq=False)
class SimilarityTransform:
    rotation: np.ndarray
    scale: float
    translation: np.ndarray

    def apply(self, points):
        return self.scale * np.asarray(points) @ self.rotation.T + self.translation


def _pair(pred, gt):
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.shape != gt.shape or pred.ndim != 2:
        raise DimensionMismatch(f"point sets differ in shape: {pred.shape} vs {gt.shape}")
    return pred, gt


def mpjpe(pred, gt):
    """Mean Euclidean distance between corresponding points."""
    pred, gt = _pair(pred, gt)
    return float(np.linalg.norm(pred - gt, axis=1).mean())


def procrustes_align(pred, gt):
    """Similarity transform (rotation, scale, translation) best mapping ``pred`` onto ``gt``.

    Closed form from the SVD of the cross-covariance; reflections are excluded.
    """
    pred, gt = _pair(pred, gt)
    mu_p, mu_g = pred.mean(axis=0), gt.mean(axis=0)
    P, G = pred - mu_p, gt - mu_g
    var_p = np.sum(P**2)
    if var_p <= 1e-300 or np.sum(G**2) <= 1e-300:
        raise Degenerate("point set has zero spread")
    U, S, Vt = np.linalg.svd(G.T @ P)
    D = np.ones(3)
    D[2] = np.sign(np.linalg.det(U @ Vt)) or 1.0
    R = (U * D) @ Vt
    s = float(np.sum(S * D) / var_p)
    t = mu_g - s * R @ mu_p
    T = SimilarityTransform(R, s, t)
    return T, T.apply(pred)


def pa_mpjpe(pred, gt):
    _, aligned = procrustes_align(pred, gt)
    return mpjpe(aligned, gt)


def v2v(pred_vertices, gt_vertices):
    """Mean vertex-to-vertex distance; meshes must share topology."""
    pred, gt = np.asarray(pred_vertices), np.asarray(gt_vertices)
    if pred.shape != gt.shape:
        raise DimensionMismatch(f"vertex counts differ: {pred.shape} vs {gt.shape}")
    return mpjpe(pred, gt)


def pa_v2v(pred_vertices, gt_vertices):
    return pa_mpjpe(pred_vertices, gt_vertices)


def pck_curve(errors, lo, hi, steps=100):
    """Fraction of errors at or below each of ``steps`` evenly spaced thresholds in ``[lo, hi]``."""
    errors = np.asarray(errors, dtype=float).ravel()
    thresholds = np.linspace(lo, hi, steps)
    pck = (errors[None, :] <= thresholds[:, None]).mean(axis=1)
    return thresholds, pck


def pck_auc(errors, lo, hi, steps=100):
    """PCK curve and its trapezoidal area normalized by ``hi - lo``."""
    if not hi > lo:
        raise ValueError("threshold range must satisfy hi > lo")
    thresholds, pck = pck_curve(errors, lo, hi, steps)
    auc = float(np.trapezoid(pck, thresholds) / (hi - lo))
    return (thresholds, pck), auc
