"""Axis-angle rotation algebra.

All functions accept batched input with the rotation dimensions trailing,
e.g. ``(..., 3)`` axis-angle vectors or ``(..., 3, 3)`` matrices.
"""

import math

import numpy as np

from .errors import NotARotation

_SMALL_ANGLE = 1e-8
_JACOBIAN_SERIES = 1e-4
MIRROR = np.diag([-1.0, 1.0, 1.0])


def skew(v):
    """Cross-product matrix ``[v]_x`` so that ``skew(a) @ b == cross(a, b)``."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def rodrigues(axis_angle):
    """Rotation matrices from axis-angle vectors.

    Below an angle of 1e-8 the second-order series ``I + K + K^2 / 2`` is used,
    which keeps the map smooth through zero.
    """
    a = np.asarray(axis_angle, dtype=float)
    if a.shape == (3,):
        return _rodrigues_one(a)
    theta = np.linalg.norm(a, axis=-1)[..., None, None]
    K = skew(a)
    K2 = K @ K
    small = theta < _SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    A = np.where(small, 1.0, np.sin(safe) / safe)
    B = np.where(small, 0.5, (1.0 - np.cos(safe)) / safe**2)
    return np.eye(3) + A * K + B * K2


def _rodrigues_one(a):
    # same formula without the batching overhead (single vectors are the common case)
    x, y, z = float(a[0]), float(a[1]), float(a[2])
    theta = math.sqrt(x * x + y * y + z * z)
    if theta < _SMALL_ANGLE:
        A, B = 1.0, 0.5
    else:
        A, B = math.sin(theta) / theta, (1.0 - math.cos(theta)) / theta**2
    K = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + A * K + B * (K @ K)


def _check_rotation(R, tol):
    err = np.abs(R @ np.swapaxes(R, -1, -2) - np.eye(3)).max(axis=(-2, -1))
    det = np.linalg.det(R)
    if np.any(err > tol) or np.any(np.abs(det - 1.0) > tol) or not np.all(np.isfinite(R)):
        raise NotARotation(
            f"matrix is not a proper rotation (orthonormality error {np.max(err):.3g}, det {np.min(det):.6g})"
        )


def rodrigues_inverse(R, tol=1e-6):
    """Axis-angle vector with angle in ``[0, pi]`` for each rotation matrix.

    Raises ``NotARotation`` when ``R R^T`` deviates from identity (or the
    determinant from 1) by more than ``tol``.
    """
    R = np.asarray(R, dtype=float)
    if R.shape[-2:] != (3, 3):
        raise NotARotation(f"expected (..., 3, 3) matrices, got shape {R.shape}")
    _check_rotation(R, tol)
    batch = R.shape[:-2]
    Rf = R.reshape(-1, 3, 3)
    out = np.empty((Rf.shape[0], 3))
    w = 0.5 * np.stack(
        [Rf[:, 2, 1] - Rf[:, 1, 2], Rf[:, 0, 2] - Rf[:, 2, 0], Rf[:, 1, 0] - Rf[:, 0, 1]], axis=-1
    )
    c = np.clip(0.5 * (np.trace(Rf, axis1=1, axis2=2) - 1.0), -1.0, 1.0)
    s = np.linalg.norm(w, axis=-1)
    theta = np.arctan2(s, c)
    for i in range(Rf.shape[0]):
        if c[i] > -0.5:
            # away from pi the skew part is well conditioned
            if theta[i] < _SMALL_ANGLE:
                out[i] = w[i]
            else:
                out[i] = w[i] * (theta[i] / s[i])
        else:
            # near pi: axis from the symmetric part, largest diagonal pivot
            sym = 0.5 * (Rf[i] + Rf[i].T)
            nn = (sym - c[i] * np.eye(3)) / (1.0 - c[i])
            k = int(np.argmax(np.diag(nn)))
            n = nn[:, k] / np.sqrt(nn[k, k])
            n /= np.linalg.norm(n)
            if n @ w[i] < 0.0:
                n = -n
            out[i] = n * theta[i]
    return out.reshape(batch + (3,))


def left_jacobian(axis_angle):
    """SO(3) left Jacobian: ``d rodrigues(a) = skew(J_l(a) da) @ rodrigues(a)``."""
    a = np.asarray(axis_angle, dtype=float)
    theta = np.linalg.norm(a, axis=-1)[..., None, None]
    K = skew(a)
    small = theta < _JACOBIAN_SERIES
    safe = np.where(small, 1.0, theta)
    t2 = theta**2
    A = np.where(small, 0.5 - t2 / 24.0, (1.0 - np.cos(safe)) / safe**2)
    B = np.where(small, 1.0 / 6.0 - t2 / 120.0, (safe - np.sin(safe)) / safe**3)
    return np.eye(3) + A * K + B * (K @ K)


def mirror_axis_angle(axis_angle):
    """Reflect rotations across the x = 0 plane: ``(x, y, z) -> (x, -y, -z)``.

    Equivalent to conjugating the rotation matrix by ``diag(-1, 1, 1)``.
    """
    a = np.array(axis_angle, dtype=float, copy=True)
    a[..., 1:] *= -1.0
    return a


def canonicalize(axis_angle):
    """Wrap axis-angle vectors into the canonical ball ``|a| <= pi``."""
    a = np.array(axis_angle, dtype=float, copy=True)
    theta = np.linalg.norm(a, axis=-1, keepdims=True)
    turns = np.floor((theta + np.pi) / (2.0 * np.pi))
    safe = np.where(theta > 0, theta, 1.0)
    return np.where(turns > 0, a * (theta - 2.0 * np.pi * turns) / safe, a)
