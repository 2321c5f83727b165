"""Weak-perspective camera.

Image coordinates: x to the right, y down, origin at the top-left corner.
All cameras in this package share the full-image pixel frame.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class WeakPerspectiveCamera:
    scale: float
    translation: np.ndarray

    def __post_init__(self):
        self.scale = float(self.scale)
        self.translation = np.asarray(self.translation, dtype=float).reshape(2)
        if not self.scale > 0:
            raise ValueError(f"camera scale must be positive, got {self.scale}")

    def copy(self):
        return WeakPerspectiveCamera(self.scale, self.translation.copy())

    def as_vector(self):
        return np.concatenate([[self.scale], self.translation])

    @classmethod
    def from_vector(cls, v):
        return cls(v[0], v[1:3])


def project(cam, points3d):
    """Orthographic projection followed by scale and 2D translation."""
    points3d = np.asarray(points3d, dtype=float)
    return cam.scale * points3d[..., :2] + cam.translation
