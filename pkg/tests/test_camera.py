import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wholebody.camera import WeakPerspectiveCamera, project

points = arrays(np.float64, (5, 3), elements=st.floats(-100, 100))


def test_drops_depth():
    assert np.array_equal(project(WeakPerspectiveCamera(1.0, [0, 0]), np.array([3.0, 4.0, 5.0])), [3.0, 4.0])


def test_scale_and_shift():
    assert np.array_equal(project(WeakPerspectiveCamera(2.0, [1, 1]), np.array([3.0, 4.0, 5.0])), [7.0, 9.0])


def test_batch_matches_per_point_formula(rng):
    cam = WeakPerspectiveCamera(rng.uniform(0.5, 3), rng.normal(size=2))
    pts = rng.normal(size=(40, 3))
    want = np.array([[cam.scale * p[0] + cam.translation[0], cam.scale * p[1] + cam.translation[1]] for p in pts])
    assert np.array_equal(project(cam, pts), want)


def test_scale_must_be_positive():
    with pytest.raises(ValueError):
        WeakPerspectiveCamera(0.0, [0, 0])
    with pytest.raises(ValueError):
        WeakPerspectiveCamera(-1.0, [0, 0])


def test_vector_round_trip():
    cam = WeakPerspectiveCamera(2.5, [3.0, -1.0])
    back = WeakPerspectiveCamera.from_vector(cam.as_vector())
    assert back.scale == cam.scale and np.array_equal(back.translation, cam.translation)


@given(points, points, st.floats(-3, 3), st.floats(-3, 3))
def test_affine_in_points(P, Q, a, b):
    cam = WeakPerspectiveCamera(1.7, [4.0, -2.0])
    lhs = project(cam, a * P + b * Q)
    rhs = a * project(cam, P) + b * project(cam, Q) + (1 - a - b) * cam.translation
    assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(lhs).max()))


@given(points, arrays(np.float64, 5, elements=st.floats(-100, 100)))
def test_depth_invariance(P, z):
    cam = WeakPerspectiveCamera(3.0, [1.0, 2.0])
    Q = P.copy()
    Q[:, 2] = z
    assert np.array_equal(project(cam, P), project(cam, Q))
