import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wholebody.errors import NotARotation
from wholebody.rotation import (
    MIRROR,
    canonicalize,
    left_jacobian,
    mirror_axis_angle,
    rodrigues,
    rodrigues_inverse,
    skew,
)

from .oracles import matrix_from_quat, quat_from_axis_angle

finite3 = arrays(np.float64, 3, elements=st.floats(-3.0, 3.0))


def random_axis_angle(rng, n, lo=1e-6, hi=np.pi - 1e-3):
    axis = rng.normal(size=(n, 3))
    axis /= np.linalg.norm(axis, axis=1, keepdims=True)
    return axis * rng.uniform(lo, hi, (n, 1))


def test_zero_is_identity():
    assert np.array_equal(rodrigues(np.zeros(3)), np.eye(3))
    assert np.array_equal(rodrigues_inverse(np.eye(3)), np.zeros(3))


def test_quarter_turn_about_z():
    R = rodrigues([0, 0, np.pi / 2])
    assert np.allclose(R @ [1, 0, 0], [0, 1, 0], atol=1e-15)


def test_matches_quaternion_oracle(rng):
    for a in random_axis_angle(rng, 200, lo=0.0, hi=np.pi):
        assert np.allclose(rodrigues(a), matrix_from_quat(quat_from_axis_angle(a)), atol=1e-12)


def test_batched_shape(rng):
    a = rng.normal(size=(4, 5, 3))
    R = rodrigues(a)
    assert R.shape == (4, 5, 3, 3)
    assert np.allclose(R[2, 3], rodrigues(a[2, 3]))
    assert rodrigues_inverse(R).shape == (4, 5, 3)


def test_tiny_angles_are_smooth():
    for eps in (1e-12, 1e-9, 1e-7):
        a = np.array([eps, -2 * eps, eps / 3])
        assert np.allclose(rodrigues(a), np.eye(3) + skew(a), atol=1e-15)
        assert np.allclose(rodrigues_inverse(rodrigues(a)), a, rtol=1e-6, atol=1e-18)


def test_inverse_near_pi(rng):
    for a in random_axis_angle(rng, 200, lo=np.pi - 1e-3, hi=np.pi - 1e-9):
        back = rodrigues_inverse(rodrigues(a))
        assert np.allclose(back, a, atol=1e-7)


def test_inverse_exactly_pi_returns_a_valid_vector():
    a = np.array([0.0, np.pi, 0.0])
    back = rodrigues_inverse(rodrigues(a))
    assert np.isclose(np.linalg.norm(back), np.pi)
    assert np.allclose(rodrigues(back), rodrigues(a), atol=1e-12)


def test_not_a_rotation():
    with pytest.raises(NotARotation):
        rodrigues_inverse(2 * np.eye(3))
    with pytest.raises(NotARotation):
        rodrigues_inverse(np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(NotARotation):
        rodrigues_inverse(np.eye(2))


def test_mirror_of_pure_x_rotation():
    assert np.array_equal(mirror_axis_angle([0.3, 0.0, 0.0]), [0.3, 0.0, 0.0])
    assert np.array_equal(mirror_axis_angle([0.1, 0.2, 0.3]), [0.1, -0.2, -0.3])


@given(finite3)
def test_mirror_is_conjugation(a):
    assert np.allclose(rodrigues(mirror_axis_angle(a)), MIRROR @ rodrigues(a) @ MIRROR, atol=1e-12)


@given(finite3)
def test_mirror_is_involution(a):
    assert np.array_equal(mirror_axis_angle(mirror_axis_angle(a)), a)


@given(finite3)
def test_rotation_properties(a):
    R = rodrigues(a)
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert np.isclose(np.linalg.det(R), 1.0, atol=1e-12)


@given(finite3)
def test_inverse_lands_in_canonical_ball(a):
    back = rodrigues_inverse(rodrigues(a))
    assert np.linalg.norm(back) <= np.pi + 1e-12
    assert np.allclose(rodrigues(back), rodrigues(a), atol=1e-9)


@given(arrays(np.float64, 3, elements=st.floats(-12.0, 12.0)))
def test_canonicalize_keeps_rotation(a):
    c = canonicalize(a)
    assert np.linalg.norm(c) <= np.pi + 1e-9
    assert np.allclose(rodrigues(c), rodrigues(a), atol=1e-9)


def test_left_jacobian_matches_finite_differences(rng):
    h = 1e-6
    for a in list(random_axis_angle(rng, 20, lo=0.0, hi=3.0)) + [np.array([1e-6, 0, 0]), np.zeros(3)]:
        R = rodrigues(a)
        Jl = left_jacobian(a)
        for m in range(3):
            e = np.zeros(3)
            e[m] = h
            dR = (rodrigues(a + e) - rodrigues(a - e)) / (2 * h)
            assert np.allclose(dR, skew(Jl[:, m]) @ R, atol=1e-8)
