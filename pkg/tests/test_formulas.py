import itertools
import math

import numpy as np
import pytest

from nbody_taylor.forces import ForceModel, accel, jacobian_fd
from nbody_taylor.formulas import (
    derivative_tensor,
    derivatives_3_to_6,
    fd_step,
    fifth_derivative,
    fourth_derivative,
    sixth_derivative,
    third_derivative,
)
from nbody_taylor.taylor import taylor_coefficients
from oracles import random_softened

PENDULUM = ForceModel.pendulum()


def test_fd_step_per_level():
    assert fd_step([0.0], 1) == pytest.approx(1e-16 ** (1 / 3))
    assert fd_step([-3.0, 1.0], 2) == pytest.approx(4 * 1e-4)


def test_pendulum_tensors_at_zero():
    assert derivative_tensor(PENDULUM, [0.0], 1).entries[0, 0] == pytest.approx(-1.0, abs=1e-8)
    assert abs(derivative_tensor(PENDULUM, [0.0], 2).entries[0, 0, 0]) <= 1e-5


@pytest.mark.parametrize("l, expected", [(1, -math.cos(0.4)), (2, math.sin(0.4)), (3, math.cos(0.4)), (4, -math.sin(0.4))])
def test_pendulum_tensors_match_sine_derivatives(l, expected):
    T = derivative_tensor(PENDULUM, [0.4], l)
    assert T.entries.reshape(-1)[0] == pytest.approx(expected, abs=1e-4 if l > 2 else 1e-7)


def test_first_tensor_matches_jacobian():
    rng = np.random.default_rng(41)
    model, y, _ = random_softened(rng, 2)
    np.testing.assert_allclose(derivative_tensor(model, y, 1).entries, jacobian_fd(model, y), atol=1e-8)


def test_softened_two_body_first_tensor_even():
    rng = np.random.default_rng(42)
    model, y, _ = random_softened(rng, 2, eps=0.5)
    a = derivative_tensor(model, y, 1).entries
    b = derivative_tensor(model, -y, 1).entries
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-5)


@pytest.mark.parametrize("l", [2, 3, 4])
def test_mixed_partials_symmetric(l):
    rng = np.random.default_rng(43)
    model, y, _ = random_softened(rng, 2, eps=0.5)
    T = derivative_tensor(model, y, l).entries
    scale = 1 + np.max(np.abs(T))
    for perm in itertools.permutations(range(1, l + 1)):
        np.testing.assert_allclose(np.transpose(T, (0, *perm)), T, rtol=0, atol=1e-4 * scale)


@pytest.mark.parametrize("l", [1, 2, 3, 4])
def test_parity_ladder(l):
    rng = np.random.default_rng(44)
    for _ in range(3):
        model, y, _ = random_softened(rng, 2, eps=0.5)
        a = derivative_tensor(model, y, l).entries
        b = derivative_tensor(model, -y, l).entries
        sign = 1.0 if l % 2 == 1 else -1.0
        np.testing.assert_allclose(b, sign * a, rtol=0, atol=1e-6 * (1 + np.max(np.abs(a))))


def test_even_tensors_vanish_at_origin():
    rng = np.random.default_rng(45)
    model, _, _ = random_softened(rng, 2, eps=0.5)
    for l in (2, 4):
        T = derivative_tensor(model, np.zeros(6), l).entries
        assert np.max(np.abs(T)) <= 1e-6


def test_dense_storage_limit():
    model = ForceModel.softened(np.ones(5), 0.5)
    with pytest.raises(ValueError):
        derivative_tensor(model, np.zeros(15), 3)
    assert derivative_tensor(model, np.arange(15.0), 2).entries.shape == (15, 15, 15)


def test_zero_velocity_odd_derivatives_vanish():
    rng = np.random.default_rng(46)
    model, y, _ = random_softened(rng, 3)
    v = np.zeros_like(y)
    a = accel(model, y)
    assert np.array_equal(third_derivative(model, y, v), np.zeros_like(y))
    y3 = np.zeros_like(y)
    assert np.array_equal(fifth_derivative(model, y, v, a, y3), np.zeros_like(y))


def test_zero_velocity_fourth_is_jacobian_times_accel():
    rng = np.random.default_rng(47)
    model, y, _ = random_softened(rng, 3)
    a = accel(model, y)
    J = derivative_tensor(model, y, 1)
    np.testing.assert_array_equal(
        fourth_derivative(model, y, np.zeros_like(y), a, {1: J, 2: derivative_tensor(model, y, 2)}),
        J.entries @ a,
    )


def test_single_free_body_all_zero():
    model = ForceModel.newtonian([1.0])
    d = derivatives_3_to_6(model, [0.1, 0.2, 0.3], [1.0, -1.0, 0.5])
    for m in (3, 4, 5, 6):
        assert np.array_equal(d[m], np.zeros(3))


def test_sixth_derivative_vanishes_at_origin():
    rng = np.random.default_rng(48)
    model, _, v = random_softened(rng, 2, eps=0.5)
    y = np.zeros(6)
    d = derivatives_3_to_6(model, y, v)
    assert np.max(np.abs(d[6])) <= 1e-4 * (1 + np.max(np.abs(d[5])))


@pytest.mark.parametrize("seed", range(5))
def test_cross_oracle_against_series(seed):
    rng = np.random.default_rng(400 + seed)
    model, y, v = random_softened(rng)
    c = taylor_coefficients(model, y, v, 8)
    d = derivatives_3_to_6(model, y, v)
    for m, rtol in ((3, 1e-6), (4, 1e-5), (5, 1e-4), (6, 1e-3)):
        ref = c.derivatives(m)
        assert np.max(np.abs(d[m] - ref)) <= rtol * np.max(np.abs(ref))


def test_pendulum_cross_oracle():
    y, v = np.array([0.9]), np.array([-0.4])
    c = taylor_coefficients(PENDULUM, y, v, 8)
    d = derivatives_3_to_6(PENDULUM, y, v)
    for m, rtol in ((3, 1e-6), (4, 1e-5), (5, 1e-4), (6, 1e-3)):
        assert d[m][0] == pytest.approx(c.derivatives(m)[0], rel=rtol)


def test_plain_differences_are_less_accurate_than_extrapolated():
    y = np.array([0.4])
    exact = math.cos(0.4)
    plain = derivative_tensor(PENDULUM, y, 3, richardson=False).entries.item()
    extrap = derivative_tensor(PENDULUM, y, 3).entries.item()
    assert abs(extrap - exact) < abs(plain - exact)
