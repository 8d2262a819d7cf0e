import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irsstealth.channel import ChannelParams, deviation, link
from irsstealth.gain import (
    ReflectionVector,
    SamplingPlan,
    TargetRcs,
    gain_grid,
    reflection_gain,
    sample_window,
    steering_matrix,
    steering_of_sample,
    window_max_gain,
)
from irsstealth.geometry import AngularWindow, ArrayGeometry, SpatialFrequencyPair, Vec3

TAU = 4 * math.pi * 0.1**2 / 0.15**2
GEOM16 = ArrayGeometry(16, 1, 0.075, 0.15)


def test_rcs_constant():
    rcs = TargetRcs(0.1, 0.15)
    assert rcs.magnitude == pytest.approx(5.58505, abs=1e-5)
    assert rcs.magnitude**2 == pytest.approx(31.1928, abs=1e-4)
    rcs = TargetRcs(0.1, 0.15, 1.3)
    assert abs(rcs.value) == pytest.approx(rcs.magnitude, rel=1e-12)


def test_sample_window_flagship_grid():
    plan = sample_window(AngularWindow(-0.25, 0.25), 20)
    pts = plan.as_array()
    assert plan.k == 20
    np.testing.assert_allclose(pts[:, 0], -0.25 + np.arange(20) * 0.5 / 19, atol=1e-15)
    assert pts[0, 0] == -0.25 and pts[-1, 0] == 0.25
    assert np.all(pts[:, 1] == 0)


def test_sample_window_small_cases():
    plan = sample_window(AngularWindow(-0.25, 0.25, -0.1, 0.1), 1, 1)
    assert plan.points == (SpatialFrequencyPair(0.0, 0.0),)
    plan = sample_window(AngularWindow(-0.3, 0.3), 3)
    np.testing.assert_allclose(plan.as_array()[:, 0], [-0.3, 0.0, 0.3], atol=1e-15)


def test_sample_window_zero_width_axis():
    with pytest.raises(ValueError):
        sample_window(AngularWindow(-0.2, 0.2), 4, 2)
    with pytest.raises(ValueError):
        sample_window(AngularWindow(-0.2, 0.2), 0, 1)


def test_tensor_sampling_is_x_major():
    plan = sample_window(AngularWindow(-0.2, 0.2, -0.1, 0.1), 2, 3)
    np.testing.assert_allclose(
        plan.as_array(),
        [[-0.2, -0.1], [-0.2, 0.0], [-0.2, 0.1], [0.2, -0.1], [0.2, 0.0], [0.2, 0.1]],
        atol=1e-15,
    )


def test_steering_of_sample_examples():
    g = ArrayGeometry.normalized(16)
    np.testing.assert_allclose(steering_of_sample(SpatialFrequencyPair(0, 0), g), np.ones(16))
    m = np.arange(16)
    np.testing.assert_allclose(steering_of_sample(SpatialFrequencyPair(-0.35, 0), g),
                               np.exp(1j * np.pi * m * 0.35), atol=1e-13)


def test_steering_matrix_rows_match_kronecker():
    rng = np.random.default_rng(3)
    g = ArrayGeometry.normalized(4, 3, 0.8)
    pts = rng.uniform(-2, 2, (7, 2))
    u = steering_matrix(pts, g)
    for row, (p, o) in zip(u, pts):
        mx, my = np.meshgrid(np.arange(4), np.arange(3), indexing="ij")
        ref = np.exp(-1j * np.pi * 0.8 * (mx * p + my * o)).ravel()
        np.testing.assert_allclose(row, ref, atol=1e-12)


def test_gain_examples():
    zero = np.zeros(16, dtype=complex)
    rcs = TargetRcs(0.1, 0.15)
    assert abs(reflection_gain(zero, SpatialFrequencyPair(0.1, 0), rcs, GEOM16)) ** 2 == pytest.approx(31.1928, abs=1e-4)
    cancel = np.full(16, -rcs.value / 16)
    assert abs(reflection_gain(cancel, SpatialFrequencyPair(0, 0), rcs, GEOM16)) < 1e-14


def test_gain_rejects_wrong_length():
    with pytest.raises(ValueError):
        reflection_gain(np.zeros(3), SpatialFrequencyPair(0, 0), 1.0, GEOM16)


def test_reflection_vector_amplitude_check():
    with pytest.raises(ValueError):
        ReflectionVector([1.1, 0])
    ReflectionVector([1 + 1e-10, 0.3j])


def _random_theta(rng, n):
    return rng.uniform(0, 1, n) * np.exp(1j * rng.uniform(0, 2 * np.pi, n))


def test_hadamard_form_matches_channel_vectors():
    rng = np.random.default_rng(5)
    params = ChannelParams(lam=0.15)
    for _ in range(100):
        geom = ArrayGeometry(int(rng.integers(1, 6)), int(rng.integers(1, 5)), 0.075, 0.15)
        q = Vec3(*rng.uniform(-100, 100, 2), rng.uniform(50, 500))
        w_t = Vec3(*rng.uniform(-300, 300, 2), 0.0)
        w_r = Vec3(*rng.uniform(-300, 300, 2), 0.0)
        theta = _random_theta(rng, geom.n)
        tau = complex(*rng.normal(size=2))
        a_r = link(q, w_t, geom, params).array_response_irs
        a_t = link(q, w_r, geom, params).array_response_irs
        direct = np.vdot(a_t, theta * a_r) + tau
        via_gain = reflection_gain(theta, deviation(q, w_t, w_r), tau, geom)
        assert abs(direct - via_gain) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 2**32 - 1))
def test_gain_triangle_bound(n, phi, omega, seed):
    rng = np.random.default_rng(seed)
    geom = ArrayGeometry.normalized(n, 2)
    theta = _random_theta(rng, geom.n)
    tau = complex(*rng.normal(size=2))
    r = reflection_gain(theta, SpatialFrequencyPair(phi, omega), tau, geom)
    assert abs(r) <= np.abs(theta).sum() + abs(tau) + 1e-12


def test_gain_grid_matches_pointwise():
    rng = np.random.default_rng(8)
    geom = ArrayGeometry.normalized(5, 3)
    theta = _random_theta(rng, geom.n)
    phis, omegas = np.linspace(-1, 1, 7), np.linspace(-0.4, 0.3, 4)
    grid = gain_grid(theta, phis, omegas, 0.7 - 0.2j, geom)
    for i, p in enumerate(phis):
        for j, o in enumerate(omegas):
            r = reflection_gain(theta, SpatialFrequencyPair(p, o), 0.7 - 0.2j, geom)
            assert grid[i, j] == pytest.approx(abs(r) ** 2, rel=1e-12)


def test_window_max_of_constant_gain():
    w = AngularWindow(-0.25, 0.25, -0.1, 0.2)
    eta, arg = window_max_gain(np.zeros(16), w, TargetRcs(0.1, 0.15), GEOM16)
    assert eta == pytest.approx(TAU**2, rel=1e-12)
    assert (arg.phi, arg.omega) == (-0.25, -0.1)


def test_window_max_of_point_window():
    rcs = TargetRcs(0.1, 0.15)
    eta, _ = window_max_gain(np.full(16, -rcs.value / 16), AngularWindow(0, 0), rcs, GEOM16)
    assert eta < 1e-26


def test_window_max_grid_refinement():
    rng = np.random.default_rng(21)
    theta = _random_theta(rng, 16)
    w = AngularWindow(-0.25, 0.25)
    a, _ = window_max_gain(theta, w, 2.0, GEOM16, 1000)
    b, _ = window_max_gain(theta, w, 2.0, GEOM16, 2000)
    assert abs(a - b) <= 0.01 * b
    # golden-section refinement recovers the true peak far beyond the grid accuracy
    assert abs(a - b) <= 1e-8 * b


def test_window_max_rejects_coarse_grid():
    with pytest.raises(ValueError):
        window_max_gain(np.zeros(16), AngularWindow(-0.1, 0.1), 1.0, GEOM16, 50)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1, 0), st.floats(0, 1), st.floats(0, 0.5), st.integers(0, 2**32 - 1))
def test_window_max_monotone_under_enlargement(lo, hi, grow, seed):
    rng = np.random.default_rng(seed)
    theta = _random_theta(rng, 8)
    geom = ArrayGeometry.normalized(8)
    small = AngularWindow(lo, hi)
    big = AngularWindow(max(-2, lo - grow), min(2, hi + grow))
    a, _ = window_max_gain(theta, small, 1.5, geom)
    b, _ = window_max_gain(theta, big, 1.5, geom)
    assert b >= a * (1 - 1e-9)


def test_custom_plan():
    plan = SamplingPlan.custom([(0.1, 0.0), (-0.2, 0.0)])
    assert plan.k == 2 and plan.mode == "custom"
    with pytest.raises(ValueError):
        SamplingPlan.custom([])
