"""Tests for the headloss module."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aquatwin.constants import HW_FLOW_EXPONENT
from aquatwin.hydraulics.headloss import (
    hazen_williams_headloss,
    regularized_headloss,
    resistance,
)

flows = st.floats(min_value=-500.0, max_value=500.0, allow_nan=False)


def test_headloss_reference_value():
    """Test headloss of 10 L/s through 1 km of 300 mm pipe at C=130."""
    assert hazen_williams_headloss(10.0, 1000.0, 0.3, 130.0) == pytest.approx(
        0.0903569525, rel=1e-8
    )


def test_headloss_worked_example():
    """Test 50 L/s through 1 km of 300 mm pipe at C=100, both directions."""
    assert hazen_williams_headloss(50.0, 1000.0, 0.3, 100.0) == pytest.approx(2.8939, abs=1e-3)
    assert hazen_williams_headloss(-50.0, 1000.0, 0.3, 100.0) == pytest.approx(-2.8939, abs=1e-3)


def scalar_hazen_williams(flow_lps, length, diameter, roughness):
    q = abs(flow_lps) / 1000.0
    loss = 10.667 * length * q**1.852 / (roughness**1.852 * diameter**4.871)
    return math.copysign(loss, flow_lps)


def test_headloss_matches_scalar_formula():
    """Test a thousand random pipes against a plain scalar evaluation."""
    rng = np.random.default_rng(11)
    flows_lps = rng.uniform(-500.0, 500.0, 1000)
    lengths = rng.uniform(10.0, 5000.0, 1000)
    diameters = rng.uniform(0.05, 1.5, 1000)
    roughness = rng.uniform(60.0, 150.0, 1000)
    for q, length, d, c in zip(flows_lps, lengths, diameters, roughness):
        expected = scalar_hazen_williams(float(q), float(length), float(d), float(c))
        assert hazen_williams_headloss(q, length, d, c) == pytest.approx(expected, rel=1e-10)


def test_headloss_zero_flow():
    """Test that zero flow loses no head."""
    assert hazen_williams_headloss(0.0, 500.0, 0.2, 100.0) == 0.0


def test_headloss_scales_linearly_with_length():
    """Test that doubling the length doubles the loss."""
    short = hazen_williams_headloss(25.0, 400.0, 0.25, 110.0)
    long = hazen_williams_headloss(25.0, 800.0, 0.25, 110.0)
    assert long == pytest.approx(2.0 * short)


@given(flows)
def test_headloss_is_odd(flow):
    """Test that reversing the flow reverses the loss."""
    assert hazen_williams_headloss(-flow, 300.0, 0.3, 120.0) == -hazen_williams_headloss(
        flow, 300.0, 0.3, 120.0
    )


@given(flows, flows)
def test_headloss_is_monotone(a, b):
    """Test that headloss never decreases with flow."""
    low, high = sorted((a, b))
    assert hazen_williams_headloss(low, 300.0, 0.3, 120.0) <= hazen_williams_headloss(
        high, 300.0, 0.3, 120.0
    )


def test_regularized_matches_law_above_threshold():
    """Test that the smoothed law is exact away from zero flow."""
    r = np.array([resistance(1000.0, 0.3, 130.0)] * 2)
    flow = np.array([0.01, -0.02])
    headloss, slope = regularized_headloss(flow, r, 1e-4)
    expected = np.sign(flow) * r * np.abs(flow) ** HW_FLOW_EXPONENT
    np.testing.assert_allclose(headloss, expected)
    np.testing.assert_allclose(slope, HW_FLOW_EXPONENT * r * np.abs(flow) ** (HW_FLOW_EXPONENT - 1))


def test_regularized_continuous_at_threshold():
    """Test that value and slope are continuous at the smoothing threshold."""
    q_eps = 1e-3
    r = np.array([50.0, 50.0])
    flow = np.array([q_eps * (1 - 1e-9), q_eps * (1 + 1e-9)])
    headloss, slope = regularized_headloss(flow, r, q_eps)
    assert headloss[0] == pytest.approx(headloss[1], rel=1e-6)
    assert slope[0] == pytest.approx(slope[1], rel=1e-6)


def test_regularized_slope_finite_at_zero():
    """Test that the derivative stays positive and finite at zero flow."""
    headloss, slope = regularized_headloss(np.array([0.0]), np.array([80.0]), 1e-4)
    assert headloss[0] == 0.0
    assert np.isfinite(slope[0]) and slope[0] > 0.0
