"""Hazen-Williams headloss in SI units."""

from typing import Tuple

import numpy as np

from aquatwin.constants import (
    HW_COEFFICIENT,
    HW_DIAMETER_EXPONENT,
    HW_FLOW_EXPONENT,
    LPS_PER_CMS,
)


def resistance(length, diameter, roughness):
    """Hazen-Williams resistance r such that h = r * |Q|^1.852 with Q in m3/s"""
    return (
        HW_COEFFICIENT
        * np.asarray(length, dtype=float)
        / (
            np.asarray(roughness, dtype=float) ** HW_FLOW_EXPONENT
            * np.asarray(diameter, dtype=float) ** HW_DIAMETER_EXPONENT
        )
    )


def hazen_williams_headloss(flow: float, length: float, diameter: float, roughness: float) -> float:
    """
    Headloss along a pipe.

    Args:
        flow (float): Signed flow in L/s
        length (float): Pipe length in meters
        diameter (float): Pipe diameter in meters
        roughness (float): Hazen-Williams C coefficient

    Returns:
        float: Signed headloss in meters, sign(q) * 10.667 L |q|^1.852 / (C^1.852 d^4.871)
    """
    q = float(flow) / LPS_PER_CMS
    r = float(resistance(length, diameter, roughness))
    return float(np.sign(q) * r * abs(q) ** HW_FLOW_EXPONENT)


def regularized_headloss(
    flow: np.ndarray, r: np.ndarray, q_eps: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized headloss and its derivative, smoothed near zero flow.

    Above `q_eps` this is the exact Hazen-Williams law. Below it the law is
    replaced by the odd cubic a*Q + b*Q^3 matching value and slope at `q_eps`,
    so the derivative stays finite at Q = 0.

    Args:
        flow: Flows in m3/s
        r: Pipe resistances
        q_eps: Smoothing threshold in m3/s

    Returns:
        (headloss in m, d headloss / d flow)
    """
    n = HW_FLOW_EXPONENT
    magnitude = np.abs(flow)
    small = magnitude < q_eps

    headloss = np.empty_like(flow, dtype=float)
    slope = np.empty_like(flow, dtype=float)

    big = ~small
    headloss[big] = r[big] * np.sign(flow[big]) * magnitude[big] ** n
    slope[big] = n * r[big] * magnitude[big] ** (n - 1.0)

    if np.any(small):
        rs = r[small]
        q = flow[small]
        a = rs * q_eps ** (n - 1.0) * (3.0 - n) / 2.0
        b = rs * q_eps ** (n - 3.0) * (n - 1.0) / 2.0
        headloss[small] = a * q + b * q**3
        slope[small] = a + 3.0 * b * q**2

    return headloss, slope
