"""Hydraulics module for aquatwin."""

from aquatwin.hydraulics.headloss import hazen_williams_headloss, regularized_headloss
from aquatwin.hydraulics.solver import (
    HydraulicState,
    energy_balance_residual,
    mass_balance_residual,
    solve_scenario,
    solve_steady_state,
)

__all__ = [
    "HydraulicState",
    "energy_balance_residual",
    "hazen_williams_headloss",
    "mass_balance_residual",
    "regularized_headloss",
    "solve_scenario",
    "solve_steady_state",
]
