"""Demand-driven steady-state solver (global gradient method)."""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from aquatwin.config import SolverConfig
from aquatwin.constants import INITIAL_VELOCITY_MPS, LPS_PER_CMS
from aquatwin.exceptions import NonConvergenceError
from aquatwin.hydraulics.headloss import regularized_headloss, resistance
from aquatwin.network.model import NetworkModel

logger = logging.getLogger(__name__)


@dataclass
class HydraulicState:
    """
    Solution of one steady-state solve.

    Attributes:
        heads (np.ndarray): Hydraulic head per node, m
        pressures (np.ndarray): head - elevation per node, m
        flows (np.ndarray): Signed flow per pipe (start -> end), L/s
        iterations (int): Newton iterations used
        residual (float): Max junction mass-balance residual, L/s
    """

    heads: np.ndarray
    pressures: np.ndarray
    flows: np.ndarray
    iterations: int = 0
    residual: float = 0.0

    def junction_pressures(self, net: NetworkModel) -> np.ndarray:
        return self.pressures[net.junction_indices]


@dataclass(frozen=True)
class _Incidence:
    a12: np.ndarray  # pipes x junctions
    a10: np.ndarray  # pipes x sources
    source_heads: np.ndarray
    r: np.ndarray
    initial_flow: np.ndarray  # m3/s


@lru_cache(maxsize=32)
def _incidence(net: NetworkModel) -> _Incidence:
    junction_pos = {int(j): k for k, j in enumerate(net.junction_indices)}
    source_pos = {int(s): k for k, s in enumerate(net.source_indices)}
    a12 = np.zeros((net.n_pipes, len(junction_pos)))
    a10 = np.zeros((net.n_pipes, len(source_pos)))
    for pipe in net.pipes:
        for index, sign in ((pipe.start.index, -1.0), (pipe.end.index, 1.0)):
            if index in junction_pos:
                a12[pipe.id, junction_pos[index]] += sign
            else:
                a10[pipe.id, source_pos[index]] += sign
    diameters = np.array([p.diameter for p in net.pipes])
    r = resistance(
        [p.length for p in net.pipes], diameters, [p.roughness for p in net.pipes]
    )
    source_heads = np.array([net.nodes[s].fixed_head for s in net.source_indices])
    initial_flow = np.pi * diameters**2 / 4.0 * INITIAL_VELOCITY_MPS
    return _Incidence(a12, a10, source_heads, np.atleast_1d(r), initial_flow)


def _assemble_state(net: NetworkModel, inc: _Incidence, junction_heads, flows_cms, iterations, residual):
    heads = np.empty(net.n_nodes)
    heads[net.junction_indices] = junction_heads
    heads[net.source_indices] = inc.source_heads
    return HydraulicState(
        heads=heads,
        pressures=heads - net.elevations,
        flows=flows_cms * LPS_PER_CMS,
        iterations=iterations,
        residual=residual,
    )


def solve_steady_state(
    net: NetworkModel, demands: np.ndarray, cfg: Optional[SolverConfig] = None
) -> HydraulicState:
    """
    Solve mass and energy balance for one demand vector.

    Newton iteration on junction heads with per-pipe linearization (Todini-Pilati),
    solving the reduced system with a dense Cholesky factorization.

    Args:
        net (NetworkModel): A validated network
        demands (np.ndarray): Non-negative demand per junction, L/s, in junction order
        cfg (SolverConfig, optional): Iteration limits and tolerances

    Returns:
        HydraulicState: Heads, pressures and pipe flows

    Raises:
        ValueError: If the demand vector has the wrong length or negative entries
        NonConvergenceError: If the iteration limit is reached or the reduced
            system is singular
    """
    cfg = cfg or SolverConfig()
    demands = np.asarray(demands, dtype=float)
    if demands.shape != (net.n_junctions,):
        raise ValueError(
            f"Expected {net.n_junctions} junction demands, got shape {demands.shape}"
        )
    if np.any(demands < 0.0) or not np.all(np.isfinite(demands)):
        raise ValueError("Demands must be finite and non-negative")

    inc = _incidence(net)
    q = demands / LPS_PER_CMS
    a12, a21 = inc.a12, inc.a12.T
    source_term = inc.a10 @ inc.source_heads
    flows = inc.initial_flow.copy()
    flow_floor = cfg.tolerance * cfg.headloss_regularization * max(net.n_pipes, 1)

    heads = np.zeros(net.n_junctions)
    residual = np.inf
    for iteration in range(1, cfg.max_iterations + 1):
        headloss, slope = regularized_headloss(flows, inc.r, cfg.headloss_regularization)
        inv_slope = 1.0 / slope
        system = (a21 * inv_slope) @ a12
        rhs = (a21 @ flows - q) - a21 @ (inv_slope * (headloss + source_term))
        try:
            factor = scipy.linalg.cho_factor(system, lower=True, check_finite=False)
            heads = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as e:
            logger.error(f"Reduced system is singular at iteration {iteration}: {e}")
            raise NonConvergenceError(iteration, residual, "singular system") from e

        new_flows = flows - inv_slope * (headloss + a12 @ heads + source_term)
        change = np.abs(new_flows - flows).sum()
        flows = new_flows
        residual = float(np.max(np.abs(a21 @ flows - q), initial=0.0)) * LPS_PER_CMS

        if not np.isfinite(change):
            raise NonConvergenceError(iteration, residual, "non-finite flow update")
        relative_ok = change <= cfg.tolerance * max(np.abs(flows).sum(), flow_floor)
        if relative_ok and residual < cfg.mass_tolerance:
            return _assemble_state(net, inc, heads, flows, iteration, residual)

    logger.warning(
        f"Solver stopped after {cfg.max_iterations} iterations (residual {residual:.3e} L/s)"
    )
    raise NonConvergenceError(cfg.max_iterations, residual)


def mass_balance_residual(net: NetworkModel, state: HydraulicState, demands: np.ndarray) -> float:
    """
    Largest junction continuity violation.

    Returns:
        float: max over junctions of |inflow - outflow - demand|, L/s
    """
    inc = _incidence(net)
    if state.flows.shape != (net.n_pipes,):
        raise ValueError("State does not match the network")
    imbalance = inc.a12.T @ state.flows - np.asarray(demands, dtype=float)
    return float(np.max(np.abs(imbalance), initial=0.0))


def energy_balance_residual(net: NetworkModel, state: HydraulicState, cfg: Optional[SolverConfig] = None) -> float:
    """
    Largest pipe energy-equation violation.

    Returns:
        float: max over pipes of |H(start) - H(end) - headloss(flow)|, m
    """
    cfg = cfg or SolverConfig()
    inc = _incidence(net)
    headloss, _ = regularized_headloss(
        state.flows / LPS_PER_CMS, inc.r, cfg.headloss_regularization
    )
    start = np.array([p.start.index for p in net.pipes], dtype=int)
    end = np.array([p.end.index for p in net.pipes], dtype=int)
    gap = state.heads[start] - state.heads[end] - headloss
    return float(np.max(np.abs(gap), initial=0.0))


def solve_scenario(
    net: NetworkModel, demands: np.ndarray, cfg: Optional[SolverConfig] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Ground-truth solves for every timestep of a demand matrix.

    Args:
        demands: T x n_junctions demand matrix, L/s

    Returns:
        (T x n_junctions junction pressures, boolean convergence mask of length T).
        Rows that failed to converge hold NaN.
    """
    demands = np.asarray(demands, dtype=float)
    pressures = np.full(demands.shape, np.nan)
    converged = np.zeros(demands.shape[0], dtype=bool)
    for t, row in enumerate(demands):
        try:
            state = solve_steady_state(net, row, cfg)
        except NonConvergenceError as e:
            logger.warning(f"Ground-truth solve failed at step {t}: {e}")
            continue
        pressures[t] = state.junction_pressures(net)
        converged[t] = True
    return pressures, converged
