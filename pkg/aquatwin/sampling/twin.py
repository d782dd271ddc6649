"""Closed-loop digital twin: forecast, score, select, fuse, solve."""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
import pandas as pd

from aquatwin.config import SolverConfig
from aquatwin.constants import TIMING_COMPONENTS, NoiseMode
from aquatwin.exceptions import NonConvergenceError, RolloutFailureError
from aquatwin.forecasting.bank import BankPredictor
from aquatwin.hydraulics.solver import solve_steady_state
from aquatwin.network.model import NetworkModel
from aquatwin.sampling.policies import SamplingPolicy, select_nodes
from aquatwin.scenarios.generator import DemandScenario, inject_noise
from aquatwin.types import ModelBank, UncertaintySource
from aquatwin.utils.progress import create_progress_bar

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = [
    "scenario",
    "t",
    "node",
    "selected",
    "q_true",
    "q_hat",
    "q_tilde",
    "lo",
    "hi",
    "p_true",
    "p_tilde",
    "flow_diag",
]


@dataclass
class TwinTrajectory:
    """
    Everything recorded by one closed-loop run, one row per step after warm-up.

    Attributes:
        scenario_id (int): Source scenario
        t (np.ndarray): Absolute hour of every recorded step
        selected (np.ndarray): (steps, N) measured-node mask
        q_true, q_hat, q_tilde (np.ndarray): (steps, N) true, forecast and fused demands, L/s
        lo, hi (np.ndarray): (steps, N) prediction interval bounds, NaN without a scorer
        p_true, p_tilde (np.ndarray): (steps, N) true and estimated pressures, m
        converged (np.ndarray): (steps,) solver success flag
        mass_residual (np.ndarray): (steps,) solver mass-balance residual, L/s
        timings (Dict[str, np.ndarray]): Per-component wall-clock per step, ms
    """

    scenario_id: int
    t: np.ndarray
    selected: np.ndarray
    q_true: np.ndarray
    q_hat: np.ndarray
    q_tilde: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    p_true: np.ndarray
    p_tilde: np.ndarray
    converged: np.ndarray
    mass_residual: np.ndarray
    iterations: Optional[np.ndarray] = None
    timings: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return self.q_true.shape[0]

    @property
    def n_junctions(self) -> int:
        return self.q_true.shape[1]

    @property
    def budget_per_step(self) -> np.ndarray:
        return self.selected.sum(axis=1)

    def to_frame(self) -> pd.DataFrame:
        """Long-format dump with one row per (t, node)"""
        steps, n = self.q_true.shape
        flow_diag = np.where(self.converged, self.mass_residual, np.nan)
        frame = pd.DataFrame(
            {
                "scenario": np.full(steps * n, self.scenario_id, dtype=int),
                "t": np.repeat(self.t, n),
                "node": np.tile(np.arange(n), steps),
                "selected": self.selected.astype(int).ravel(),
                "q_true": self.q_true.ravel(),
                "q_hat": self.q_hat.ravel(),
                "q_tilde": self.q_tilde.ravel(),
                "lo": self.lo.ravel(),
                "hi": self.hi.ravel(),
                "p_true": self.p_true.ravel(),
                "p_tilde": self.p_tilde.ravel(),
                "flow_diag": np.repeat(flow_diag, n),
            }
        )
        return frame[TRAJECTORY_COLUMNS]

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "TwinTrajectory":
        """Rebuild a trajectory from `to_frame` output (timings are not part of it)"""
        frame = frame.sort_values(["t", "node"], kind="stable")
        t = np.unique(frame["t"].to_numpy())
        n = int(frame["node"].max()) + 1
        shape = (t.shape[0], n)

        def grid(column: str) -> np.ndarray:
            return frame[column].to_numpy(dtype=float).reshape(shape)

        flow_diag = grid("flow_diag")[:, 0]
        return cls(
            scenario_id=int(frame["scenario"].iloc[0]),
            t=t,
            selected=grid("selected").astype(bool),
            q_true=grid("q_true"),
            q_hat=grid("q_hat"),
            q_tilde=grid("q_tilde"),
            lo=grid("lo"),
            hi=grid("hi"),
            p_true=grid("p_true"),
            p_tilde=grid("p_tilde"),
            converged=np.isfinite(flow_diag),
            mass_residual=np.nan_to_num(flow_diag, nan=0.0),
        )


def fuse_state(
    true_demands: np.ndarray,
    predictions: np.ndarray,
    selected: np.ndarray,
    sensor_sigma: float = 0.0,
    noise_seed=0,
    noise_mode: NoiseMode = NoiseMode.MULTIPLICATIVE,
) -> np.ndarray:
    """
    Hybrid demand vector: measurements on selected nodes, forecasts elsewhere.

    Measurements are the true demands with Gaussian sensor noise at
    `sensor_sigma` (relative for the multiplicative mode, L/s for the additive
    one). Exact truth when sigma is 0. The result is clamped at 0.
    """
    true_demands = np.asarray(true_demands, dtype=float)
    predictions = np.asarray(predictions, dtype=float)
    if true_demands.shape != predictions.shape:
        raise ValueError(
            f"Demand shapes differ: {true_demands.shape} vs {predictions.shape}"
        )
    selected = np.asarray(selected, dtype=int)
    fused = predictions.copy()
    measured = true_demands[selected]
    if sensor_sigma > 0.0 and measured.size:
        if noise_mode is NoiseMode.ADDITIVE:
            eta = np.random.default_rng(noise_seed).standard_normal(measured.shape)
            measured = measured + sensor_sigma * eta
        else:
            measured = inject_noise(measured, sensor_sigma, noise_seed)
    fused[selected] = measured
    return np.maximum(fused, 0.0)


def _scorer_of(calib) -> Optional[UncertaintySource]:
    if calib is None or isinstance(calib, UncertaintySource):
        return calib
    return calib.scorer()


def run_digital_twin(
    net: NetworkModel,
    models: ModelBank,
    calib,
    scenario: DemandScenario,
    policy: SamplingPolicy,
    budget: int,
    sensor_sigma: float = 0.0,
    solver_cfg: Optional[SolverConfig] = None,
    *,
    seed: int = 0,
    noise_mode: NoiseMode = NoiseMode.MULTIPLICATIVE,
    warmup: Optional[int] = None,
    solve_hydraulics: bool = True,
    truth_pressures: Optional[np.ndarray] = None,
    strict: bool = False,
    progress: bool = False,
) -> TwinTrajectory:
    """
    Run the closed loop over one scenario.

    The first `warmup` hours (default: the longest forecaster lookback) seed
    every history with true demands and are not recorded. Each later hour t:

    1. forecast every node from the fused history
    2. score uncertainty with the calibration table (or another scorer)
    3. select the measured set
    4. fuse measurements and forecasts; the fused vector enters all histories
    5. solve hydraulics on the fused demands

    Args:
        net: Network the scenario runs on
        models: Forecaster per junction position
        calib: CalibrationTable, any `UncertaintySource`, or None (no intervals,
            zero scores)
        scenario: Ground-truth demands
        policy: Selection rule
        budget: Nodes measured per step; 0 gives a pure autoregressive rollout
        sensor_sigma: Measurement noise level
        solver_cfg: Hydraulic solver settings
        seed: Run seed of the sensor-noise stream
        noise_mode: Multiplicative or additive sensor noise
        warmup: Override of the warm-up length
        solve_hydraulics: False skips step 5 (pressures stay NaN)
        truth_pressures: (T, N) ground-truth pressures attached to the record
        strict: Raise instead of reusing the previous state on solver failure
        progress: Show a progress bar

    Returns:
        TwinTrajectory: Per-step record

    Raises:
        MissingModelError: If a junction has no forecaster
        BudgetExceedsNetworkError: If budget > number of junctions
        RolloutFailureError: In strict mode, when a solve fails
    """
    n = net.n_junctions
    truth = np.asarray(scenario.demands, dtype=float)
    horizon = truth.shape[0]
    predictor = BankPredictor(models, n)
    lookback = predictor.lookback
    warmup = lookback if warmup is None else warmup
    if warmup < lookback:
        raise ValueError(f"Warm-up {warmup} is shorter than the forecaster lookback {lookback}")
    if horizon <= warmup:
        raise ValueError(f"Scenario of {horizon} h is too short for a {warmup} h warm-up")
    scorer = _scorer_of(calib)
    if scorer is not None:
        scorer.reset(n)
    selection_rng = policy.rng()

    steps = horizon - warmup
    history = np.empty((n, horizon))
    history[:, :warmup] = truth[:warmup].T
    selected = np.zeros((steps, n), dtype=bool)
    q_hat = np.empty((steps, n))
    q_tilde = np.empty((steps, n))
    lo = np.full((steps, n), np.nan)
    hi = np.full((steps, n), np.nan)
    p_tilde = np.full((steps, n), np.nan)
    converged = np.zeros(steps, dtype=bool)
    iterations = np.zeros(steps, dtype=int)
    mass_residual = np.zeros(steps)
    timings = {name: np.zeros(steps) for name in TIMING_COMPONENTS}
    previous_pressures: Optional[np.ndarray] = None

    bar = create_progress_bar(
        total=steps,
        desc=f"Scenario {scenario.scenario_id} ({policy.kind.value}, B={budget})",
        unit="h",
        disable=not progress,
    )
    for k, t in enumerate(range(warmup, horizon)):
        start = time.perf_counter()
        forecast = predictor.predict(history[:, t - lookback : t])
        after_inference = time.perf_counter()

        if scorer is not None:
            scores, half_widths = scorer.update(forecast)
            lo[k] = forecast - half_widths
            hi[k] = forecast + half_widths
        else:
            scores = np.zeros(n)
        after_uncertainty = time.perf_counter()

        chosen = select_nodes(policy, scores, budget, k, selection_rng)
        fused = fuse_state(
            truth[t],
            forecast,
            chosen,
            sensor_sigma,
            [seed, scenario.scenario_id, t],
            noise_mode,
        )
        history[:, t] = fused
        after_selection = time.perf_counter()

        if solve_hydraulics:
            try:
                state = solve_steady_state(net, fused, solver_cfg)
                p_tilde[k] = state.junction_pressures(net)
                previous_pressures = p_tilde[k]
                converged[k] = True
                iterations[k] = state.iterations
                mass_residual[k] = state.residual
            except NonConvergenceError as e:
                if strict:
                    logger.error(
                        f"Scenario {scenario.scenario_id}: solver failed at hour {t}"
                    )
                    raise RolloutFailureError(scenario.scenario_id, t) from e
                logger.warning(
                    f"Scenario {scenario.scenario_id}: hour {t} did not converge, "
                    f"reusing previous state ({e})"
                )
                if previous_pressures is not None:
                    p_tilde[k] = previous_pressures
                iterations[k] = e.iterations
                mass_residual[k] = e.residual
        end = time.perf_counter()

        selected[k, chosen] = True
        q_hat[k] = forecast
        q_tilde[k] = fused
        timings["inference"][k] = (after_inference - start) * 1e3
        timings["uncertainty"][k] = (after_uncertainty - after_inference) * 1e3
        timings["selection"][k] = (after_selection - after_uncertainty) * 1e3
        timings["solve"][k] = (end - after_selection) * 1e3
        bar.update(1)
    bar.close()

    if truth_pressures is not None:
        p_true = np.asarray(truth_pressures, dtype=float)[warmup:]
    else:
        p_true = np.full((steps, n), np.nan)

    if solve_hydraulics:
        logger.debug(
            f"Scenario {scenario.scenario_id}: {steps} steps, budget {budget}, "
            f"{int((~converged).sum())} unconverged"
        )
    return TwinTrajectory(
        scenario_id=scenario.scenario_id,
        t=np.arange(warmup, horizon),
        selected=selected,
        q_true=truth[warmup:].copy(),
        q_hat=q_hat,
        q_tilde=q_tilde,
        lo=lo,
        hi=hi,
        p_true=p_true,
        p_tilde=p_tilde,
        converged=converged,
        mass_residual=mass_residual,
        iterations=iterations,
        timings=timings,
    )
