"""Closed-loop residual collection and two-pass calibration."""

import logging
from typing import List, Optional, Sequence

import numpy as np

from aquatwin.conformal.quantile import CalibrationTable
from aquatwin.network.model import NetworkModel
from aquatwin.sampling.policies import SamplingPolicy
from aquatwin.sampling.twin import run_digital_twin
from aquatwin.scenarios.generator import DemandScenario
from aquatwin.types import ModelBank
from aquatwin.utils.progress import create_progress_bar

logger = logging.getLogger(__name__)


def collect_residuals(
    models: ModelBank,
    net: NetworkModel,
    cal_scenarios: Sequence[DemandScenario],
    budget: int,
    calib=None,
    policy: Optional[SamplingPolicy] = None,
    warmup: Optional[int] = None,
    solve_hydraulics: bool = False,
    progress: bool = False,
) -> List[np.ndarray]:
    """
    Roll the closed loop over calibration scenarios and record |q - q_hat|.

    Residuals are taken at every junction and every step after warm-up, so each
    node ends up with len(cal_scenarios) * (T - warmup) of them. Residuals only
    depend on demands, so hydraulics are skipped unless asked for.

    Args:
        models: Forecaster per junction position
        net: Network of the scenarios
        cal_scenarios: Scenarios labeled Calibration
        budget: Nodes measured per step during the rollout
        calib: Scores driving the adaptive policy (table or scorer)
        policy: Selection rule, adaptive by default
        warmup: Warm-up override
        solve_hydraulics: Solve every step (solver failures then abort the rollout)
        progress: Show a progress bar over scenarios

    Returns:
        List[np.ndarray]: One residual array per junction

    Raises:
        MissingModelError: If a junction has no forecaster
        RolloutFailureError: If a solve fails while hydraulics are enabled
    """
    policy = policy or SamplingPolicy.adaptive()
    per_node: List[List[np.ndarray]] = [[] for _ in range(net.n_junctions)]
    bar = create_progress_bar(
        total=len(cal_scenarios),
        desc=f"Residuals ({policy.kind.value})",
        unit="scenario",
        disable=not progress,
    )
    for scenario in cal_scenarios:
        trajectory = run_digital_twin(
            net,
            models,
            calib,
            scenario,
            policy,
            budget,
            warmup=warmup,
            solve_hydraulics=solve_hydraulics,
            strict=True,
        )
        errors = np.abs(trajectory.q_true - trajectory.q_hat)
        for node in range(net.n_junctions):
            per_node[node].append(errors[:, node])
        bar.update(1)
    bar.close()
    return [np.concatenate(chunks) if chunks else np.empty(0) for chunks in per_node]


def calibrate(
    models: ModelBank,
    net: NetworkModel,
    cal_scenarios: Sequence[DemandScenario],
    budget: int,
    alpha: float,
    seed: int = 0,
    warmup: Optional[int] = None,
    archive_residuals: bool = True,
    progress: bool = False,
) -> CalibrationTable:
    """
    Two-pass conformal calibration.

    Pass 1 rolls out under a uniform-random policy to obtain provisional
    quantiles. Pass 2 rolls out again under the adaptive policy ranked by
    those provisional quantiles and yields the final table.

    Raises:
        TooFewResidualsError: If the final residual sets cannot attain the quantile
    """
    labels = net.junction_labels
    first = collect_residuals(
        models,
        net,
        cal_scenarios,
        budget,
        policy=SamplingPolicy.uniform(seed),
        warmup=warmup,
        progress=progress,
    )
    provisional = CalibrationTable.from_residuals(
        first, alpha, labels, budget, keep_residuals=False, allow_degenerate=True
    )
    logger.info(
        f"Pass 1: {int(provisional.n_cal.sum())} residuals, "
        f"median quantile {np.median(provisional.quantiles):.4f} L/s"
    )

    second = collect_residuals(
        models,
        net,
        cal_scenarios,
        budget,
        calib=provisional,
        policy=SamplingPolicy.adaptive(),
        warmup=warmup,
        progress=progress,
    )
    table = CalibrationTable.from_residuals(
        second, alpha, labels, budget, keep_residuals=archive_residuals
    )
    drift = np.abs(table.quantiles - provisional.quantiles)
    for label, before, after, shift in zip(labels, provisional.quantiles, table.quantiles, drift):
        logger.debug(
            f"Node {label}: quantile {before:.4f} -> {after:.4f} L/s (drift {shift:.4f})"
        )
    finite = np.isfinite(drift)
    if finite.any():
        logger.info(
            f"Pass 2 quantile drift: mean {drift[finite].mean():.4f}, "
            f"max {drift[finite].max():.4f} L/s"
        )
    return table
