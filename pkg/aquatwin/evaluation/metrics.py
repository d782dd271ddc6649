"""Accuracy, coverage, safety and timing metrics over twin trajectories.

Warm-up hours never reach these functions: trajectories only record the steps
after it.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from aquatwin.constants import PRESSURE_THRESHOLD_M, TIMING_COMPONENTS
from aquatwin.exceptions import EmptyEvaluationError
from aquatwin.sampling.twin import TwinTrajectory
from aquatwin.types import TimingSummary

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ("rmse_q", "rmse_p", "coverage", "coverage_all", "violation_rate")


def _pair(estimate, truth):
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimate.shape != truth.shape:
        raise ValueError(f"Shape mismatch: {estimate.shape} vs {truth.shape}")
    return estimate, truth


def _row_mask(shape, converged: Optional[np.ndarray]) -> np.ndarray:
    mask = np.ones(shape, dtype=bool)
    if converged is not None:
        converged = np.asarray(converged, dtype=bool)
        mask &= converged.reshape((-1,) + (1,) * (len(shape) - 1))
    return mask


def rmse_demand(estimate, truth) -> float:
    """
    Root mean squared demand error over every (t, node).

    Raises:
        EmptyEvaluationError: If there is nothing to evaluate
    """
    estimate, truth = _pair(estimate, truth)
    if estimate.size == 0:
        raise EmptyEvaluationError("No demand samples to evaluate")
    return float(np.sqrt(np.mean((truth - estimate) ** 2)))


def rmse_pressure(estimate, truth, converged: Optional[np.ndarray] = None) -> float:
    """
    Root mean squared pressure error.

    Steps flagged as unconverged and entries where either side is NaN (a failed
    ground-truth solve) are excluded from both sides.
    """
    estimate, truth = _pair(estimate, truth)
    mask = _row_mask(estimate.shape, converged) & np.isfinite(estimate) & np.isfinite(truth)
    if not mask.any():
        raise EmptyEvaluationError("No converged pressure samples to evaluate")
    return float(np.sqrt(np.mean((truth[mask] - estimate[mask]) ** 2)))


def empirical_coverage(
    truth,
    lo,
    hi,
    selected: Optional[np.ndarray] = None,
    unmeasured_only: bool = True,
) -> float:
    """
    Fraction of true demands inside their prediction interval.

    Args:
        truth: True demands
        lo, hi: Interval bounds
        selected: Measured-node mask with the same shape
        unmeasured_only: Restrict to nodes that were not measured

    Raises:
        EmptyEvaluationError: If no interval is available for the evaluated entries
    """
    truth, lo = _pair(truth, lo)
    _, hi = _pair(truth, hi)
    mask = ~(np.isnan(lo) | np.isnan(hi))
    if unmeasured_only and selected is not None:
        mask &= ~np.asarray(selected, dtype=bool)
    if not mask.any():
        raise EmptyEvaluationError("No intervals to evaluate coverage on")
    inside = (truth >= lo) & (truth <= hi)
    return float(inside[mask].mean())


def violation_rate(
    estimate,
    truth,
    converged: Optional[np.ndarray] = None,
    threshold: float = PRESSURE_THRESHOLD_M,
) -> float:
    """Fraction of entries where the twin reports >= threshold but truth is below it"""
    estimate, truth = _pair(estimate, truth)
    mask = _row_mask(estimate.shape, converged) & np.isfinite(estimate) & np.isfinite(truth)
    if not mask.any():
        raise EmptyEvaluationError("No pressure samples to evaluate")
    false_safe = (estimate >= threshold) & (truth < threshold)
    return float(false_safe[mask].mean())


@dataclass
class TimingProfile:
    """
    Per-component step timing.

    Attributes:
        components (List[TimingSummary]): Mean and p95 per component, ms
        total_mean_ms (float): Mean step time
        overhead_pct (float): Share of the step not spent in the hydraulic solve
    """

    components: List[TimingSummary]
    total_mean_ms: float
    overhead_pct: float

    def mean_of(self, component: str) -> float:
        for summary in self.components:
            if summary["component"] == component:
                return summary["mean_ms"]
        raise KeyError(component)


def timing_profile(timings: Mapping[str, np.ndarray]) -> TimingProfile:
    """
    Summarize per-step timings recorded by the twin loop.

    Args:
        timings: Milliseconds per step for each component

    Returns:
        TimingProfile: overhead_pct = (total - solve) / total * 100
    """
    components: List[TimingSummary] = []
    total = 0.0
    for name in TIMING_COMPONENTS:
        values = np.asarray(timings.get(name, np.zeros(0)), dtype=float)
        mean = float(values.mean()) if values.size else 0.0
        p95 = float(np.percentile(values, 95)) if values.size else 0.0
        components.append(TimingSummary(component=name, mean_ms=mean, p95_ms=p95))
        total += mean
    solve = components[TIMING_COMPONENTS.index("solve")]["mean_ms"]
    overhead = 100.0 * (total - solve) / total if total > 0 else 0.0
    return TimingProfile(components=components, total_mean_ms=total, overhead_pct=overhead)


@dataclass
class EvaluationReport:
    """
    Metrics of one trajectory plus the labels of the cell it came from.

    Pressure metrics are NaN when the trajectory carries no pressures.
    """

    rmse_q: float
    rmse_p: float
    coverage: float
    coverage_all: float
    violation_rate: float
    n_steps: int
    unconverged_steps: int
    timing: Optional[TimingProfile] = None
    labels: Dict[str, object] = field(default_factory=dict)

    def to_record(self) -> Dict[str, object]:
        record: Dict[str, object] = dict(self.labels)
        record.update(
            rmse_q=self.rmse_q,
            rmse_p=self.rmse_p,
            coverage=self.coverage,
            coverage_all=self.coverage_all,
            violation_rate=self.violation_rate,
            n_steps=self.n_steps,
            unconverged_steps=self.unconverged_steps,
        )
        return record


def _or_nan(metric, *args, **kwargs) -> float:
    try:
        return metric(*args, **kwargs)
    except EmptyEvaluationError:
        return float("nan")


def evaluate_trajectory(trajectory: TwinTrajectory, **labels) -> EvaluationReport:
    """Every metric of one trajectory; keyword arguments become report labels"""
    has_pressures = bool(np.isfinite(trajectory.p_tilde).any())
    converged = trajectory.converged if has_pressures else None
    return EvaluationReport(
        rmse_q=rmse_demand(trajectory.q_tilde, trajectory.q_true),
        rmse_p=_or_nan(rmse_pressure, trajectory.p_tilde, trajectory.p_true, converged),
        coverage=_or_nan(
            empirical_coverage,
            trajectory.q_true,
            trajectory.lo,
            trajectory.hi,
            trajectory.selected,
        ),
        coverage_all=_or_nan(
            empirical_coverage,
            trajectory.q_true,
            trajectory.lo,
            trajectory.hi,
            trajectory.selected,
            unmeasured_only=False,
        ),
        violation_rate=_or_nan(violation_rate, trajectory.p_tilde, trajectory.p_true, converged),
        n_steps=trajectory.n_steps,
        unconverged_steps=int((~trajectory.converged).sum()) if has_pressures else 0,
        timing=timing_profile(trajectory.timings) if trajectory.timings else None,
        labels=dict(labels),
    )


def summarize_reports(
    reports: Sequence[EvaluationReport],
    keys: Sequence[str],
    run_key: str = "seed",
    metrics: Sequence[str] = METRIC_COLUMNS,
) -> pd.DataFrame:
    """
    Mean and std of each metric across runs.

    Reports of the same run (several test scenarios) are averaged first; the
    per-run means are then aggregated into `<metric>_mean` and `<metric>_std`
    (population std, 0 for a single run).

    Raises:
        EmptyEvaluationError: If there are no reports
    """
    if not reports:
        raise EmptyEvaluationError("No reports to summarize")
    frame = pd.DataFrame([r.to_record() for r in reports])
    keys = list(keys)
    group_keys = keys + ([run_key] if run_key in frame.columns else [])
    per_run = frame.groupby(group_keys, sort=True)[list(metrics)].mean().reset_index()
    grouped = per_run.groupby(keys, sort=True)[list(metrics)]
    means = grouped.mean().add_suffix("_mean")
    stds = grouped.std(ddof=0).add_suffix("_std")
    summary = pd.concat([means, stds], axis=1)
    ordered = [f"{m}_{s}" for m in metrics for s in ("mean", "std")]
    summary = summary[ordered].reset_index()
    summary["runs"] = per_run.groupby(keys, sort=True).size().to_numpy()
    return summary
