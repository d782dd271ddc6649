"""Tests for the metrics module."""

import math

import numpy as np
import pytest

from aquatwin.evaluation.metrics import (
    EvaluationReport,
    empirical_coverage,
    evaluate_trajectory,
    rmse_demand,
    rmse_pressure,
    summarize_reports,
    timing_profile,
    violation_rate,
)
from aquatwin.exceptions import EmptyEvaluationError
from aquatwin.sampling.twin import TwinTrajectory


def make_trajectory(p_tilde=None, p_true=None, converged=None, timings=None) -> TwinTrajectory:
    q_true = np.array([[1.0, 2.0], [3.0, 4.0]])
    nan = np.full((2, 2), np.nan)
    return TwinTrajectory(
        scenario_id=0,
        t=np.array([5, 6]),
        selected=np.array([[True, False], [False, True]]),
        q_true=q_true,
        q_hat=q_true + 1.0,
        q_tilde=np.array([[1.0, 3.0], [4.0, 4.0]]),
        lo=np.array([[0.0, 1.0], [3.5, 3.0]]),
        hi=np.array([[2.0, 2.5], [5.0, 5.0]]),
        p_true=nan if p_true is None else p_true,
        p_tilde=nan if p_tilde is None else p_tilde,
        converged=np.ones(2, dtype=bool) if converged is None else converged,
        mass_residual=np.zeros(2),
        timings=timings or {},
    )


def test_rmse_demand_example():
    """Test the RMSE of a 2x2 error pattern."""
    assert rmse_demand([[0.0, 2.0], [1.0, 1.0]], [[1.0, 1.0], [0.0, 2.0]]) == 1.0


def test_rmse_demand_errors():
    """Test shape mismatch and empty input."""
    with pytest.raises(ValueError):
        rmse_demand(np.ones(3), np.ones(2))
    with pytest.raises(EmptyEvaluationError):
        rmse_demand(np.empty((0, 2)), np.empty((0, 2)))


def test_rmse_pressure_skips_unconverged_and_nan():
    """Test that unconverged steps and failed truth solves are excluded."""
    estimate = np.array([[30.0, 30.0], [0.0, 0.0], [25.0, 26.0]])
    truth = np.array([[31.0, 29.0], [50.0, 50.0], [np.nan, 26.0]])
    assert rmse_pressure(estimate, truth, np.array([True, False, True])) == pytest.approx(
        math.sqrt(2.0 / 3.0)
    )
    with pytest.raises(EmptyEvaluationError):
        rmse_pressure(estimate, truth, np.zeros(3, dtype=bool))


def test_violation_rate_example():
    """Test false-safe counting against the 20 m threshold."""
    estimate = np.array([[25.0, 15.0], [21.0, 20.0]])
    truth = np.array([[19.0, 10.0], [22.0, 25.0]])
    assert violation_rate(estimate, truth) == 0.25


def test_violation_rate_threshold_boundary():
    """Test that exactly 20 m reported is safe and exactly 20 m true is safe."""
    assert violation_rate([20.0], [19.99]) == 1.0
    assert violation_rate([20.0], [20.0]) == 0.0


def test_coverage_infinite_and_zero_width():
    """Test coverage extremes."""
    truth = np.array([1.0, 2.0, 3.0])
    assert empirical_coverage(truth, np.full(3, -np.inf), np.full(3, np.inf)) == 1.0
    assert empirical_coverage(truth, truth + 0.5, truth + 0.5) == 0.0
    assert empirical_coverage(truth, truth, truth) == 1.0


def test_coverage_unmeasured_only():
    """Test that measured nodes are left out unless asked for."""
    truth = np.array([[1.0, 2.0]])
    lo, hi = np.array([[0.0, 3.0]]), np.array([[2.0, 4.0]])
    selected = np.array([[False, True]])
    assert empirical_coverage(truth, lo, hi, selected) == 1.0
    assert empirical_coverage(truth, lo, hi, selected, unmeasured_only=False) == 0.5


def test_coverage_without_intervals():
    """Test that missing intervals cannot be evaluated."""
    with pytest.raises(EmptyEvaluationError):
        empirical_coverage(np.ones(2), np.full(2, np.nan), np.full(2, np.nan))


def test_timing_profile():
    """Test component means, p95 and the non-solver overhead."""
    profile = timing_profile(
        {
            "inference": np.array([1.0, 3.0]),
            "uncertainty": np.array([0.0, 0.0]),
            "selection": np.array([1.0, 1.0]),
            "solve": np.array([6.0, 6.0]),
        }
    )
    assert profile.mean_of("inference") == 2.0
    assert profile.total_mean_ms == 9.0
    assert profile.overhead_pct == pytest.approx(100.0 * 3.0 / 9.0)
    assert profile.components[0]["p95_ms"] == pytest.approx(2.9)
    with pytest.raises(KeyError):
        profile.mean_of("network")


def test_timing_profile_empty():
    """Test that missing components count as zero."""
    profile = timing_profile({})
    assert profile.total_mean_ms == 0.0
    assert profile.overhead_pct == 0.0


def test_evaluate_trajectory_without_pressures():
    """Test demand and coverage metrics when hydraulics were skipped."""
    report = evaluate_trajectory(make_trajectory(), method="adaptive", seed=1)
    assert report.rmse_q == pytest.approx(math.sqrt(2.0 / 4.0))
    assert math.isnan(report.rmse_p)
    assert math.isnan(report.violation_rate)
    # unmeasured entries: (0, 1) at 2 in [1, 2.5], (1, 0) at 3 outside [3.5, 5]
    assert report.coverage == 0.5
    assert report.coverage_all == 0.75
    assert report.n_steps == 2
    assert report.unconverged_steps == 0
    assert report.timing is None
    assert report.labels == {"method": "adaptive", "seed": 1}


def test_evaluate_trajectory_with_pressures():
    """Test pressure metrics and unconverged step counting."""
    trajectory = make_trajectory(
        p_tilde=np.array([[22.0, 30.0], [0.0, 0.0]]),
        p_true=np.array([[18.0, 30.0], [25.0, 25.0]]),
        converged=np.array([True, False]),
        timings={"solve": np.array([1.0, 1.0])},
    )
    report = evaluate_trajectory(trajectory)
    assert report.rmse_p == pytest.approx(math.sqrt(8.0))
    assert report.violation_rate == 0.5
    assert report.unconverged_steps == 1
    assert report.timing.overhead_pct == 0.0
    record = report.to_record()
    assert record["rmse_p"] == report.rmse_p


def report(method, seed, rmse_q, budget=0.2):
    return EvaluationReport(
        rmse_q=rmse_q,
        rmse_p=1.0,
        coverage=0.9,
        coverage_all=0.95,
        violation_rate=0.0,
        n_steps=10,
        unconverged_steps=0,
        labels={"network": "net", "method": method, "budget": budget, "sensor_sigma": 0.0, "seed": seed},
    )


def test_summarize_reports_mean_and_std():
    """Test that scenarios are averaged per seed before aggregating seeds."""
    reports = [
        report("adaptive", 0, 1.0),
        report("adaptive", 0, 3.0),
        report("adaptive", 1, 4.0),
        report("uniform", 0, 5.0),
    ]
    keys = ("network", "method", "budget", "sensor_sigma")
    summary = summarize_reports(reports, keys)
    assert list(summary.columns[:4]) == list(keys)
    assert summary.columns[-1] == "runs"
    adaptive = summary[summary["method"] == "adaptive"].iloc[0]
    assert adaptive["rmse_q_mean"] == 3.0
    assert adaptive["rmse_q_std"] == 1.0
    assert adaptive["runs"] == 2
    uniform = summary[summary["method"] == "uniform"].iloc[0]
    assert uniform["rmse_q_std"] == 0.0
    assert uniform["runs"] == 1


def test_summarize_reports_empty():
    """Test that summarizing nothing is an error."""
    with pytest.raises(EmptyEvaluationError):
        summarize_reports([], ("method",))
