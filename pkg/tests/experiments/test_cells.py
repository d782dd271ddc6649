"""Tests for run cells and the worker pool."""

import gzip
import json

import numpy as np
import pytest

from aquatwin.config import SolverConfig
from aquatwin.evaluation.metrics import evaluate_trajectory
from aquatwin.experiments.cells import (
    CellContext,
    TwinCell,
    map_cells,
    read_cell_trajectories,
    run_cell,
    timing_path,
    trajectory_path,
)
from aquatwin.hydraulics.solver import solve_scenario
from aquatwin.sampling.policies import SamplingPolicy
from aquatwin.scenarios.generator import DemandScenario


@pytest.fixture
def context(loop_net):
    rng = np.random.default_rng(5)
    scenarios = [
        DemandScenario(k, loop_net.base_demands * rng.uniform(0.7, 1.3, size=(10, 3)))
        for k in (3, 8)
    ]
    truth = [solve_scenario(loop_net, s.demands)[0] for s in scenarios]
    return CellContext(loop_net, scenarios, truth, SolverConfig())


def make_cell(loop_net, constant_bank, context, dump_stem=None):
    return TwinCell(
        labels={"network": "loop", "method": "round_robin", "budget": 0.34},
        models=constant_bank(loop_net),
        calib=None,
        policy=SamplingPolicy.round_robin(),
        budget=1,
        seed=2,
        dump_stem=dump_stem,
        context=context,
    )


@pytest.mark.parametrize("workers", [1, 2])
def test_map_cells_keeps_task_order(workers):
    """Test that results follow task order whatever the pool size."""
    assert map_cells(abs, [-3, 1, -2, 5], workers) == [3, 1, 2, 5]


def test_run_cell_requires_context(loop_net, constant_bank):
    """Test that a cell without shared inputs cannot run."""
    with pytest.raises(ValueError):
        run_cell(make_cell(loop_net, constant_bank, None))


def test_run_cell_reports(loop_net, constant_bank, context):
    """Test one labelled report per scenario."""
    reports = run_cell(make_cell(loop_net, constant_bank, context))
    assert [r.labels["scenario"] for r in reports] == [3, 8]
    for report in reports:
        assert report.labels["seed"] == 2
        assert report.labels["method"] == "round_robin"
        assert report.n_steps == 6
        assert report.unconverged_steps == 0
        assert report.timing is not None


def test_run_cell_dump_round_trip(loop_net, constant_bank, context, tmp_path):
    """Test that dumped trajectories rebuild the same metrics."""
    stem = tmp_path / "runs" / "cell"
    reports = run_cell(make_cell(loop_net, constant_bank, context, stem))
    assert trajectory_path(stem).name == "cell.csv.gz"
    with gzip.open(trajectory_path(stem), "rt") as handle:
        assert handle.readline().startswith("scenario,")
    timings = json.loads(timing_path(stem).read_text())
    assert set(timings) == {"3", "8"}

    trajectories = read_cell_trajectories(stem)
    assert [t.scenario_id for t in trajectories] == [3, 8]
    for trajectory, report in zip(trajectories, reports):
        assert trajectory.timings["solve"].shape == (6,)
        assert trajectory.converged.all()
        rebuilt = evaluate_trajectory(trajectory)
        assert rebuilt.rmse_q == report.rmse_q
        assert rebuilt.rmse_p == report.rmse_p


def test_dumps_are_reproducible(loop_net, constant_bank, context, tmp_path):
    """Test that the same cell writes identical trajectory tables."""
    run_cell(make_cell(loop_net, constant_bank, context, tmp_path / "a"))
    run_cell(make_cell(loop_net, constant_bank, context, tmp_path / "b"))
    with gzip.open(tmp_path / "a.csv.gz") as a, gzip.open(tmp_path / "b.csv.gz") as b:
        assert a.read() == b.read()
