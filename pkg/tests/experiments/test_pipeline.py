"""Tests for the experiment pipeline."""

import dataclasses

import pandas as pd
import pytest

from aquatwin.config import ExperimentConfig
from aquatwin.constants import Split
from aquatwin.evaluation.reports import TABLE_FILES
from aquatwin.exceptions import MissingArtifactError
from aquatwin.experiments.artifacts import read_manifest
from aquatwin.experiments.pipeline import (
    RUN_INDEX_COLUMNS,
    ExperimentPipeline,
    sensitivity_grid,
)


def test_sensitivity_grid_default():
    """Test the one-factor-at-a-time sweep grid."""
    assert sensitivity_grid(ExperimentConfig()) == [
        (0.05, 24),
        (0.1, 24),
        (0.2, 24),
        (0.1, 12),
        (0.1, 48),
    ]


def test_pipeline_requires_a_worker(tiny_config):
    """Test that the pool size must be positive."""
    with pytest.raises(ValueError):
        ExperimentPipeline(tiny_config, max_workers=0)


def test_output_dir_override(tiny_config, tmp_path):
    """Test that an explicit output directory wins over the config."""
    pipeline = ExperimentPipeline(tiny_config, output_dir=tmp_path / "elsewhere")
    assert pipeline.layout.root == tmp_path / "elsewhere"


def test_stages_need_their_inputs(tiny_config):
    """Test that stages fail clearly when earlier stages are missing."""
    pipeline = ExperimentPipeline(tiny_config)
    with pytest.raises(MissingArtifactError):
        pipeline.train()
    with pytest.raises(MissingArtifactError):
        pipeline.load_run_reports()


def test_generate(tiny_config):
    """Test scenario generation, splitting and archiving."""
    pipeline = ExperimentPipeline(tiny_config)
    scenario_set = pipeline.generate()
    assert len(scenario_set) == 5
    assert [len(scenario_set.by_split(s)) for s in Split] == [3, 1, 1]
    assert pipeline.layout.config_file.exists()
    reloaded = ExperimentPipeline(tiny_config).scenarios
    assert len(reloaded) == 5
    assert ExperimentConfig.from_json(pipeline.layout.config_file) == tiny_config


def test_full_pipeline(tiny_config):
    """Test generate, train, calibrate, run and evaluate on a small loop network."""
    pipeline = ExperimentPipeline(tiny_config)
    layout = pipeline.layout
    pipeline.generate()

    models = pipeline.train()
    assert sorted(models) == [0, 1, 2]
    assert read_manifest(layout.models)["extra"]["model_seeds"] == [0, 1, 2]

    table = pipeline.calibrate()
    assert table.alpha == 0.2
    assert table.budget == 1
    assert layout.calibration_file.exists()
    assert layout.residuals_file.exists()

    reports = pipeline.run()
    index = pd.read_csv(layout.run_index)
    assert list(index.columns) == RUN_INDEX_COLUMNS
    # four policies at two budgets plus a single full-measurement cell
    assert len(index) == 9
    assert (index["method"] == "full").sum() == 1
    assert len(reports) == 9
    for name in index["file"]:
        assert (layout.runs / f"{name}.csv.gz").exists()
        assert (layout.runs / f"{name}.timing.json").exists()

    tables = pipeline.evaluate()
    assert set(tables) == {"demand", "pressure", "safety", "timing"}
    assert len(tables["demand"]) == 9
    for name in ("demand", "pressure", "safety", "timing"):
        assert (layout.reports / TABLE_FILES[name]).exists()
    assert (layout.charts / "rmse_vs_budget.svg").exists()
    assert (layout.charts / "timing.svg").exists()

    rebuilt = ExperimentPipeline(tiny_config).load_run_reports()
    assert sorted(r.rmse_q for r in rebuilt) == pytest.approx(sorted(r.rmse_q for r in reports))

    frame = pipeline.sweep()
    assert list(zip(frame["alpha"], frame["lookback"])) == [(0.2, 4)]
    assert (layout.reports / TABLE_FILES["sensitivity"]).exists()


def test_sweep_trains_other_lookbacks(tiny_config):
    """Test that sweep lookbacks get their own model banks."""
    config = dataclasses.replace(tiny_config, sweep_lookbacks=(4, 6))
    pipeline = ExperimentPipeline(config)
    pipeline.generate()
    pipeline.train()
    frame = pipeline.sweep()
    assert list(zip(frame["alpha"], frame["lookback"])) == [(0.2, 4), (0.2, 6)]
    assert (pipeline.layout.sweep_models(6) / "index.json").exists()


@pytest.mark.slow
def test_hanoi_pipeline(tmp_path, tiny_hyper):
    """Test the run grid on the benchmark network with a short horizon."""
    config = ExperimentConfig(
        gen=dataclasses.replace(ExperimentConfig().gen, n_scenarios=5, horizon_hours=72),
        hyper=tiny_hyper,
        budgets=(0.2,),
        sensor_sigmas=(0.0,),
        seeds=(0,),
        output_dir=str(tmp_path / "hanoi"),
        progress=False,
    )
    pipeline = ExperimentPipeline(config)
    pipeline.generate()
    pipeline.train()
    pipeline.calibrate()
    reports = pipeline.run()
    index = pd.read_csv(pipeline.layout.run_index)
    assert set(index.loc[index["method"] != "full", "nodes"]) == {6}
    assert index.loc[index["method"] == "full", "nodes"].tolist() == [31]
    assert all(r.unconverged_steps == 0 for r in reports)
    tables = pipeline.evaluate()
    full = tables["demand"][tables["demand"]["method"] == "full"].iloc[0]
    assert full["rmse_q_mean"] == 0.0
