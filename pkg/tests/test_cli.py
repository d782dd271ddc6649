"""Tests for the command-line interface."""

import json

import pytest
from click.testing import CliRunner

from aquatwin.cli import calibrate, cli, evaluate, generate, run, train


@pytest.fixture
def config_file(tmp_path, tiny_config):
    path = tmp_path / "config.json"
    path.write_text(tiny_config.to_json())
    return path


def test_cli_group():
    """Test CLI group base command."""
    runner = CliRunner()
    result = runner.invoke(cli, ["--help"])
    assert result.exit_code == 0
    assert "generate" in result.output


@pytest.mark.parametrize("command", ["generate", "train", "calibrate", "run", "evaluate", "ablate", "sweep"])
def test_cli_commands_help(command):
    """Test help output for CLI commands."""
    runner = CliRunner()
    result = runner.invoke(cli, [command, "--help"])
    assert result.exit_code == 0
    assert "Usage:" in result.output
    assert "--workers" in result.output


def test_generate_command(config_file, tmp_path):
    """Test that generate archives scenarios and reports the split."""
    out = tmp_path / "cli_out"
    runner = CliRunner()
    result = runner.invoke(generate, ["--config", str(config_file), "--out", str(out)])
    assert result.exit_code == 0
    assert "Generated 5 scenarios (3 train / 1 calibration / 1 test)." in result.output
    assert (out / "scenarios" / "manifest.json").exists()


def test_config_from_environment(config_file, tmp_path):
    """Test that the config path and output directory can come from the environment."""
    out = tmp_path / "env_out"
    runner = CliRunner()
    result = runner.invoke(
        generate, env={"AQUATWIN_CONFIG": str(config_file), "AQUATWIN_OUT": str(out)}
    )
    assert result.exit_code == 0
    assert (out / "config.json").exists()


def test_missing_artifacts_exit_code(config_file, tmp_path):
    """Test that a stage run before its inputs exist fails cleanly."""
    runner = CliRunner()
    result = runner.invoke(train, ["--config", str(config_file), "--out", str(tmp_path / "empty")])
    assert result.exit_code == 1
    assert "Failed:" in result.output


def test_invalid_config_exit_code(tmp_path):
    """Test that an invalid configuration is reported, not raised."""
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"alpha": 2.0}))
    runner = CliRunner()
    result = runner.invoke(generate, ["--config", str(path)])
    assert result.exit_code == 1
    assert "alpha" in result.output


def test_usage_errors(tmp_path):
    """Test that click rejects a missing config file and a zero worker count."""
    runner = CliRunner()
    assert runner.invoke(generate, ["--config", str(tmp_path / "none.json")]).exit_code == 2
    assert runner.invoke(generate, ["--workers", "0"]).exit_code == 2


def test_stage_sequence(config_file, tmp_path):
    """Test the command chain up to the report tables."""
    out = str(tmp_path / "chain")
    runner = CliRunner()
    args = ["--config", str(config_file), "--out", out]
    for command in (generate, train, calibrate, run, evaluate):
        result = runner.invoke(command, args)
        assert result.exit_code == 0, result.output
    assert "Wrote report tables to" in result.output
