"""Tests for the config module."""

import json

import pytest

from aquatwin.config import ExperimentConfig, GenConfig, LstmHyperparams, SolverConfig
from aquatwin.constants import NoiseMode, PolicyKind
from aquatwin.exceptions import InvalidConfigError


def test_config_default_values():
    """Test that ExperimentConfig initializes with the benchmark defaults."""
    config = ExperimentConfig()
    assert config.network == "hanoi"
    assert config.label == "hanoi"
    assert config.alpha == 0.1
    assert config.hyper.lookback == 24
    assert config.hyper.layers == 2
    assert config.hyper.hidden == 16
    assert config.gen.horizon_hours == 2160
    assert config.split_fractions == (0.6, 0.2, 0.2)
    assert config.noise_mode is NoiseMode.MULTIPLICATIVE
    assert PolicyKind.ADAPTIVE in config.policies
    assert config.seeds == (0, 1, 2)


def test_label_from_path_and_override():
    """Test the report label of file networks."""
    assert ExperimentConfig(network="nets/net3.inp").label == "net3"
    assert ExperimentConfig(network="nets/net3.inp", network_name="Net3").label == "Net3"


@pytest.mark.parametrize(
    "factory,field_path",
    [
        (lambda: GenConfig(noise_cv=-0.1), "noise_cv"),
        (lambda: GenConfig(node_class_fractions=(0.5, 0.6)), "node_class_fractions"),
        (lambda: LstmHyperparams(dropout=1.0), "dropout"),
        (lambda: LstmHyperparams(max_train_windows=0), "max_train_windows"),
        (lambda: SolverConfig(tolerance=0.0), "tolerance"),
        (lambda: ExperimentConfig(alpha=1.0), "alpha"),
        (lambda: ExperimentConfig(budgets=(0.2, 1.5)), "budgets[1]"),
        (lambda: ExperimentConfig(sensor_sigmas=(-0.1,)), "sensor_sigmas[0]"),
        (lambda: ExperimentConfig(seeds=()), "seeds"),
        (lambda: ExperimentConfig(split_fractions=(0.5, 0.5, 0.0)), "split_fractions"),
        (lambda: ExperimentConfig(ablation_budget=0.0), "ablation_budget"),
        (lambda: ExperimentConfig(gen=GenConfig(horizon_hours=24)), "gen.horizon_hours"),
    ],
)
def test_config_validation(factory, field_path):
    """Test that invalid values name the offending field."""
    with pytest.raises(InvalidConfigError) as exc_info:
        factory()
    assert exc_info.value.field_path == field_path


def test_from_dict_unknown_keys():
    """Test that unknown top-level and nested keys are rejected."""
    with pytest.raises(InvalidConfigError) as exc_info:
        ExperimentConfig.from_dict({"alhpa": 0.1})
    assert exc_info.value.field_path == "alhpa"
    with pytest.raises(InvalidConfigError) as exc_info:
        ExperimentConfig.from_dict({"hyper": {"hiden": 8}})
    assert exc_info.value.field_path == "hyper.hiden"


def test_from_dict_nested_validation():
    """Test that nested validation errors carry the dotted path."""
    with pytest.raises(InvalidConfigError) as exc_info:
        ExperimentConfig.from_dict({"gen": {"noise_cv": -1.0}})
    assert exc_info.value.field_path == "gen.noise_cv"


def test_from_dict_enums():
    """Test policy and noise mode parsing."""
    config = ExperimentConfig.from_dict(
        {"policies": ["adaptive", "round_robin"], "noise_mode": "additive"}
    )
    assert config.policies == (PolicyKind.ADAPTIVE, PolicyKind.ROUND_ROBIN)
    assert config.noise_mode is NoiseMode.ADDITIVE
    with pytest.raises(InvalidConfigError) as exc_info:
        ExperimentConfig.from_dict({"policies": ["adaptive", "oracle"]})
    assert exc_info.value.field_path == "policies[1]"


def test_from_dict_rejects_non_objects():
    """Test type errors in the document structure."""
    with pytest.raises(InvalidConfigError):
        ExperimentConfig.from_dict([])
    with pytest.raises(InvalidConfigError):
        ExperimentConfig.from_dict({"gen": 5})
    with pytest.raises(InvalidConfigError):
        ExperimentConfig.from_dict({"budgets": 0.2})


def test_json_round_trip(tmp_path, tiny_config):
    """Test that a written configuration loads back equal."""
    path = tmp_path / "config.json"
    path.write_text(tiny_config.to_json())
    assert ExperimentConfig.from_json(path) == tiny_config


def test_from_json_invalid(tmp_path):
    """Test that malformed JSON is a configuration error."""
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(InvalidConfigError):
        ExperimentConfig.from_json(path)


def test_config_hash():
    """Test that the hash follows content, not identity."""
    a = ExperimentConfig()
    b = ExperimentConfig.from_dict(json.loads(a.to_json()))
    assert a.config_hash() == b.config_hash()
    assert len(a.config_hash()) == 64
    assert ExperimentConfig(alpha=0.2).config_hash() != a.config_hash()
