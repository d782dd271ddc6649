"""Tests for residual collection and two-pass calibration."""

import logging

import numpy as np
import pytest

from aquatwin.conformal.calibration import calibrate, collect_residuals
from aquatwin.conformal.quantile import conformal_quantile
from aquatwin.exceptions import MissingModelError, TooFewResidualsError
from aquatwin.sampling.policies import SamplingPolicy
from aquatwin.scenarios.generator import DemandScenario
from tests.conftest import ConstantForecaster


@pytest.fixture
def scenarios(loop_net):
    rng = np.random.default_rng(8)
    return [
        DemandScenario(k, loop_net.base_demands * rng.uniform(0.5, 1.5, size=(20, 3)))
        for k in range(2)
    ]


def test_residuals_of_constant_forecasts(loop_net, constant_bank, scenarios):
    """Test that residuals are |truth - forecast| after warm-up for every node."""
    models = constant_bank(loop_net)
    residuals = collect_residuals(
        models, loop_net, scenarios, budget=1, policy=SamplingPolicy.uniform(0)
    )
    assert len(residuals) == 3
    for node, values in enumerate(residuals):
        expected = np.concatenate(
            [np.abs(s.demands[4:, node] - loop_net.base_demands[node]) for s in scenarios]
        )
        np.testing.assert_allclose(values, expected)
        assert values.shape == (2 * 16,)


def test_residuals_respect_warmup(loop_net, constant_bank, scenarios):
    """Test that a longer warm-up records fewer residuals."""
    residuals = collect_residuals(
        constant_bank(loop_net), loop_net, scenarios, budget=1, warmup=10
    )
    assert residuals[0].shape == (2 * 10,)


def test_residuals_missing_model(loop_net, constant_bank, scenarios):
    """Test that a bank without every junction is rejected."""
    models = constant_bank(loop_net)
    del models[2]
    with pytest.raises(MissingModelError):
        collect_residuals(models, loop_net, scenarios, budget=1)


def test_calibrate_two_pass(loop_net, constant_bank, scenarios):
    """Test the final table against quantiles of the rollout residuals."""
    models = constant_bank(loop_net)
    table = calibrate(models, loop_net, scenarios, budget=1, alpha=0.2, seed=3)
    assert table.alpha == 0.2
    assert table.budget == 1
    assert table.labels == ("J1", "J2", "J3")
    np.testing.assert_array_equal(table.n_cal, [32, 32, 32])
    for node in range(3):
        expected = conformal_quantile(
            np.concatenate(
                [np.abs(s.demands[4:, node] - loop_net.base_demands[node]) for s in scenarios]
            ),
            0.2,
        )
        assert table.quantiles[node] == pytest.approx(expected)
    assert table.residuals is not None


def test_calibrate_without_archive(loop_net, constant_bank, scenarios):
    """Test that residuals can be left out of the table."""
    table = calibrate(
        constant_bank(loop_net), loop_net, scenarios, 1, 0.2, archive_residuals=False
    )
    assert table.residuals is None


def test_calibrate_too_few_residuals(loop_net, constant_bank, scenarios):
    """Test that a tiny calibration set cannot reach a small alpha."""
    with pytest.raises(TooFewResidualsError):
        calibrate(constant_bank(loop_net), loop_net, scenarios[:1], 1, 0.01, warmup=10)


def test_calibrate_logs_drift_per_node(loop_net, constant_bank, scenarios, caplog):
    """Test one debug line per junction with both passes' quantiles."""
    caplog.set_level(logging.DEBUG, logger="aquatwin.conformal.calibration")
    calibrate(constant_bank(loop_net), loop_net, scenarios, 1, 0.2, seed=3)
    lines = [r.getMessage() for r in caplog.records if r.levelno == logging.DEBUG]
    per_node = [line for line in lines if line.startswith("Node ")]
    assert [line.split(":")[0] for line in per_node] == ["Node J1", "Node J2", "Node J3"]
    # constant forecasts give the same residuals under both policies
    assert all(line.endswith("(drift 0.0000)") for line in per_node)
    assert any("Pass 2 quantile drift" in r.getMessage() for r in caplog.records)
