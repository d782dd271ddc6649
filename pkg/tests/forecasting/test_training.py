"""Tests for the training module."""

from dataclasses import replace

import numpy as np
import pytest

from aquatwin.config import LstmHyperparams
from aquatwin.exceptions import InsufficientDataError, NonFiniteLossError
from aquatwin.forecasting.training import (
    AdamOptimizer,
    forward_fill,
    make_windows,
    node_training_series,
    train_node_model,
)
from aquatwin.network.model import NodeId


def sinusoid(length: int, phase: float = 0.0) -> np.ndarray:
    hours = np.arange(length)
    return 10.0 + 3.0 * np.sin(2 * np.pi * hours / 24 + phase)


def test_adam_first_step():
    """Test that the bias-corrected first step moves by the learning rate."""
    params = {"w": np.array([1.0, -1.0])}
    AdamOptimizer(0.1).step(params, {"w": np.array([2.0, -0.5])})
    np.testing.assert_allclose(params["w"], [0.9, -0.9], atol=1e-6)


def test_adam_updates_in_place():
    """Test that parameters are updated in place and steps are counted."""
    weights = np.zeros(3)
    optimizer = AdamOptimizer(0.01)
    for _ in range(3):
        optimizer.step({"w": weights}, {"w": np.ones(3)})
    assert optimizer.steps == 3
    assert np.all(weights < 0.0)


def test_forward_fill_drops_leading_gap():
    """Test that gaps take the last value and leading gaps are dropped."""
    np.testing.assert_array_equal(forward_fill([np.nan, 1.0, np.nan, 3.0]), [1.0, 1.0, 3.0])


def test_make_windows():
    """Test sliding windows and next-step targets."""
    windows, targets = make_windows([np.arange(6.0), np.arange(2.0)], 2)
    np.testing.assert_array_equal(windows, [[0, 1], [1, 2], [2, 3], [3, 4]])
    np.testing.assert_array_equal(targets, [2, 3, 4, 5])


def test_make_windows_empty():
    """Test that series shorter than the lookback give no windows."""
    windows, targets = make_windows([np.arange(3.0)], 3)
    assert windows.shape == (0, 3)
    assert targets.shape == (0,)


def test_node_training_series():
    """Test that one column is taken from every matrix."""
    matrices = [np.arange(6.0).reshape(3, 2), np.ones((4, 2))]
    series = node_training_series(matrices, 1)
    np.testing.assert_array_equal(series[0], [1.0, 3.0, 5.0])
    assert series[1].shape == (4,)


def test_insufficient_data(tiny_hyper):
    """Test that too few windows for two batches is rejected."""
    with pytest.raises(InsufficientDataError):
        train_node_model([sinusoid(10)], tiny_hyper)


def test_training_log_and_determinism(tiny_hyper):
    """Test the per-epoch log and that training is reproducible."""
    series = [sinusoid(48), sinusoid(48, 1.0)]
    model = train_node_model(series, tiny_hyper, NodeId(2, "J3"), seed=7)
    again = train_node_model(series, tiny_hyper, NodeId(2, "J3"), seed=7)

    assert model.node == NodeId(2, "J3")
    assert model.seed == 7
    assert 1 <= len(model.train_log) <= tiny_hyper.max_epochs
    assert [r["epoch"] for r in model.train_log] == list(range(1, len(model.train_log) + 1))
    best = [r["best_val_loss"] for r in model.train_log]
    assert best == sorted(best, reverse=True)
    assert model.normalization["mean"] == pytest.approx(10.0, abs=0.2)
    for name, value in model.params.items():
        np.testing.assert_array_equal(value, again.params[name])


def test_training_window_cap(tiny_hyper):
    """Test that the window cap still trains a usable model."""
    hyper = replace(tiny_hyper, max_train_windows=20)
    model = train_node_model([sinusoid(200)], hyper)
    assert np.isfinite(model.predict(sinusoid(4)))


def test_constant_series_forecast(tiny_hyper):
    """Test that a constant demand is forecast within 1%."""
    model = train_node_model([np.full(60, 7.5), np.full(40, 7.5)], tiny_hyper, seed=2)
    assert model.predict(np.full(4, 7.5)) == pytest.approx(7.5, rel=0.01)


def test_non_finite_loss(tiny_hyper, mocker):
    """Test that a diverging objective raises NonFiniteLossError."""
    mocker.patch(
        "aquatwin.forecasting.training.objective",
        return_value=(float("nan"), float("nan"), {}),
    )
    with pytest.raises(NonFiniteLossError) as exc_info:
        train_node_model([sinusoid(48)], tiny_hyper)
    assert exc_info.value.epoch == 1


@pytest.mark.slow
def test_learns_daily_cycle():
    """Test that a small model learns a clean daily sinusoid."""
    hyper = LstmHyperparams(
        lookback=24,
        layers=1,
        hidden=8,
        dropout=0.0,
        learning_rate=1e-2,
        batch_size=32,
        max_epochs=80,
        patience=15,
        l2=0.0,
    )
    series = [sinusoid(240, phase) for phase in (0.0, 0.5, 1.0)]
    model = train_node_model(series, hyper)
    assert model.train_log[-1]["best_val_loss"] < 0.05
    window = sinusoid(25)
    assert model.predict(window[:24]) == pytest.approx(window[24], abs=1.0)
