"""Training of per-node forecasters: windowing, Adam, early stopping."""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from aquatwin.config import LstmHyperparams
from aquatwin.exceptions import InsufficientDataError, NonFiniteLossError
from aquatwin.forecasting.lstm import (
    ForecastModel,
    forward_batch,
    init_model,
    normalization_from,
    objective,
    standardize,
    zero_floor,
)
from aquatwin.network.model import NodeId
from aquatwin.types import EpochRecord

logger = logging.getLogger(__name__)

VALIDATION_FRACTION = 0.1


class AdamOptimizer:
    """
    Adam over a dict of named parameter arrays, updated in place.

    Attributes:
        learning_rate (float): Step size
        beta1 (float): First-moment decay
        beta2 (float): Second-moment decay
        epsilon (float): Denominator guard
    """

    def __init__(
        self,
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.steps = 0
        self._m: Dict[str, np.ndarray] = {}
        self._v: Dict[str, np.ndarray] = {}

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
        self.steps += 1
        correction1 = 1.0 - self.beta1**self.steps
        correction2 = 1.0 - self.beta2**self.steps
        for name, value in params.items():
            grad = grads[name]
            m = self._m.setdefault(name, np.zeros_like(value))
            v = self._v.setdefault(name, np.zeros_like(value))
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad**2
            value -= self.learning_rate * (m / correction1) / (
                np.sqrt(v / correction2) + self.epsilon
            )


def forward_fill(series) -> np.ndarray:
    """Forward-fill missing values; leading gaps are dropped"""
    return pd.Series(np.asarray(series, dtype=float)).ffill().dropna().to_numpy()


def make_windows(series: Sequence[np.ndarray], lookback: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sliding windows with next-step targets, concatenated over sequences.

    Returns:
        (windows of shape (n, lookback), targets of shape (n,))
    """
    windows: List[np.ndarray] = []
    targets: List[np.ndarray] = []
    for values in series:
        if len(values) <= lookback:
            continue
        view = np.lib.stride_tricks.sliding_window_view(values, lookback + 1)
        windows.append(view[:, :lookback])
        targets.append(view[:, lookback])
    if not windows:
        return np.empty((0, lookback)), np.empty(0)
    return np.concatenate(windows), np.concatenate(targets)


def node_training_series(demand_matrices: Sequence[np.ndarray], node: int) -> List[np.ndarray]:
    """One node's column from every training scenario"""
    return [np.asarray(m, dtype=float)[:, node] for m in demand_matrices]


def train_node_model(
    series: Sequence[np.ndarray],
    hyper: LstmHyperparams,
    node: Optional[NodeId] = None,
    seed: Optional[int] = None,
) -> ForecastModel:
    """
    Fit one node's forecaster by minimizing MSE + l2 * ||theta||^2 with Adam.

    Windows from all sequences are pooled, split 90/10 into training and
    validation by a seeded permutation, and trained on true demand histories.
    Training stops after `patience` epochs without validation improvement or
    at `max_epochs`; the parameters of the best validation epoch are returned.

    Args:
        series: Demand sequences of this node, one per training scenario, L/s
        hyper: Architecture and training settings
        node: Junction the model belongs to
        seed: Overrides `hyper.seed` for initialization, splitting, batching and dropout

    Returns:
        ForecastModel: Best-validation model with its per-epoch `train_log`

    Raises:
        InsufficientDataError: Fewer than 2 * batch_size windows
        NonFiniteLossError: Training diverged
    """
    seed = hyper.seed if seed is None else seed
    node = node if node is not None else NodeId(0, "0")
    cleaned = [forward_fill(s) for s in series]
    windows, targets = make_windows(cleaned, hyper.lookback)
    n_windows = targets.shape[0]
    if n_windows < 2 * hyper.batch_size:
        raise InsufficientDataError(
            f"Node {node.label}: {n_windows} training windows, "
            f"at least {2 * hyper.batch_size} required"
        )

    rng = np.random.default_rng(seed)
    if hyper.max_train_windows is not None and n_windows > hyper.max_train_windows:
        keep = np.sort(rng.choice(n_windows, size=hyper.max_train_windows, replace=False))
        windows, targets = windows[keep], targets[keep]
        n_windows = targets.shape[0]

    normalization = normalization_from(np.concatenate(cleaned))
    x = standardize(windows, normalization)
    y = standardize(targets, normalization)
    floor = zero_floor(normalization)

    order = rng.permutation(n_windows)
    n_val = max(1, int(round(VALIDATION_FRACTION * n_windows)))
    val_index, train_index = order[:n_val], order[n_val:]

    model = init_model(node, hyper, normalization, seed)
    params = model.params
    optimizer = AdamOptimizer(hyper.learning_rate)
    best_val = np.inf
    best_params = {k: v.copy() for k, v in params.items()}
    stale = 0
    log: List[EpochRecord] = []

    for epoch in range(1, hyper.max_epochs + 1):
        shuffled = rng.permutation(train_index)
        weighted_loss = 0.0
        for start in range(0, shuffled.shape[0], hyper.batch_size):
            batch = shuffled[start : start + hyper.batch_size]
            loss, data_loss, grads = objective(
                params, hyper.layers, floor, x[batch], y[batch], hyper.l2, hyper.dropout, rng
            )
            if not np.isfinite(loss):
                logger.error(f"Node {node.label}: loss diverged in epoch {epoch}")
                raise NonFiniteLossError(epoch)
            optimizer.step(params, grads)
            weighted_loss += data_loss * batch.shape[0]
        train_loss = weighted_loss / shuffled.shape[0]

        val_out, _ = forward_batch(params, hyper.layers, x[val_index])
        val_loss = float(np.mean((np.maximum(val_out, floor) - y[val_index]) ** 2))
        if not np.isfinite(val_loss):
            logger.error(f"Node {node.label}: validation loss diverged in epoch {epoch}")
            raise NonFiniteLossError(epoch)

        if val_loss < best_val:
            best_val = val_loss
            best_params = {k: v.copy() for k, v in params.items()}
            stale = 0
        else:
            stale += 1
        log.append(
            EpochRecord(
                epoch=epoch,
                train_loss=float(train_loss),
                val_loss=val_loss,
                best_val_loss=float(best_val),
            )
        )
        logger.debug(
            f"Node {node.label} epoch {epoch}: train {train_loss:.5f}, val {val_loss:.5f}"
        )
        if stale >= hyper.patience:
            break

    logger.info(
        f"Node {node.label}: {len(log)} epochs, best validation loss {best_val:.5f} "
        f"on {n_windows} windows"
    )
    model.params = best_params
    model.train_log = log
    return model
