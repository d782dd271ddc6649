"""Per-node LSTM demand forecaster: forward pass, BPTT gradients and checks.

Parameters of a model with L layers and hidden size d are stored by name:

- ``lstm{l}.W``: (n_in + d, 4d) weights acting on ``[x_t, h_{t-1}]``
- ``lstm{l}.b``: (4d,) biases
- ``out.W``: (d,) output weights
- ``out.b``: (1,) output bias

Gate blocks are ordered input, forget, output, candidate.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from aquatwin.config import LstmHyperparams
from aquatwin.exceptions import ShapeMismatchError
from aquatwin.network.model import NodeId
from aquatwin.types import EpochRecord, Normalization

logger = logging.getLogger(__name__)

GATES = 4
STD_FLOOR_RELATIVE = 1e-6


@dataclass
class ForecastModel:
    """
    Trained (or freshly initialized) forecaster for one junction.

    Attributes:
        node (NodeId): Junction the model belongs to
        params (Dict[str, np.ndarray]): Named parameter arrays, see module docstring
        normalization (Normalization): Mean/std used to standardize inputs
        hyper (LstmHyperparams): Architecture and training settings
        train_log (List[EpochRecord]): One record per training epoch
        seed (int): Seed of the initialization and training streams
    """

    node: NodeId
    params: Dict[str, np.ndarray]
    normalization: Normalization
    hyper: LstmHyperparams
    seed: int = 0
    train_log: List[EpochRecord] = field(default_factory=list)

    @property
    def lookback(self) -> int:
        return self.hyper.lookback

    @property
    def n_parameters(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def predict(self, history: np.ndarray) -> float:
        return predict(self, history)


def param_names(layers: int) -> List[str]:
    names = []
    for layer in range(layers):
        names.extend([f"lstm{layer}.W", f"lstm{layer}.b"])
    return names + ["out.W", "out.b"]


def normalization_from(values: np.ndarray) -> Normalization:
    """Mean and population std of training values, std floored to stay positive"""
    values = np.asarray(values, dtype=float)
    mean = float(np.mean(values))
    std = float(np.std(values))
    floor = STD_FLOOR_RELATIVE * max(abs(mean), 1.0)
    return Normalization(mean=mean, std=max(std, floor))


def standardize(values, normalization: Normalization):
    return (np.asarray(values, dtype=float) - normalization["mean"]) / normalization["std"]


def destandardize(values, normalization: Normalization):
    return np.asarray(values, dtype=float) * normalization["std"] + normalization["mean"]


def zero_floor(normalization: Normalization) -> float:
    """Standardized value corresponding to zero demand"""
    return -normalization["mean"] / normalization["std"]


def init_params(hyper: LstmHyperparams, seed: int) -> Dict[str, np.ndarray]:
    """
    Xavier-uniform weights per gate block, zero biases except the forget gate (1).
    """
    rng = np.random.default_rng(seed)
    d = hyper.hidden
    params: Dict[str, np.ndarray] = {}
    n_in = 1
    for layer in range(hyper.layers):
        limit = np.sqrt(6.0 / (n_in + 2 * d))
        params[f"lstm{layer}.W"] = rng.uniform(-limit, limit, size=(n_in + d, GATES * d))
        bias = np.zeros(GATES * d)
        bias[d : 2 * d] = 1.0
        params[f"lstm{layer}.b"] = bias
        n_in = d
    limit = np.sqrt(6.0 / (d + 1))
    params["out.W"] = rng.uniform(-limit, limit, size=d)
    params["out.b"] = np.zeros(1)
    return params


def init_model(
    node: NodeId, hyper: LstmHyperparams, normalization: Normalization, seed: Optional[int] = None
) -> ForecastModel:
    seed = hyper.seed if seed is None else seed
    return ForecastModel(
        node=node,
        params=init_params(hyper, seed),
        normalization=normalization,
        hyper=hyper,
        seed=seed,
    )


@dataclass
class _LayerCache:
    inputs: np.ndarray  # (B, w, n_in), after dropout
    h: np.ndarray  # (B, w + 1, d), h[:, 0] = 0
    c: np.ndarray  # (B, w + 1, d)
    gates: np.ndarray  # (B, w, 4d) post-activation


@dataclass
class ForwardCache:
    layers: List[_LayerCache]
    masks: List[Optional[np.ndarray]]


def _split_gates(gates: np.ndarray, d: int):
    return gates[:, :d], gates[:, d : 2 * d], gates[:, 2 * d : 3 * d], gates[:, 3 * d :]


def forward_batch(
    params: Dict[str, np.ndarray],
    layers: int,
    x: np.ndarray,
    dropout: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, ForwardCache]:
    """Batched forward pass over standardized windows x of shape (B, w)"""
    batch, steps = x.shape
    layer_input = x[:, :, None]
    caches: List[_LayerCache] = []
    masks: List[Optional[np.ndarray]] = []

    for layer in range(layers):
        weights = params[f"lstm{layer}.W"]
        bias = params[f"lstm{layer}.b"]
        d = bias.shape[0] // GATES
        h = np.zeros((batch, steps + 1, d))
        c = np.zeros((batch, steps + 1, d))
        gates = np.empty((batch, steps, GATES * d))
        for t in range(steps):
            z = np.concatenate([layer_input[:, t, :], h[:, t, :]], axis=1) @ weights + bias
            gates[:, t, : 3 * d] = expit(z[:, : 3 * d])
            gates[:, t, 3 * d :] = np.tanh(z[:, 3 * d :])
            i, f, o, g = _split_gates(gates[:, t], d)
            c[:, t + 1] = f * c[:, t] + i * g
            h[:, t + 1] = o * np.tanh(c[:, t + 1])
        caches.append(_LayerCache(layer_input, h, c, gates))

        output = h[:, 1:, :]
        mask = None
        if layer < layers - 1 and dropout > 0.0 and rng is not None:
            mask = (rng.random(output.shape) >= dropout) / (1.0 - dropout)
            output = output * mask
        masks.append(mask)
        layer_input = output

    y = caches[-1].h[:, -1, :] @ params["out.W"] + params["out.b"][0]
    return y, ForwardCache(caches, masks)


def _backward(
    params: Dict[str, np.ndarray], cache: ForwardCache, dy: np.ndarray
) -> Dict[str, np.ndarray]:
    """Backpropagation through time from d loss / d y"""
    grads: Dict[str, np.ndarray] = {}
    top = cache.layers[-1]
    grads["out.W"] = top.h[:, -1, :].T @ dy
    grads["out.b"] = np.array([dy.sum()])

    d_output = np.zeros_like(top.h[:, 1:, :])
    d_output[:, -1, :] = np.outer(dy, params["out.W"])

    for layer in reversed(range(len(cache.layers))):
        lc = cache.layers[layer]
        weights = params[f"lstm{layer}.W"]
        batch, steps, n_in = lc.inputs.shape
        d = lc.h.shape[2]
        d_weights = np.zeros_like(weights)
        d_bias = np.zeros(GATES * d)
        d_inputs = np.zeros_like(lc.inputs)
        dh_next = np.zeros((batch, d))
        dc_next = np.zeros((batch, d))

        for t in reversed(range(steps)):
            i, f, o, g = _split_gates(lc.gates[:, t], d)
            tanh_c = np.tanh(lc.c[:, t + 1])
            dh = d_output[:, t] + dh_next
            do = dh * tanh_c
            dc = dc_next + dh * o * (1.0 - tanh_c**2)
            di = dc * g
            df = dc * lc.c[:, t]
            dg = dc * i
            dc_next = dc * f
            dz = np.concatenate(
                [di * i * (1.0 - i), df * f * (1.0 - f), do * o * (1.0 - o), dg * (1.0 - g**2)],
                axis=1,
            )
            stacked = np.concatenate([lc.inputs[:, t], lc.h[:, t]], axis=1)
            d_weights += stacked.T @ dz
            d_bias += dz.sum(axis=0)
            d_stacked = dz @ weights.T
            d_inputs[:, t] = d_stacked[:, :n_in]
            dh_next = d_stacked[:, n_in:]

        grads[f"lstm{layer}.W"] = d_weights
        grads[f"lstm{layer}.b"] = d_bias
        if layer > 0:
            mask = cache.masks[layer - 1]
            d_output = d_inputs if mask is None else d_inputs * mask

    return grads


def objective(
    params: Dict[str, np.ndarray],
    layers: int,
    floor: float,
    x: np.ndarray,
    target: np.ndarray,
    l2: float,
    dropout: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, float, Dict[str, np.ndarray]]:
    """
    Regularized MSE in standardized units and its gradient.

    The ReLU head is applied on the demand scale: in standardized units the
    prediction is max(y, floor) with floor the image of zero demand.

    Returns:
        (total loss, data loss, gradients by parameter name)
    """
    y, cache = forward_batch(params, layers, x, dropout, rng)
    prediction = np.maximum(y, floor)
    error = prediction - target
    data_loss = float(np.mean(error**2))
    penalty = l2 * float(sum(np.sum(p**2) for p in params.values()))
    dy = 2.0 * error / error.shape[0] * (y > floor)
    grads = _backward(params, cache, dy)
    for name, value in params.items():
        grads[name] = grads[name] + 2.0 * l2 * value
    return data_loss + penalty, data_loss, grads


def _check_window(model: ForecastModel, window) -> np.ndarray:
    window = np.asarray(window, dtype=float)
    if window.ndim != 1 or window.shape[0] != model.lookback:
        raise ShapeMismatchError(
            f"Expected a window of {model.lookback} values, got shape {window.shape}"
        )
    if not np.all(np.isfinite(window)):
        raise ValueError("Window contains non-finite values")
    return window


def _to_demand(y: np.ndarray, normalization: Normalization) -> np.ndarray:
    z = np.maximum(y, zero_floor(normalization))
    return np.maximum(0.0, destandardize(z, normalization))


def lstm_forward(
    model: ForecastModel, window, dropout_seed: Optional[int] = None
) -> Tuple[float, Optional[ForwardCache]]:
    """
    Forecast the next demand from one window.

    Args:
        model (ForecastModel): Node model
        window: The latest `lookback` demands, L/s
        dropout_seed (Optional[int]): Enables Train mode with inverted dropout
            between layers drawn from this seed. None means Eval mode.

    Returns:
        (prediction in L/s, activation cache in Train mode or None)

    Raises:
        ShapeMismatchError: If the window length differs from the lookback
    """
    window = _check_window(model, window)
    x = standardize(window, model.normalization)[None, :]
    train = dropout_seed is not None
    rng = np.random.default_rng(dropout_seed) if train else None
    dropout = model.hyper.dropout if train else 0.0
    y, cache = forward_batch(model.params, model.hyper.layers, x, dropout, rng)
    prediction = float(_to_demand(y, model.normalization)[0])
    return prediction, cache if train else None


def predict(model: ForecastModel, history) -> float:
    """
    Eval-mode forecast from the latest `lookback` values.

    The history may mix measured and fused values; feeding the forecast back
    into later windows is up to the caller.
    """
    return lstm_forward(model, history)[0]


def loss_and_gradients(
    model: ForecastModel, windows, targets, dropout_seed: Optional[int] = None
) -> Tuple[float, Dict[str, np.ndarray]]:
    """
    Training objective (MSE + l2 * ||theta||^2) and its analytic gradient.

    Args:
        windows: (B, lookback) demand windows, L/s
        targets: (B,) next-step demands, L/s
        dropout_seed: Enables dropout when set

    Returns:
        (loss, gradients keyed like `model.params`)
    """
    windows = np.atleast_2d(np.asarray(windows, dtype=float))
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    if windows.shape[1] != model.lookback or windows.shape[0] != targets.shape[0]:
        raise ShapeMismatchError(
            f"Windows {windows.shape} and targets {targets.shape} do not match "
            f"lookback {model.lookback}"
        )
    rng = np.random.default_rng(dropout_seed) if dropout_seed is not None else None
    loss, _, grads = objective(
        model.params,
        model.hyper.layers,
        zero_floor(model.normalization),
        standardize(windows, model.normalization),
        standardize(targets, model.normalization),
        model.hyper.l2,
        model.hyper.dropout if rng is not None else 0.0,
        rng,
    )
    return loss, grads


def gradient_check(
    model: ForecastModel,
    window,
    target,
    max_checks: int = 200,
    step: float = 1e-5,
    seed: int = 0,
    floor: float = 1e-5,
) -> float:
    """
    Compare analytic gradients with central finite differences.

    Every parameter is perturbed when the model has at most `max_checks` of them,
    otherwise a seeded random subset is. Errors are relative to the larger of
    the two gradients; `floor` only keeps the ratio finite when both vanish.

    Returns:
        float: max over perturbed parameters of |a - n| / max(|a|, |n|, floor)
    """
    windows = np.atleast_2d(np.asarray(window, dtype=float))
    targets = np.atleast_1d(np.asarray(target, dtype=float))
    _, analytic = loss_and_gradients(model, windows, targets)

    positions = [
        (name, index)
        for name in param_names(model.hyper.layers)
        for index in np.ndindex(model.params[name].shape)
    ]
    if len(positions) > max_checks:
        rng = np.random.default_rng(seed)
        chosen = np.sort(rng.choice(len(positions), size=max_checks, replace=False))
        positions = [positions[k] for k in chosen]

    params = {name: value.copy() for name, value in model.params.items()}
    shifted = replace(model, params=params)
    worst = 0.0
    for name, index in positions:
        original = params[name][index]
        params[name][index] = original + step
        loss_plus, _ = loss_and_gradients(shifted, windows, targets)
        params[name][index] = original - step
        loss_minus, _ = loss_and_gradients(shifted, windows, targets)
        params[name][index] = original

        numeric = (loss_plus - loss_minus) / (2.0 * step)
        exact = float(analytic[name][index])
        error = abs(exact - numeric) / max(abs(exact), abs(numeric), floor)
        worst = max(worst, error)
    logger.debug(f"Gradient check over {len(positions)} parameters: max error {worst:.3e}")
    return worst


class ModelStack:
    """
    Several node models of identical shape evaluated in one batched pass.

    Produces the same forecasts as calling `predict` per model, with one
    einsum per timestep instead of one forward pass per node.
    """

    def __init__(self, models: Sequence[ForecastModel]):
        if not models:
            raise ValueError("ModelStack needs at least one model")
        first = models[0].hyper
        for model in models:
            if (model.hyper.layers, model.hyper.hidden, model.lookback) != (
                first.layers,
                first.hidden,
                first.lookback,
            ):
                raise ShapeMismatchError("Stacked models must share layers, hidden and lookback")
        self.layers = first.layers
        self.lookback = first.lookback
        self.weights = [
            np.stack([m.params[f"lstm{layer}.W"] for m in models]) for layer in range(self.layers)
        ]
        self.biases = [
            np.stack([m.params[f"lstm{layer}.b"] for m in models]) for layer in range(self.layers)
        ]
        self.out_weights = np.stack([m.params["out.W"] for m in models])
        self.out_bias = np.array([m.params["out.b"][0] for m in models])
        self.means = np.array([m.normalization["mean"] for m in models])
        self.stds = np.array([m.normalization["std"] for m in models])
        self.floors = -self.means / self.stds

    def predict(self, histories: np.ndarray) -> np.ndarray:
        """
        Args:
            histories: (n_models, lookback) windows, one row per stacked model

        Returns:
            np.ndarray: Non-negative forecasts, L/s
        """
        histories = np.asarray(histories, dtype=float)
        if histories.shape != (len(self.means), self.lookback):
            raise ShapeMismatchError(
                f"Expected histories of shape {(len(self.means), self.lookback)}, "
                f"got {histories.shape}"
            )
        layer_input = ((histories - self.means[:, None]) / self.stds[:, None])[:, :, None]
        n = histories.shape[0]
        h = np.zeros(0)
        for layer in range(self.layers):
            weights, bias = self.weights[layer], self.biases[layer]
            d = bias.shape[1] // GATES
            h = np.zeros((n, d))
            c = np.zeros((n, d))
            outputs = np.empty((n, self.lookback, d))
            for t in range(self.lookback):
                stacked = np.concatenate([layer_input[:, t, :], h], axis=1)
                z = np.einsum("ni,nij->nj", stacked, weights) + bias
                i = expit(z[:, :d])
                f = expit(z[:, d : 2 * d])
                o = expit(z[:, 2 * d : 3 * d])
                g = np.tanh(z[:, 3 * d :])
                c = f * c + i * g
                h = o * np.tanh(c)
                outputs[:, t] = h
            layer_input = outputs
        y = np.einsum("nd,nd->n", h, self.out_weights) + self.out_bias
        z = np.maximum(y, self.floors)
        return np.maximum(0.0, z * self.stds + self.means)
