"""Forecasting every junction at once from a block of histories."""

import logging
from typing import Dict, List, Tuple

import numpy as np

from aquatwin.exceptions import MissingModelError
from aquatwin.forecasting.lstm import ForecastModel, ModelStack
from aquatwin.types import DemandForecaster, ModelBank

logger = logging.getLogger(__name__)


class BankPredictor:
    """
    Evaluates a bank of per-node forecasters on one history block per step.

    LSTM models sharing a shape are grouped into a `ModelStack`; any other
    forecaster is called node by node.

    Args:
        models (ModelBank): Forecaster per junction position
        n_junctions (int): Number of junctions the bank must cover

    Raises:
        MissingModelError: If a junction has no forecaster
    """

    def __init__(self, models: ModelBank, n_junctions: int):
        for node in range(n_junctions):
            if node not in models:
                raise MissingModelError(node)
        self.n_junctions = n_junctions
        self.lookback = max(models[node].lookback for node in range(n_junctions))

        groups: Dict[Tuple[int, int, int], List[int]] = {}
        self._loose: List[Tuple[int, DemandForecaster]] = []
        for node in range(n_junctions):
            model = models[node]
            if isinstance(model, ForecastModel):
                key = (model.hyper.layers, model.hyper.hidden, model.lookback)
                groups.setdefault(key, []).append(node)
            else:
                self._loose.append((node, model))
        self._stacks = [
            (np.array(nodes), ModelStack([models[n] for n in nodes])) for nodes in groups.values()
        ]
        logger.debug(
            f"Bank of {n_junctions} forecasters: {len(self._stacks)} stacked groups, "
            f"{len(self._loose)} individual"
        )

    def predict(self, history: np.ndarray) -> np.ndarray:
        """
        Args:
            history: (n_junctions, >= lookback) most recent demands, oldest first

        Returns:
            np.ndarray: One forecast per junction, L/s
        """
        forecasts = np.empty(self.n_junctions)
        for nodes, stack in self._stacks:
            forecasts[nodes] = stack.predict(history[nodes, history.shape[1] - stack.lookback :])
        for node, model in self._loose:
            forecasts[node] = model.predict(history[node, history.shape[1] - model.lookback :])
        return forecasts
