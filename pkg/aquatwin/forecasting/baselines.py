"""Non-learned forecasters used by the ablation study."""

import numpy as np

from aquatwin.constants import HOURS_PER_DAY, MOVING_AVERAGE_DAYS
from aquatwin.exceptions import ShapeMismatchError


class MovingAverageForecaster:
    """
    Mean of the same hour-of-day over the previous `days` days.

    Example:
        ```python
        forecaster = MovingAverageForecaster()
        q_hat = forecaster.predict(history[-forecaster.lookback:])
        ```
    """

    def __init__(self, days: int = MOVING_AVERAGE_DAYS):
        if days < 1:
            raise ValueError("days must be at least 1")
        self.days = days
        self.lookback = days * HOURS_PER_DAY

    def predict(self, history) -> float:
        history = np.asarray(history, dtype=float)
        if history.shape != (self.lookback,):
            raise ShapeMismatchError(
                f"Expected a window of {self.lookback} values, got shape {history.shape}"
            )
        # history[-24] is the same hour yesterday
        same_hour = history[self.lookback % HOURS_PER_DAY :: HOURS_PER_DAY]
        return float(max(0.0, same_hour.mean()))

    def __repr__(self) -> str:
        return f"MovingAverageForecaster(days={self.days})"
