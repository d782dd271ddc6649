"""Uncertainty sources consumed by the twin loop.

Each scorer turns the current forecasts into a per-node score (what the
adaptive policy ranks) and an interval half-width (what coverage is measured
against). Scorers carrying state are reset at the start of every trajectory.
"""

from typing import Tuple

import numpy as np
from scipy.stats import norm

from aquatwin.constants import FIXED_HALF_WIDTH_LPS, ROLLING_VARIANCE_WINDOW


class ConformalScorer:
    """Score 2 * Q_hat and half-width Q_hat from a calibration table"""

    def __init__(self, table):
        self.table = table
        self._quantiles = np.asarray(table.quantiles, dtype=float)

    def reset(self, n_junctions: int) -> None:
        if n_junctions != self._quantiles.shape[0]:
            raise ValueError(
                f"Calibration covers {self._quantiles.shape[0]} junctions, "
                f"the network has {n_junctions}"
            )

    def update(self, predictions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return 2.0 * self._quantiles, self._quantiles


class RollingVarianceScorer:
    """
    Variance of each node's last `window` forecasts, current one included.

    Intervals are Gaussian: half-width z_{1 - alpha/2} times the rolling std.
    """

    def __init__(self, alpha: float = 0.1, window: int = ROLLING_VARIANCE_WINDOW):
        if window < 1:
            raise ValueError("window must be at least 1")
        self.alpha = alpha
        self.window = window
        self.z = float(norm.ppf(1.0 - alpha / 2.0))
        self._buffer = np.empty((0, 0))
        self._count = 0

    def reset(self, n_junctions: int) -> None:
        self._buffer = np.zeros((self.window, n_junctions))
        self._count = 0

    def update(self, predictions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        self._buffer[self._count % self.window] = predictions
        self._count += 1
        filled = self._buffer[: min(self._count, self.window)]
        variance = filled.var(axis=0)
        return variance, self.z * np.sqrt(variance)


class FixedWidthScorer:
    """Same half-width for every node and step; scores are flat"""

    def __init__(self, half_width: float = FIXED_HALF_WIDTH_LPS):
        if half_width < 0:
            raise ValueError("half_width must be non-negative")
        self.half_width = half_width
        self._n = 0

    def reset(self, n_junctions: int) -> None:
        self._n = n_junctions

    def update(self, predictions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        widths = np.full(self._n, self.half_width)
        return 2.0 * widths, widths
