"""Split conformal quantiles and the per-node calibration table."""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from aquatwin.conformal.scorers import ConformalScorer
from aquatwin.exceptions import (
    MissingArtifactError,
    TooFewResidualsError,
    UncalibratedNodeError,
)
from aquatwin.types import CalibrationEntry, PathLike

logger = logging.getLogger(__name__)


def required_residuals(alpha: float) -> int:
    """Smallest calibration set for which the corrected quantile is finite"""
    return max(math.ceil(1.0 / alpha - 1e-9) - 1, 1)


def quantile_rank(n: int, alpha: float) -> int:
    """k = ceil((1 - alpha)(n + 1)), the order statistic used for n residuals"""
    return math.ceil((1.0 - alpha) * (n + 1) - 1e-9)


def conformal_quantile(residuals, alpha: float, allow_degenerate: bool = False) -> float:
    """
    Finite-sample corrected quantile of nonconformity scores.

    Args:
        residuals: Non-negative scores |q - q_hat|
        alpha: Miscoverage level in (0, 1)
        allow_degenerate: Return +inf instead of raising when k > n

    Returns:
        float: The k-th smallest residual, k = ceil((1 - alpha)(n + 1))

    Raises:
        TooFewResidualsError: If k > n and degenerate results are not allowed

    Example:
        ```python
        conformal_quantile(range(1, 20), 0.1)  # 18.0
        ```
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    values = np.asarray(residuals, dtype=float).ravel()
    if np.any(values < 0.0):
        raise ValueError("Residuals must be non-negative")
    n = values.shape[0]
    k = quantile_rank(n, alpha)
    if k > n:
        if allow_degenerate:
            logger.warning(f"{n} residuals cannot attain rank {k}; quantile is +inf")
            return math.inf
        raise TooFewResidualsError(n, required_residuals(alpha))
    return float(np.partition(values, k - 1)[k - 1])


def prediction_interval(q_hat, quantile) -> Tuple[np.ndarray, np.ndarray]:
    """Symmetric interval [q_hat - Q, q_hat + Q]; the lower bound is not clipped"""
    quantile = np.asarray(quantile, dtype=float)
    if np.any(quantile < 0.0):
        raise ValueError("Conformal quantile must be non-negative")
    q_hat = np.asarray(q_hat, dtype=float)
    return q_hat - quantile, q_hat + quantile


def display_interval(q_hat, quantile) -> Tuple[np.ndarray, np.ndarray]:
    """Interval with the lower bound clipped at zero demand, for reports only"""
    lo, hi = prediction_interval(q_hat, quantile)
    return np.maximum(lo, 0.0), hi


def _finite_or_none(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


@dataclass(frozen=True, eq=False)
class CalibrationTable:
    """
    Per-junction conformal quantiles at one miscoverage level.

    Attributes:
        alpha (float): Miscoverage level
        quantiles (np.ndarray): Q_hat per junction, L/s (may be +inf when degenerate)
        n_cal (np.ndarray): Residual count per junction
        labels (Tuple[str, ...]): Junction labels, in junction order
        budget (int): Sampling budget under which residuals were collected
        residuals (Optional[Tuple[np.ndarray, ...]]): Residual archive per junction
    """

    alpha: float
    quantiles: np.ndarray
    n_cal: np.ndarray
    labels: Tuple[str, ...]
    budget: int
    residuals: Optional[Tuple[np.ndarray, ...]] = None

    @classmethod
    def from_residuals(
        cls,
        residuals: Sequence[np.ndarray],
        alpha: float,
        labels: Sequence[str],
        budget: int,
        keep_residuals: bool = True,
        allow_degenerate: bool = False,
    ) -> "CalibrationTable":
        arrays = tuple(np.asarray(r, dtype=float).ravel() for r in residuals)
        if len(arrays) != len(labels):
            raise ValueError(f"{len(arrays)} residual lists for {len(labels)} junctions")
        quantiles = np.array(
            [conformal_quantile(r, alpha, allow_degenerate) for r in arrays], dtype=float
        )
        return cls(
            alpha=alpha,
            quantiles=quantiles,
            n_cal=np.array([r.shape[0] for r in arrays], dtype=int),
            labels=tuple(labels),
            budget=int(budget),
            residuals=arrays if keep_residuals else None,
        )

    @property
    def n_junctions(self) -> int:
        return self.quantiles.shape[0]

    @property
    def degenerate(self) -> np.ndarray:
        return ~np.isfinite(self.quantiles)

    def quantile(self, node: int) -> float:
        if not 0 <= node < self.n_junctions:
            raise UncalibratedNodeError(node)
        return float(self.quantiles[node])

    def uncertainty(self) -> np.ndarray:
        """Interval width 2 * Q_hat for every junction"""
        return 2.0 * self.quantiles

    def interval(self, q_hat, node: int) -> Tuple[np.ndarray, np.ndarray]:
        return prediction_interval(q_hat, self.quantile(node))

    def recalibrated(self, alpha: float, allow_degenerate: bool = False) -> "CalibrationTable":
        """
        Recompute every quantile at a new level from the residual archive.

        Raises:
            MissingArtifactError: If the table was built without its residuals
        """
        if self.residuals is None:
            raise MissingArtifactError("residual archive", "calibrate with archive_residuals")
        return CalibrationTable.from_residuals(
            self.residuals, alpha, self.labels, self.budget, True, allow_degenerate
        )

    def scorer(self) -> ConformalScorer:
        return ConformalScorer(self)

    def entries(self) -> List[CalibrationEntry]:
        return [
            CalibrationEntry(label=label, quantile=float(q), n_cal=int(n))
            for label, q, n in zip(self.labels, self.quantiles, self.n_cal)
        ]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "budget": self.budget,
            "nodes": [
                {**entry, "quantile": _finite_or_none(entry["quantile"])}
                for entry in self.entries()
            ],
        }

    def save(self, path: PathLike, residuals_path: Optional[PathLike] = None) -> Path:
        """Write the table as JSON and, optionally, the residual archive as CSV"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))
        if residuals_path is not None and self.residuals is not None:
            frame = pd.DataFrame(
                {
                    "node": np.repeat(np.arange(self.n_junctions), self.n_cal),
                    "residual": np.concatenate(self.residuals) if self.residuals else [],
                }
            )
            frame.to_csv(residuals_path, index=False)
        return path

    @classmethod
    def load(cls, path: PathLike, residuals_path: Optional[PathLike] = None) -> "CalibrationTable":
        """
        Raises:
            MissingArtifactError: If the table file is absent
        """
        path = Path(path)
        if not path.exists():
            raise MissingArtifactError(path, "run `aquatwin calibrate` first")
        data = json.loads(path.read_text())
        nodes = data["nodes"]
        residuals = None
        if residuals_path is not None and Path(residuals_path).exists():
            frame = pd.read_csv(residuals_path, float_precision="round_trip")
            grouped = {int(k): g["residual"].to_numpy() for k, g in frame.groupby("node")}
            residuals = tuple(grouped.get(k, np.empty(0)) for k in range(len(nodes)))
        return cls(
            alpha=float(data["alpha"]),
            quantiles=np.array(
                [math.inf if n["quantile"] is None else n["quantile"] for n in nodes], dtype=float
            ),
            n_cal=np.array([n["n_cal"] for n in nodes], dtype=int),
            labels=tuple(n["label"] for n in nodes),
            budget=int(data["budget"]),
            residuals=residuals,
        )


def uncertainty_score(table: CalibrationTable, node: int) -> float:
    """
    Uncertainty of one node: the conformal interval width 2 * Q_hat.

    Raises:
        UncalibratedNodeError: If the table has no entry for the node
    """
    return 2.0 * table.quantile(node)
