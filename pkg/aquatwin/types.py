from pathlib import Path
from typing import (
    Dict,
    List,
    Mapping,
    Optional,
    Protocol,
    Tuple,
    TypedDict,
    Union,
    runtime_checkable,
)

import numpy as np
from pandas import DataFrame


class EpochRecord(TypedDict):
    """Type definition for one line of a training log"""

    epoch: int
    train_loss: float
    val_loss: float
    best_val_loss: float


class Normalization(TypedDict):
    """Type definition for per-node standardization statistics"""

    mean: float
    std: float


class CalibrationEntry(TypedDict):
    """Type definition for a per-node conformal quantile"""

    label: str
    quantile: float
    n_cal: int


class StageManifest(TypedDict):
    """Type definition for the manifest written next to each stage's outputs"""

    stage: str
    config_hash: str
    seeds: List[int]
    versions: Dict[str, str]
    created_utc: str
    extra: Dict[str, object]


class TimingSummary(TypedDict):
    """Type definition for per-component timing statistics"""

    component: str
    mean_ms: float
    p95_ms: float


@runtime_checkable
class DemandForecaster(Protocol):
    """Anything that maps the latest `lookback` demands of one node to a forecast"""

    lookback: int

    def predict(self, history: np.ndarray) -> float: ...


@runtime_checkable
class UncertaintySource(Protocol):
    """Per-step uncertainty scores and interval half-widths for every junction"""

    def reset(self, n_junctions: int) -> None: ...

    def update(self, predictions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]: ...


# Type aliases for common types
PathLike = Union[str, Path]
DemandMatrix = np.ndarray
ModelBank = Mapping[int, DemandForecaster]
ReportFrame = DataFrame
OptionalArray = Optional[np.ndarray]
