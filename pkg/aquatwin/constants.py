"""
Constants module for aquatwin.

This module defines enumerations and constant values used throughout the package:
- Node, split, policy and noise classifications
- Hazen-Williams coefficients and hydraulic thresholds
- Fixed demand shape tables used by the scenario generator
- Experiment grids and console messages

Note:
    All enumerations inherit from Enum for type safety and consistency.
"""

from enum import Enum
from typing import Dict, Tuple

import numpy as np


class NodeKind(Enum):
    """
    Hydraulic role of a network node.

    Attributes:
        JUNCTION: Demand node with unknown head
        FIXED_HEAD: Reservoir or tank supplying the network at known head
    """

    JUNCTION = "junction"
    FIXED_HEAD = "fixed_head"


class NodeClass(Enum):
    """
    Consumption class driving the diurnal demand shape.

    Attributes:
        RESIDENTIAL: Morning and evening peaks
        COMMERCIAL: Single midday peak
    """

    RESIDENTIAL = "residential"
    COMMERCIAL = "commercial"


class Split(Enum):
    """
    Scenario split labels.

    Example:
        ```python
        train = scenario_set.by_split(Split.TRAIN)
        ```
    """

    TRAIN = "train"
    CALIBRATION = "calibration"
    TEST = "test"


class PolicyKind(Enum):
    """
    Sensor sampling policies.

    Attributes:
        ADAPTIVE: Top-B nodes by uncertainty score
        UNIFORM_RANDOM: B distinct nodes drawn from a seeded stream
        STATIC_HIGH_VARIANCE: Fixed top-B nodes by training demand variance
        ROUND_ROBIN: Consecutive blocks of B nodes cycling through the index order
        FULL: Every node measured
    """

    ADAPTIVE = "adaptive"
    UNIFORM_RANDOM = "uniform"
    STATIC_HIGH_VARIANCE = "static"
    ROUND_ROBIN = "round_robin"
    FULL = "full"


class NoiseMode(Enum):
    """
    Sensor noise model applied to measured demands.

    Attributes:
        MULTIPLICATIVE: q * (1 + sigma * eta)
        ADDITIVE: q + sigma * eta
    """

    MULTIPLICATIVE = "multiplicative"
    ADDITIVE = "additive"


class FindingKind(Enum):
    """Categories of network validation findings."""

    DISCONNECTED = "disconnected"
    NO_SOURCE = "no_source"
    NON_POSITIVE_ATTRIBUTE = "non_positive_attribute"
    NON_FINITE_ATTRIBUTE = "non_finite_attribute"
    NEGATIVE_DEMAND = "negative_demand"
    SELF_LOOP = "self_loop"
    DUPLICATE_LABEL = "duplicate_label"
    INCONSISTENT_ADJACENCY = "inconsistent_adjacency"


class AblationVariant(Enum):
    """
    Configurations compared by the ablation study.

    Note:
        Values double as row labels of table_ablation.csv
    """

    FULL_METHOD = "full_method"
    ROLLING_VARIANCE = "no_cp_rolling_var"
    FIXED_WIDTH = "no_cp_fixed_sigma"
    MOVING_AVERAGE = "no_lstm_ma7d"
    STATIC = "no_adaptive_static"
    RANDOM = "random"


# Hazen-Williams (SI, flow in m3/s, lengths in m)
HW_COEFFICIENT = 10.667
HW_FLOW_EXPONENT = 1.852
HW_DIAMETER_EXPONENT = 4.871
LPS_PER_CMS = 1000.0

# Initial pipe velocity used to seed the solver (1 ft/s)
INITIAL_VELOCITY_MPS = 0.3048

PRESSURE_THRESHOLD_M = 20.0
HOURS_PER_DAY = 24
HOURS_PER_WEEK = 168

# Raw hourly consumption profiles; normalized below to zero mean and unit peak
_RESIDENTIAL_RAW = (
    0.30, 0.25, 0.20, 0.20, 0.30, 0.60, 1.20, 1.65, 1.30, 1.00, 0.90, 0.85,
    0.90, 0.85, 0.80, 0.85, 1.00, 1.30, 1.50, 1.60, 1.30, 0.90, 0.60, 0.40,
)
_COMMERCIAL_RAW = (
    0.20, 0.20, 0.20, 0.20, 0.25, 0.30, 0.50, 0.80, 1.10, 1.30, 1.40, 1.50,
    1.60, 1.70, 1.60, 1.50, 1.40, 1.20, 0.90, 0.60, 0.40, 0.30, 0.25, 0.20,
)
# Day-of-week factors, Monday first
_WEEKDAY_RAW = (1.00, 0.98, 0.98, 1.00, 1.02, 1.12, 1.06)


def _normalized(raw) -> np.ndarray:
    table = np.asarray(raw, dtype=float)
    table = table - table.mean()
    table = table / np.abs(table).max()
    table.setflags(write=False)
    return table


RESIDENTIAL_SHAPE = _normalized(_RESIDENTIAL_RAW)
COMMERCIAL_SHAPE = _normalized(_COMMERCIAL_RAW)
WEEKLY_SHAPE = _normalized(np.repeat(_WEEKDAY_RAW, HOURS_PER_DAY))

DIURNAL_SHAPES: Dict[NodeClass, np.ndarray] = {
    NodeClass.RESIDENTIAL: RESIDENTIAL_SHAPE,
    NodeClass.COMMERCIAL: COMMERCIAL_SHAPE,
}

# Experiment grids
DEFAULT_BUDGETS: Tuple[float, ...] = (0.2, 0.4, 0.6, 0.8)
DEFAULT_SENSOR_SIGMAS: Tuple[float, ...] = (0.0, 0.01, 0.05, 0.1)
SWEEP_ALPHAS: Tuple[float, ...] = (0.05, 0.10, 0.20)
SWEEP_LOOKBACKS: Tuple[int, ...] = (12, 24, 48)
ROLLING_VARIANCE_WINDOW = 24
FIXED_HALF_WIDTH_LPS = 2.5
MOVING_AVERAGE_DAYS = 7

TIMING_COMPONENTS: Tuple[str, ...] = ("inference", "uncertainty", "selection", "solve")

# Console messages
MESSAGES: Dict[str, str] = {
    "generate_done": "Generated {} scenarios ({} train / {} calibration / {} test).",
    "train_done": "Trained {} node models.",
    "calibrate_done": "Calibrated {} junctions at alpha={} (budget {}).",
    "run_done": "Wrote {} trajectory files.",
    "evaluate_done": "Wrote report tables to {}.",
    "ablate_done": "Wrote ablation table to {}.",
    "sweep_done": "Wrote sensitivity table to {}.",
    "failed": "Failed: {}",
}

"""
Standard console messages.

Note:
    Messages with {} support string formatting for details
"""
