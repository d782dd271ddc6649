"""Synthetic demand scenarios and measurement noise."""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Sequence, Tuple

import numpy as np

from aquatwin.config import GenConfig
from aquatwin.constants import (
    DIURNAL_SHAPES,
    HOURS_PER_DAY,
    HOURS_PER_WEEK,
    WEEKLY_SHAPE,
    NodeClass,
    Split,
)
from aquatwin.exceptions import InvalidConfigError, TooFewScenariosError
from aquatwin.network.model import NetworkModel

logger = logging.getLogger(__name__)


@dataclass
class DemandScenario:
    """
    One demand realization.

    Attributes:
        scenario_id (int): Stable identifier, also the noise stream key
        demands (np.ndarray): T x n_junctions matrix, L/s
        timestep_hours (float): Always 1 hour
    """

    scenario_id: int
    demands: np.ndarray
    timestep_hours: float = 1.0

    @property
    def horizon(self) -> int:
        return self.demands.shape[0]

    @property
    def n_junctions(self) -> int:
        return self.demands.shape[1]


@dataclass
class ScenarioSet:
    """
    Scenarios plus their split labels.

    `split` is empty until `split_scenarios` has been applied; afterwards it holds
    one label per scenario, in the same order.
    """

    scenarios: List[DemandScenario]
    split: Tuple[Split, ...] = ()
    node_classes: Tuple[NodeClass, ...] = ()
    junction_labels: Tuple[str, ...] = ()
    config: GenConfig = field(default_factory=GenConfig)

    def by_split(self, label: Split) -> List[DemandScenario]:
        """Scenarios carrying a split label"""
        if not self.split:
            raise TooFewScenariosError("Scenario set has not been split")
        return [s for s, tag in zip(self.scenarios, self.split) if tag is label]

    def __len__(self) -> int:
        return len(self.scenarios)


def diurnal_factor(node_class: NodeClass, amplitude: float) -> np.ndarray:
    """24 hourly multipliers with mean 1"""
    return 1.0 + amplitude * DIURNAL_SHAPES[node_class]


def weekly_factor(amplitude: float) -> np.ndarray:
    """168 hour-of-week multipliers with mean 1"""
    return 1.0 + amplitude * WEEKLY_SHAPE


def assign_node_classes(n_junctions: int, cfg: GenConfig) -> Tuple[NodeClass, ...]:
    """Deterministic residential/commercial labels drawn from the generator seed"""
    n_commercial = int(math.floor(cfg.node_class_fractions[1] * n_junctions + 0.5))
    order = np.random.default_rng(cfg.seed).permutation(n_junctions)
    commercial = set(order[:n_commercial].tolist())
    return tuple(
        NodeClass.COMMERCIAL if i in commercial else NodeClass.RESIDENTIAL
        for i in range(n_junctions)
    )


def generate_scenarios(net: NetworkModel, cfg: GenConfig) -> ScenarioSet:
    """
    Generate demand scenarios for every junction of a network.

    Each entry is base * scale * D_class(t mod 24) * W(t mod 168) * max(0, 1 + cv * eta),
    with eta drawn from a stream keyed by (seed, scenario_id, node), so the output does
    not depend on generation order.

    Args:
        net (NetworkModel): A validated network
        cfg (GenConfig): Generator settings

    Returns:
        ScenarioSet: Unsplit scenarios with ids 0..n_scenarios-1

    Raises:
        InvalidConfigError: If the network has no junctions
    """
    if net.n_junctions == 0:
        raise InvalidConfigError("network", "has no junctions to generate demands for")

    classes = assign_node_classes(net.n_junctions, cfg)
    hours = np.arange(cfg.horizon_hours)
    weekly = weekly_factor(cfg.weekly_amplitude)[hours % HOURS_PER_WEEK]
    shapes = {
        node_class: diurnal_factor(node_class, cfg.diurnal_amplitude)[hours % HOURS_PER_DAY]
        * weekly
        for node_class in NodeClass
    }
    base = net.base_demands * cfg.demand_scale

    scenarios = []
    for scenario_id in range(cfg.n_scenarios):
        demands = np.empty((cfg.horizon_hours, net.n_junctions))
        for node in range(net.n_junctions):
            eta = np.random.default_rng([cfg.seed, scenario_id, node]).standard_normal(
                cfg.horizon_hours
            )
            noise = np.maximum(0.0, 1.0 + cfg.noise_cv * eta)
            demands[:, node] = base[node] * shapes[classes[node]] * noise
        scenarios.append(DemandScenario(scenario_id, demands))

    logger.info(
        f"Generated {cfg.n_scenarios} scenarios x {cfg.horizon_hours} h for "
        f"{net.n_junctions} junctions"
    )
    return ScenarioSet(
        scenarios=scenarios,
        node_classes=classes,
        junction_labels=net.junction_labels,
        config=cfg,
    )


def split_sizes(n: int, fractions: Sequence[float]) -> Tuple[int, ...]:
    """Split sizes with at least one scenario per label, closest to the fractions"""
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise InvalidConfigError("split_fractions", "must be three positive fractions")
    if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise InvalidConfigError("split_fractions", "must sum to 1")
    if n < len(fractions):
        raise TooFewScenariosError(
            f"{n} scenarios cannot fill {len(fractions)} non-empty splits"
        )
    targets = [f * n for f in fractions]
    sizes = [max(1, int(math.floor(t + 1e-9))) for t in targets]
    while sum(sizes) > n:
        k = max(range(len(sizes)), key=lambda i: (sizes[i] - targets[i], sizes[i]))
        sizes[k] -= 1
    while sum(sizes) < n:
        k = max(range(len(sizes)), key=lambda i: targets[i] - sizes[i])
        sizes[k] += 1
    return tuple(sizes)


def split_scenarios(
    scenario_set: ScenarioSet, fractions: Sequence[float] = (0.6, 0.2, 0.2)
) -> ScenarioSet:
    """
    Label scenarios Train / Calibration / Test by scenario_id order.

    Raises:
        TooFewScenariosError: If any split would be empty
    """
    ordered = sorted(scenario_set.scenarios, key=lambda s: s.scenario_id)
    n_train, n_cal, _ = split_sizes(len(ordered), fractions)
    labels = tuple(
        Split.TRAIN if k < n_train else Split.CALIBRATION if k < n_train + n_cal else Split.TEST
        for k in range(len(ordered))
    )
    logger.info(
        f"Split {len(ordered)} scenarios into "
        f"{labels.count(Split.TRAIN)}/{labels.count(Split.CALIBRATION)}/{labels.count(Split.TEST)}"
    )
    return replace(scenario_set, scenarios=ordered, split=labels)


def inject_noise(series: np.ndarray, sigma: float, seed) -> np.ndarray:
    """
    Multiplicative Gaussian measurement noise.

    Args:
        series: Any array of non-negative values
        sigma: Relative standard deviation
        seed: Seed or seed sequence entropy for the noise stream

    Returns:
        np.ndarray: series * (1 + sigma * eta), clamped at 0; a copy of the input
            when sigma is 0
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    series = np.asarray(series, dtype=float)
    if sigma == 0:
        return series.copy()
    eta = np.random.default_rng(seed).standard_normal(series.shape)
    return np.maximum(0.0, series * (1.0 + sigma * eta))
