"""Sensor sampling policies."""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from aquatwin.constants import PolicyKind
from aquatwin.exceptions import BudgetExceedsNetworkError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SamplingPolicy:
    """
    Which nodes are measured at each step.

    Attributes:
        kind (PolicyKind): Selection rule
        seed (int): Stream seed of the uniform-random policy
        static_set (Optional[Tuple[int, ...]]): Fixed node set of the static policy
    """

    kind: PolicyKind
    seed: int = 0
    static_set: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.kind is PolicyKind.STATIC_HIGH_VARIANCE and self.static_set is None:
            raise ValueError("Static high-variance policy needs a precomputed static_set")

    @classmethod
    def adaptive(cls) -> "SamplingPolicy":
        return cls(PolicyKind.ADAPTIVE)

    @classmethod
    def uniform(cls, seed: int = 0) -> "SamplingPolicy":
        return cls(PolicyKind.UNIFORM_RANDOM, seed=seed)

    @classmethod
    def static(cls, static_set: Sequence[int]) -> "SamplingPolicy":
        return cls(PolicyKind.STATIC_HIGH_VARIANCE, static_set=tuple(int(i) for i in static_set))

    @classmethod
    def round_robin(cls) -> "SamplingPolicy":
        return cls(PolicyKind.ROUND_ROBIN)

    @classmethod
    def full(cls) -> "SamplingPolicy":
        return cls(PolicyKind.FULL)

    def rng(self) -> np.random.Generator:
        """Fresh selection stream; one per trajectory"""
        return np.random.default_rng(self.seed)


def budget_from_fraction(fraction: float, n_nodes: int) -> int:
    """Budget B = max(1, round(fraction * n)) with halves rounded up"""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"Budget fraction must lie in (0, 1], got {fraction}")
    return max(1, min(n_nodes, int(math.floor(fraction * n_nodes + 0.5))))


def _check_budget(budget: int, n_nodes: int) -> None:
    if budget < 0:
        raise ValueError("Budget must be non-negative")
    if budget > n_nodes:
        raise BudgetExceedsNetworkError(budget, n_nodes)


def top_budget(values: np.ndarray, budget: int) -> np.ndarray:
    """Indices of the `budget` largest values, lower index first on ties, sorted"""
    order = np.argsort(-np.asarray(values, dtype=float), kind="stable")
    return np.sort(order[:budget])


def select_nodes(
    policy: SamplingPolicy,
    uncertainties: np.ndarray,
    budget: int,
    t: int,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    Choose the nodes measured at step `t`.

    Args:
        policy: Selection rule
        uncertainties: Score per node; only the adaptive rule reads them
        budget: Number of nodes to measure (ignored by the full policy)
        t: Step counter since the first selection, drives round-robin
        rng: Selection stream of the uniform-random rule

    Returns:
        np.ndarray: Sorted indices of the selected nodes

    Raises:
        BudgetExceedsNetworkError: If budget > number of nodes
    """
    uncertainties = np.asarray(uncertainties, dtype=float)
    n_nodes = uncertainties.shape[0]
    _check_budget(budget, n_nodes)

    kind = policy.kind
    if kind is PolicyKind.FULL:
        return np.arange(n_nodes)
    if kind is PolicyKind.ADAPTIVE:
        if np.any(np.isnan(uncertainties)):
            raise ValueError("Uncertainty scores contain NaN")
        return top_budget(uncertainties, budget)
    if kind is PolicyKind.UNIFORM_RANDOM:
        rng = rng if rng is not None else policy.rng()
        return np.sort(rng.choice(n_nodes, size=budget, replace=False))
    if kind is PolicyKind.ROUND_ROBIN:
        if n_nodes == 0:
            return np.arange(0)
        start = (t * budget) % n_nodes
        return np.sort((start + np.arange(budget)) % n_nodes)
    if kind is PolicyKind.STATIC_HIGH_VARIANCE:
        static_set = np.asarray(policy.static_set, dtype=int)
        if static_set.shape[0] != budget:
            raise ValueError(
                f"Static set has {static_set.shape[0]} nodes but the budget is {budget}"
            )
        return np.sort(static_set)
    raise ValueError(f"Unknown policy {kind}")


def precompute_static_set(train_demands: Sequence[np.ndarray], budget: int) -> np.ndarray:
    """
    Top-B nodes by demand variance over every training scenario and timestep.

    Args:
        train_demands: T x N demand matrices of the training scenarios
        budget: Set size

    Returns:
        np.ndarray: Sorted node indices
    """
    stacked = np.vstack([np.asarray(m, dtype=float) for m in train_demands])
    _check_budget(budget, stacked.shape[1])
    variances = np.var(stacked, axis=0)
    static_set = top_budget(variances, budget)
    logger.debug(f"Static high-variance set (B={budget}): {static_set.tolist()}")
    return static_set
