"""Independent units of pipeline work and the pool that runs them."""

import json
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, TypeVar

import numpy as np
import pandas as pd

from aquatwin.config import LstmHyperparams, SolverConfig
from aquatwin.constants import NoiseMode
from aquatwin.evaluation.metrics import EvaluationReport, evaluate_trajectory
from aquatwin.forecasting.lstm import ForecastModel
from aquatwin.forecasting.training import train_node_model
from aquatwin.network.model import NetworkModel, NodeId
from aquatwin.sampling.policies import SamplingPolicy
from aquatwin.sampling.twin import TwinTrajectory, run_digital_twin
from aquatwin.scenarios.generator import DemandScenario
from aquatwin.types import ModelBank
from aquatwin.utils.progress import create_progress_bar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def map_cells(
    fn: Callable[[T], R],
    tasks: Sequence[T],
    workers: int = 1,
    desc: str = "",
    unit: str = "cell",
    progress: bool = False,
) -> List[R]:
    """
    Apply `fn` to every task, in a process pool when `workers` > 1.

    Results come back in task order whatever the completion order, so merged
    outputs do not depend on scheduling.
    """
    results: List[Optional[R]] = [None] * len(tasks)
    bar = create_progress_bar(total=len(tasks), desc=desc, unit=unit, disable=not progress)
    if workers <= 1 or len(tasks) <= 1:
        for i, task in enumerate(tasks):
            results[i] = fn(task)
            bar.update(1)
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {executor.submit(fn, task): i for i, task in enumerate(tasks)}
            for future in as_completed(futures):
                results[futures[future]] = future.result()
                bar.update(1)
    bar.close()
    return results  # type: ignore[return-value]


@dataclass(frozen=True)
class TrainTask:
    """One junction's training job"""

    position: int
    node: NodeId
    series: List[np.ndarray]
    hyper: LstmHyperparams
    seed: int


def train_task(task: TrainTask) -> ForecastModel:
    model = train_node_model(task.series, task.hyper, task.node, task.seed)
    logger.debug(
        f"Node {task.node.label}: {len(model.train_log)} epochs, "
        f"best val {model.train_log[-1]['best_val_loss']:.5f}"
    )
    return model


@dataclass(frozen=True)
class CellContext:
    """What every run cell of a stage shares"""

    net: NetworkModel
    scenarios: Sequence[DemandScenario]
    truth_pressures: Sequence[np.ndarray]
    solver: SolverConfig
    noise_mode: NoiseMode = NoiseMode.MULTIPLICATIVE


@dataclass
class TwinCell:
    """
    One grid cell: a forecaster bank, a score source and a policy run over
    every scenario of the context at one budget, noise level and seed.

    Attributes:
        labels (Dict[str, object]): Report labels of the cell
        dump_stem (Optional[Path]): Write `<stem>.csv.gz` trajectories and
            `<stem>.timing.json` when set
    """

    labels: Dict[str, object]
    models: ModelBank
    calib: object
    policy: SamplingPolicy
    budget: int
    sensor_sigma: float = 0.0
    seed: int = 0
    warmup: Optional[int] = None
    dump_stem: Optional[Path] = None
    context: Optional[CellContext] = field(default=None, repr=False)


def trajectory_path(stem: Path) -> Path:
    return stem.with_name(stem.name + ".csv.gz")


def timing_path(stem: Path) -> Path:
    return stem.with_name(stem.name + ".timing.json")


def run_cell(cell: TwinCell) -> List[EvaluationReport]:
    """
    Run one cell over its scenarios and evaluate every trajectory.

    Trajectory dumps are gzip CSVs with a zeroed header timestamp; timings go to
    the JSON sidecar so that CSV bodies stay reproducible.
    """
    context = cell.context
    if context is None:
        raise ValueError("Cell has no context")
    reports: List[EvaluationReport] = []
    frames: List[pd.DataFrame] = []
    timings: Dict[str, Dict[str, list]] = {}
    for scenario, truth in zip(context.scenarios, context.truth_pressures):
        trajectory = run_digital_twin(
            context.net,
            cell.models,
            cell.calib,
            scenario,
            cell.policy,
            cell.budget,
            cell.sensor_sigma,
            context.solver,
            seed=cell.seed,
            noise_mode=context.noise_mode,
            warmup=cell.warmup,
            truth_pressures=truth,
        )
        reports.append(
            evaluate_trajectory(
                trajectory, **cell.labels, seed=cell.seed, scenario=scenario.scenario_id
            )
        )
        if cell.dump_stem is not None:
            frames.append(trajectory.to_frame())
            timings[str(scenario.scenario_id)] = {
                name: values.tolist() for name, values in trajectory.timings.items()
            }

    if cell.dump_stem is not None:
        stem = Path(cell.dump_stem)
        stem.parent.mkdir(parents=True, exist_ok=True)
        pd.concat(frames, ignore_index=True).to_csv(
            trajectory_path(stem),
            index=False,
            compression={"method": "gzip", "mtime": 0},
        )
        timing_path(stem).write_text(json.dumps(timings))
    return reports


def read_cell_trajectories(stem: Path) -> List[TwinTrajectory]:
    """
    Trajectories of a dumped cell, with their timings reattached.

    One trajectory per scenario, in scenario order.
    """
    frame = pd.read_csv(trajectory_path(stem), float_precision="round_trip")
    timings = {}
    sidecar = timing_path(stem)
    if sidecar.exists():
        timings = json.loads(sidecar.read_text())
    trajectories = []
    for scenario_id, group in frame.groupby("scenario", sort=True):
        trajectory = TwinTrajectory.from_frame(group)
        recorded = timings.get(str(scenario_id))
        if recorded:
            trajectory.timings = {k: np.asarray(v, dtype=float) for k, v in recorded.items()}
        trajectories.append(trajectory)
    return trajectories
