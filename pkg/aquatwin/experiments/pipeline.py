"""
Experiment pipeline: generate, train, calibrate, run, evaluate, ablate, sweep.

Each stage reads the artifacts of the previous ones from the output directory,
writes its own outputs plus a `manifest.json`, and is deterministic given the
configuration and its seeds.
"""

import dataclasses
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from aquatwin.config import ExperimentConfig, LstmHyperparams
from aquatwin.conformal.calibration import calibrate
from aquatwin.conformal.quantile import CalibrationTable
from aquatwin.conformal.scorers import FixedWidthScorer, RollingVarianceScorer
from aquatwin.constants import (
    FIXED_HALF_WIDTH_LPS,
    MOVING_AVERAGE_DAYS,
    ROLLING_VARIANCE_WINDOW,
    AblationVariant,
    PolicyKind,
    Split,
)
from aquatwin.evaluation.metrics import EvaluationReport, evaluate_trajectory
from aquatwin.evaluation.reports import (
    TABLE_FILES,
    ablation_table,
    grid_tables,
    plot_rmse_vs_budget,
    plot_timing,
    sensitivity_table,
    write_table,
    write_tables,
)
from aquatwin.exceptions import MissingArtifactError
from aquatwin.experiments.artifacts import (
    ArtifactLayout,
    load_network,
    stage_manifest,
    write_manifest,
)
from aquatwin.experiments.cells import (
    CellContext,
    TrainTask,
    TwinCell,
    map_cells,
    read_cell_trajectories,
    run_cell,
    train_task,
)
from aquatwin.forecasting.archive import load_model_bank, save_model_bank
from aquatwin.forecasting.baselines import MovingAverageForecaster
from aquatwin.forecasting.lstm import ForecastModel
from aquatwin.forecasting.training import node_training_series
from aquatwin.hydraulics.solver import solve_scenario
from aquatwin.network.model import NetworkModel
from aquatwin.sampling.policies import (
    SamplingPolicy,
    budget_from_fraction,
    precompute_static_set,
)
from aquatwin.scenarios.archive import read_scenario_set, write_scenario_set
from aquatwin.scenarios.generator import (
    DemandScenario,
    ScenarioSet,
    generate_scenarios,
    split_scenarios,
)
from aquatwin.types import ModelBank
from aquatwin.utils.progress import progress_enabled

logger = logging.getLogger(__name__)

RUN_INDEX_COLUMNS = ["file", "network", "method", "budget", "nodes", "sensor_sigma", "seed"]


def sensitivity_grid(config: ExperimentConfig) -> List[Tuple[float, int]]:
    """
    (alpha, lookback) pairs of the sensitivity sweep.

    Every alpha at the configured lookback, then every other lookback at the
    configured alpha.

    Example:
        ```python
        sensitivity_grid(ExperimentConfig())
        # [(0.05, 24), (0.1, 24), (0.2, 24), (0.1, 12), (0.1, 48)]
        ```
    """
    base_lookback = config.hyper.lookback
    rows = [(alpha, base_lookback) for alpha in config.sweep_alphas]
    rows += [(config.alpha, w) for w in config.sweep_lookbacks if w != base_lookback]
    return rows


class ExperimentPipeline:
    """
    Stage runner over one experiment configuration.

    Attributes:
        config (ExperimentConfig): Experiment description
        layout (ArtifactLayout): Where artifacts live
        max_workers (int): Process pool size for node training and run cells
        progress (bool): Whether progress bars are shown
    """

    def __init__(
        self,
        config: ExperimentConfig,
        max_workers: int = 1,
        output_dir: Optional[Path] = None,
    ):
        """
        Initialize the pipeline.

        Args:
            config: Validated experiment configuration
            max_workers: Worker processes; 1 runs everything inline. Defaults to 1.
            output_dir: Overrides `config.output_dir`
        """
        if max_workers < 1:
            raise ValueError("max_workers must be at least 1")
        self.config = config
        self.layout = ArtifactLayout(Path(output_dir) if output_dir else config.output_path)
        self.max_workers = max_workers
        self.progress = progress_enabled(config.progress)
        self._net: Optional[NetworkModel] = None
        self._scenarios: Optional[ScenarioSet] = None
        self._truth: Dict[int, np.ndarray] = {}

    # Shared inputs

    @property
    def net(self) -> NetworkModel:
        if self._net is None:
            self._net = load_network(self.config)
        return self._net

    @property
    def scenarios(self) -> ScenarioSet:
        if self._scenarios is None:
            self._scenarios = read_scenario_set(self.layout.scenarios)
        return self._scenarios

    def split(self, label: Split) -> List[DemandScenario]:
        return self.scenarios.by_split(label)

    def budget(self, fraction: float) -> int:
        return budget_from_fraction(fraction, self.net.n_junctions)

    def truth_pressures(self, scenarios: Sequence[DemandScenario]) -> List[np.ndarray]:
        """Ground-truth pressures of each scenario, solved once per pipeline"""
        pressures = []
        for scenario in scenarios:
            if scenario.scenario_id not in self._truth:
                p_true, converged = solve_scenario(self.net, scenario.demands, self.config.solver)
                failed = int((~converged).sum())
                if failed:
                    logger.warning(
                        f"Scenario {scenario.scenario_id}: {failed} ground-truth steps "
                        "did not converge and are excluded from pressure metrics"
                    )
                self._truth[scenario.scenario_id] = p_true
            pressures.append(self._truth[scenario.scenario_id])
        return pressures

    def test_context(self) -> CellContext:
        test = self.split(Split.TEST)
        return CellContext(
            net=self.net,
            scenarios=test,
            truth_pressures=self.truth_pressures(test),
            solver=self.config.solver,
            noise_mode=self.config.noise_mode,
        )

    def load_models(self, directory: Optional[Path] = None) -> Dict[int, ForecastModel]:
        return load_model_bank(directory or self.layout.models)

    def load_calibration(self) -> CalibrationTable:
        return CalibrationTable.load(self.layout.calibration_file, self.layout.residuals_file)

    # Stages

    def generate(self) -> ScenarioSet:
        """
        Generate, split and archive the demand scenarios.

        Returns:
            ScenarioSet: The split scenario set
        """
        cfg = self.config
        logger.info(f"Generating {cfg.gen.n_scenarios} scenarios on {cfg.label}")
        scenario_set = split_scenarios(generate_scenarios(self.net, cfg.gen), cfg.split_fractions)
        self.layout.root.mkdir(parents=True, exist_ok=True)
        self.layout.config_file.write_text(cfg.to_json())
        write_scenario_set(
            scenario_set,
            self.layout.scenarios,
            extra=dict(stage_manifest("generate", cfg, {"network": cfg.label})),
        )
        self._scenarios = scenario_set
        return scenario_set

    def train(
        self,
        hyper: Optional[LstmHyperparams] = None,
        directory: Optional[Path] = None,
    ) -> Dict[int, ForecastModel]:
        """
        Train one forecaster per junction on the training split.

        Node at junction position k is trained with seed `hyper.seed + k`.

        Args:
            hyper: Overrides `config.hyper` (used by the lookback sweep)
            directory: Model archive directory. Defaults to the models directory.

        Returns:
            Dict[int, ForecastModel]: Model per junction position

        Raises:
            MissingArtifactError: If the scenario archive is missing
            InsufficientDataError: If the training split is too short
        """
        hyper = hyper or self.config.hyper
        directory = directory or self.layout.models
        net = self.net
        matrices = [s.demands for s in self.split(Split.TRAIN)]
        tasks = [
            TrainTask(
                position=k,
                node=net.nodes[index].id,
                series=node_training_series(matrices, k),
                hyper=hyper,
                seed=hyper.seed + k,
            )
            for k, index in enumerate(net.junction_indices)
        ]
        logger.info(
            f"Training {len(tasks)} node models (lookback {hyper.lookback}, "
            f"{self.max_workers} workers)"
        )
        trained = map_cells(
            train_task,
            tasks,
            self.max_workers,
            desc=f"Training (w={hyper.lookback})",
            unit="node",
            progress=self.progress,
        )
        models = {task.position: model for task, model in zip(tasks, trained)}
        save_model_bank(models, directory)
        write_manifest(
            directory,
            "train",
            self.config,
            {
                "lookback": hyper.lookback,
                "model_seeds": [task.seed for task in tasks],
                "epochs": [len(m.train_log) for m in trained],
            },
        )
        return models

    def calibrate(
        self,
        alpha: Optional[float] = None,
        models: Optional[ModelBank] = None,
        warmup: Optional[int] = None,
        save: bool = True,
    ) -> CalibrationTable:
        """
        Two-pass conformal calibration on the calibration split.

        Args:
            alpha: Overrides `config.alpha`
            models: Forecasters to calibrate. Defaults to the trained bank.
            warmup: Warm-up override shared with the runs it will serve
            save: Write the table, residual archive and manifest

        Raises:
            MissingArtifactError: If scenarios or models are missing
            TooFewResidualsError: If the calibration split is too small for alpha
        """
        cfg = self.config
        alpha = cfg.alpha if alpha is None else alpha
        models = models if models is not None else self.load_models()
        budget = self.budget(cfg.calibration_budget)
        table = calibrate(
            models,
            self.net,
            self.split(Split.CALIBRATION),
            budget,
            alpha,
            seed=cfg.seeds[0],
            warmup=warmup,
            archive_residuals=cfg.archive_residuals,
            progress=self.progress,
        )
        if save:
            table.save(self.layout.calibration_file, self.layout.residuals_file)
            write_manifest(
                self.layout.calibration,
                "calibrate",
                cfg,
                {"alpha": alpha, "budget": budget, "n_cal": int(table.n_cal.min())},
            )
        return table

    def _grid_cells(
        self,
        models: ModelBank,
        table: CalibrationTable,
        context: CellContext,
    ) -> List[TwinCell]:
        cfg = self.config
        n = self.net.n_junctions
        train = [s.demands for s in self.split(Split.TRAIN)]
        cells = []
        seen = set()
        for kind in cfg.policies:
            for requested in cfg.budgets:
                # Full measures every node whatever the budget
                fraction = 1.0 if kind is PolicyKind.FULL else requested
                budget = n if kind is PolicyKind.FULL else self.budget(fraction)
                for sigma in cfg.sensor_sigmas:
                    for seed in cfg.seeds:
                        key = (kind, fraction, sigma, seed)
                        if key in seen:
                            continue
                        seen.add(key)
                        if kind is PolicyKind.UNIFORM_RANDOM:
                            policy = SamplingPolicy.uniform(seed)
                        elif kind is PolicyKind.STATIC_HIGH_VARIANCE:
                            policy = SamplingPolicy.static(precompute_static_set(train, budget))
                        else:
                            policy = SamplingPolicy(kind)
                        stem = (
                            f"{kind.value}_b{int(round(100 * fraction)):03d}"
                            f"_s{sigma:g}_seed{seed}"
                        )
                        cells.append(
                            TwinCell(
                                labels={
                                    "network": cfg.label,
                                    "method": kind.value,
                                    "budget": fraction,
                                    "nodes": budget,
                                    "sensor_sigma": sigma,
                                },
                                models=models,
                                calib=table,
                                policy=policy,
                                budget=budget,
                                sensor_sigma=sigma,
                                seed=seed,
                                dump_stem=self.layout.runs / stem,
                                context=context,
                            )
                        )
        return cells

    def run(self) -> List[EvaluationReport]:
        """
        Run every (policy, budget, noise, seed) cell over the test split.

        Writes one gzip trajectory CSV and one timing sidecar per cell plus
        `runs/index.csv` listing the cells.

        Returns:
            List[EvaluationReport]: One report per cell and test scenario
        """
        models = self.load_models()
        table = self.load_calibration()
        context = self.test_context()
        cells = self._grid_cells(models, table, context)
        logger.info(f"Running {len(cells)} cells over {len(context.scenarios)} test scenarios")
        results = map_cells(
            run_cell, cells, self.max_workers, desc="Run grid", progress=self.progress
        )

        index = pd.DataFrame(
            [
                {
                    "file": cell.dump_stem.name,
                    **cell.labels,
                    "seed": cell.seed,
                }
                for cell in cells
            ],
            columns=RUN_INDEX_COLUMNS,
        )
        index.to_csv(self.layout.run_index, index=False)
        write_manifest(
            self.layout.runs,
            "run",
            self.config,
            {"cells": len(cells), "test_scenarios": [s.scenario_id for s in context.scenarios]},
        )
        return [report for reports in results for report in reports]

    def load_run_reports(self) -> List[EvaluationReport]:
        """
        Re-evaluate every dumped trajectory listed in the run index.

        Raises:
            MissingArtifactError: If the run stage has not been executed
        """
        if not self.layout.run_index.exists():
            raise MissingArtifactError(self.layout.run_index, "run `aquatwin run` first")
        index = pd.read_csv(self.layout.run_index)
        reports = []
        for row in index.itertuples(index=False):
            stem = self.layout.runs / row.file
            labels = {
                "network": row.network,
                "method": row.method,
                "budget": float(row.budget),
                "nodes": int(row.nodes),
                "sensor_sigma": float(row.sensor_sigma),
                "seed": int(row.seed),
            }
            for trajectory in read_cell_trajectories(stem):
                reports.append(
                    evaluate_trajectory(trajectory, **labels, scenario=trajectory.scenario_id)
                )
        return reports

    def evaluate(self) -> Dict[str, pd.DataFrame]:
        """
        Build the demand, pressure, safety and timing tables and their charts.

        Returns:
            Dict[str, pd.DataFrame]: Tables keyed by short name
        """
        reports = self.load_run_reports()
        tables = grid_tables(reports)
        paths = write_tables(tables, self.layout.reports)
        plot_rmse_vs_budget(tables["demand"], self.layout.charts / "rmse_vs_budget.svg")
        if "timing" in tables:
            plot_timing(tables["timing"], self.layout.charts / "timing.svg")
        write_manifest(
            self.layout.reports,
            "evaluate",
            self.config,
            {"tables": [p.name for p in paths], "reports": len(reports)},
        )
        return tables

    def ablate(self) -> pd.DataFrame:
        """
        Compare the full method against its ablated variants at the ablation budget.

        Every variant is evaluated after the same warm-up (the longest lookback
        among the forecasters involved) so the evaluated hours coincide. The
        moving-average variant is calibrated on its own residuals.

        Returns:
            pd.DataFrame: The ablation table
        """
        cfg = self.config
        models = self.load_models()
        moving_average = {k: MovingAverageForecaster(MOVING_AVERAGE_DAYS) for k in models}
        warmup = max(
            max(m.lookback for m in models.values()),
            max(m.lookback for m in moving_average.values()),
        )
        budget = self.budget(cfg.ablation_budget)
        logger.info(f"Ablation at budget {budget} with a {warmup} h warm-up")

        table = self.calibrate(models=models, warmup=warmup, save=False)
        ma_table = self.calibrate(models=moving_average, warmup=warmup, save=False)
        static_set = precompute_static_set([s.demands for s in self.split(Split.TRAIN)], budget)

        context = self.test_context()
        cells = []
        for seed in cfg.seeds:
            variants = {
                AblationVariant.FULL_METHOD: (models, table, SamplingPolicy.adaptive()),
                AblationVariant.ROLLING_VARIANCE: (
                    models,
                    RollingVarianceScorer(cfg.alpha, ROLLING_VARIANCE_WINDOW),
                    SamplingPolicy.adaptive(),
                ),
                AblationVariant.FIXED_WIDTH: (
                    models,
                    FixedWidthScorer(FIXED_HALF_WIDTH_LPS),
                    SamplingPolicy.adaptive(),
                ),
                AblationVariant.MOVING_AVERAGE: (
                    moving_average,
                    ma_table,
                    SamplingPolicy.adaptive(),
                ),
                AblationVariant.STATIC: (models, table, SamplingPolicy.static(static_set)),
                AblationVariant.RANDOM: (models, table, SamplingPolicy.uniform(seed)),
            }
            for variant, (bank, calib, policy) in variants.items():
                cells.append(
                    TwinCell(
                        labels={
                            "network": cfg.label,
                            "variant": variant.value,
                            "budget": cfg.ablation_budget,
                        },
                        models=bank,
                        calib=calib,
                        policy=policy,
                        budget=budget,
                        seed=seed,
                        warmup=warmup,
                        context=context,
                    )
                )
        results = map_cells(
            run_cell, cells, self.max_workers, desc="Ablation", progress=self.progress
        )
        reports = [report for batch in results for report in batch]
        frame = ablation_table(reports)
        order = {variant.value: k for k, variant in enumerate(AblationVariant)}
        frame = frame.sort_values("variant", key=lambda s: s.map(order), kind="stable")
        frame = frame.reset_index(drop=True)
        path = write_table(frame, self.layout.reports / TABLE_FILES["ablation"])
        write_manifest(
            self.layout.ablation,
            "ablate",
            cfg,
            {"budget": budget, "warmup": warmup, "table": str(path)},
        )
        return frame

    def sweep(self) -> pd.DataFrame:
        """
        Sensitivity of the adaptive method to alpha and the lookback window.

        Lookbacks other than the configured one get their own model banks under
        `sweep/`. All rows share the longest warm-up of the grid.

        Returns:
            pd.DataFrame: The sensitivity table
        """
        cfg = self.config
        grid = sensitivity_grid(cfg)
        warmup = max(w for _, w in grid)
        budget = self.budget(cfg.sweep_budget)
        banks: Dict[int, Dict[int, ForecastModel]] = {}
        for _, lookback in grid:
            if lookback in banks:
                continue
            if lookback == cfg.hyper.lookback:
                banks[lookback] = self.load_models()
            else:
                hyper = dataclasses.replace(cfg.hyper, lookback=lookback)
                banks[lookback] = self.train(hyper, self.layout.sweep_models(lookback))

        context = self.test_context()
        cells = []
        for alpha, lookback in grid:
            logger.info(f"Sweep row alpha={alpha}, lookback={lookback}")
            table = self.calibrate(alpha, banks[lookback], warmup=warmup, save=False)
            for seed in cfg.seeds:
                cells.append(
                    TwinCell(
                        labels={
                            "network": cfg.label,
                            "alpha": alpha,
                            "lookback": lookback,
                            "budget": cfg.sweep_budget,
                        },
                        models=banks[lookback],
                        calib=table,
                        policy=SamplingPolicy.adaptive(),
                        budget=budget,
                        seed=seed,
                        warmup=warmup,
                        context=context,
                    )
                )
        results = map_cells(run_cell, cells, self.max_workers, desc="Sweep", progress=self.progress)
        reports = [report for batch in results for report in batch]
        frame = sensitivity_table(reports)
        row_order = {pair: k for k, pair in enumerate(grid)}
        frame["order"] = [row_order[(a, int(w))] for a, w in zip(frame["alpha"], frame["lookback"])]
        frame = frame.sort_values("order").drop(columns="order").reset_index(drop=True)
        path = write_table(frame, self.layout.reports / TABLE_FILES["sensitivity"])
        write_manifest(
            self.layout.sweep,
            "sweep",
            cfg,
            {"grid": [list(pair) for pair in grid], "warmup": warmup, "table": str(path)},
        )
        return frame


def cmd_generate(config: ExperimentConfig, workers: int = 1, output_dir: Optional[Path] = None) -> ScenarioSet:
    return ExperimentPipeline(config, workers, output_dir).generate()


def cmd_train(
    config: ExperimentConfig, workers: int = 1, output_dir: Optional[Path] = None
) -> Dict[int, ForecastModel]:
    return ExperimentPipeline(config, workers, output_dir).train()


def cmd_calibrate(
    config: ExperimentConfig, workers: int = 1, output_dir: Optional[Path] = None
) -> CalibrationTable:
    return ExperimentPipeline(config, workers, output_dir).calibrate()


def cmd_run(
    config: ExperimentConfig, workers: int = 1, output_dir: Optional[Path] = None
) -> List[EvaluationReport]:
    return ExperimentPipeline(config, workers, output_dir).run()


def cmd_evaluate(
    config: ExperimentConfig, workers: int = 1, output_dir: Optional[Path] = None
) -> Dict[str, pd.DataFrame]:
    return ExperimentPipeline(config, workers, output_dir).evaluate()


def cmd_ablate(config: ExperimentConfig, workers: int = 1, output_dir: Optional[Path] = None) -> pd.DataFrame:
    return ExperimentPipeline(config, workers, output_dir).ablate()


def cmd_sweep(config: ExperimentConfig, workers: int = 1, output_dir: Optional[Path] = None) -> pd.DataFrame:
    return ExperimentPipeline(config, workers, output_dir).sweep()
