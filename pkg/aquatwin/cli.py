"""
Command-line interface for aquatwin.

Every pipeline stage is a subcommand reading and writing artifacts under one
output directory:

    generate -> train -> calibrate -> run -> evaluate
                                   \\-> ablate, sweep

The CLI uses Click for command handling and Rich for formatted terminal output.
"""

import logging
import time
from functools import wraps
from pathlib import Path
from typing import Callable, Optional

import click
import pandas as pd
from dotenv import load_dotenv
from rich.console import Console
from rich.table import Table

from aquatwin.config import ExperimentConfig
from aquatwin.constants import MESSAGES, Split
from aquatwin.evaluation.reports import TABLE_FILES, demand_table
from aquatwin.exceptions import AquaTwinError
from aquatwin.experiments.pipeline import ExperimentPipeline
from aquatwin.utils.progress import format_duration

logger = logging.getLogger(__name__)

console = Console()

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def frame_table(frame: pd.DataFrame, title: str, max_rows: int = 40) -> Table:
    """Render a report frame as a rich table, floats with 4 significant digits"""
    table = Table(title=title)
    for column in frame.columns:
        table.add_column(str(column), justify="right")
    for row in frame.head(max_rows).itertuples(index=False):
        table.add_row(*(f"{v:.4g}" if isinstance(v, float) else str(v) for v in row))
    if len(frame) > max_rows:
        table.caption = f"{len(frame) - max_rows} more rows not shown"
    return table


def stage_options(fn: Callable) -> Callable:
    """Options shared by every stage: --config, --workers and --out"""

    @click.option(
        "--config",
        "config_path",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        envvar="AQUATWIN_CONFIG",
        help="Experiment configuration JSON. Defaults to the built-in desk setup.",
    )
    @click.option(
        "--workers",
        type=click.IntRange(min=1),
        default=1,
        show_default=True,
        envvar="AQUATWIN_WORKERS",
        help="Worker processes for node training and run cells.",
    )
    @click.option(
        "--out",
        "output_dir",
        type=click.Path(file_okay=False, path_type=Path),
        envvar="AQUATWIN_OUT",
        help="Output directory. Overrides the configuration's output_dir.",
    )
    @wraps(fn)
    def wrapper(config_path: Optional[Path], workers: int, output_dir: Optional[Path]):
        try:
            config = (
                ExperimentConfig.from_json(config_path) if config_path else ExperimentConfig()
            )
            pipeline = ExperimentPipeline(config, workers, output_dir)
            started = time.perf_counter()
            fn(pipeline)
            logger.info(f"{fn.__name__} finished in {format_duration(time.perf_counter() - started)}")
        except AquaTwinError as e:
            logger.error(f"{fn.__name__} failed: {e}")
            console.print(f"[red]{MESSAGES['failed'].format(e)}[/red]")
            raise SystemExit(1) from e

    return wrapper


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log debug messages.")
def cli(verbose: bool):
    """
    aquatwin: digital twin of a water distribution network with adaptive sensing.

    Use --help with any command for more information.

    Examples:
        Run the full pipeline on the built-in Hanoi network:
        $ aquatwin generate --out out
        $ aquatwin train --out out --workers 4
        $ aquatwin calibrate --out out
        $ aquatwin run --out out
        $ aquatwin evaluate --out out
    """
    load_dotenv()
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT)


@cli.command()
@stage_options
def generate(pipeline: ExperimentPipeline):
    """Generate and split synthetic demand scenarios."""
    scenario_set = pipeline.generate()
    counts = [len(scenario_set.by_split(label)) for label in Split]
    table = Table(title=f"Scenarios on {pipeline.config.label}")
    table.add_column("Split")
    table.add_column("Scenarios", justify="right")
    for label, count in zip(Split, counts):
        table.add_row(label.value, str(count))
    console.print(table)
    console.print(MESSAGES["generate_done"].format(len(scenario_set), *counts))


@cli.command()
@stage_options
def train(pipeline: ExperimentPipeline):
    """Train one LSTM forecaster per junction."""
    models = pipeline.train()
    table = Table(title="Node models")
    table.add_column("Node")
    table.add_column("Epochs", justify="right")
    table.add_column("Best val loss", justify="right")
    for position in sorted(models):
        model = models[position]
        best = model.train_log[-1]["best_val_loss"] if model.train_log else float("nan")
        table.add_row(model.node.label, str(len(model.train_log)), f"{best:.5f}")
    console.print(table)
    console.print(MESSAGES["train_done"].format(len(models)))


@cli.command()
@stage_options
def calibrate(pipeline: ExperimentPipeline):
    """Compute per-junction conformal quantiles on the calibration split."""
    calib = pipeline.calibrate()
    table = Table(title=f"Conformal quantiles (alpha={calib.alpha})")
    table.add_column("Node")
    table.add_column("Q (L/s)", justify="right")
    table.add_column("n_cal", justify="right")
    for entry in calib.entries():
        table.add_row(entry["label"], f"{entry['quantile']:.4f}", str(entry["n_cal"]))
    console.print(table)
    console.print(MESSAGES["calibrate_done"].format(calib.n_junctions, calib.alpha, calib.budget))


@cli.command()
@stage_options
def run(pipeline: ExperimentPipeline):
    """Run the digital twin for every policy, budget, noise level and seed."""
    reports = pipeline.run()
    console.print(frame_table(demand_table(reports), "Demand RMSE (L/s)"))
    keys = ("method", "budget", "sensor_sigma", "seed")
    cells = len({tuple(r.labels[k] for k in keys) for r in reports})
    console.print(MESSAGES["run_done"].format(cells))


@cli.command()
@stage_options
def evaluate(pipeline: ExperimentPipeline):
    """Aggregate run trajectories into report tables and charts."""
    tables = pipeline.evaluate()
    console.print(frame_table(tables["demand"], TABLE_FILES["demand"]))
    console.print(frame_table(tables["safety"], TABLE_FILES["safety"]))
    console.print(MESSAGES["evaluate_done"].format(pipeline.layout.reports))


@cli.command()
@stage_options
def ablate(pipeline: ExperimentPipeline):
    """Compare the full method against its ablated variants."""
    frame = pipeline.ablate()
    console.print(frame_table(frame, TABLE_FILES["ablation"]))
    console.print(MESSAGES["ablate_done"].format(pipeline.layout.reports / TABLE_FILES["ablation"]))


@cli.command()
@stage_options
def sweep(pipeline: ExperimentPipeline):
    """Sensitivity of the method to alpha and the lookback window."""
    frame = pipeline.sweep()
    console.print(frame_table(frame, TABLE_FILES["sensitivity"]))
    console.print(
        MESSAGES["sweep_done"].format(pipeline.layout.reports / TABLE_FILES["sensitivity"])
    )


if __name__ == "__main__":
    cli()
