"""Report tables and charts built from evaluation reports."""

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from aquatwin.constants import TIMING_COMPONENTS  # noqa: E402
from aquatwin.evaluation.metrics import EvaluationReport, summarize_reports  # noqa: E402
from aquatwin.exceptions import EmptyEvaluationError  # noqa: E402
from aquatwin.types import PathLike  # noqa: E402

logger = logging.getLogger(__name__)

# Fixed element ids so that re-rendered charts compare equal
plt.rcParams["svg.hashsalt"] = "aquatwin"

GRID_KEYS = ("network", "method", "budget", "sensor_sigma")
ABLATION_KEYS = ("network", "variant", "budget")
SENSITIVITY_KEYS = ("network", "alpha", "lookback", "budget")

TABLE_FILES = {
    "demand": "table_demand.csv",
    "pressure": "table_pressure.csv",
    "safety": "table_safety.csv",
    "timing": "table_timing.csv",
    "ablation": "table_ablation.csv",
    "sensitivity": "table_sensitivity.csv",
}


def _columns(summary: pd.DataFrame, keys: Sequence[str], metrics: Iterable[str]) -> pd.DataFrame:
    wanted = list(keys) + [f"{m}_{s}" for m in metrics for s in ("mean", "std")] + ["runs"]
    return summary[wanted]


def demand_table(reports: Sequence[EvaluationReport]) -> pd.DataFrame:
    """Demand RMSE per network, method, budget and noise level"""
    return _columns(summarize_reports(reports, GRID_KEYS), GRID_KEYS, ["rmse_q"])


def pressure_table(reports: Sequence[EvaluationReport]) -> pd.DataFrame:
    """Pressure RMSE per network, method, budget and noise level"""
    return _columns(summarize_reports(reports, GRID_KEYS), GRID_KEYS, ["rmse_p"])


def safety_table(reports: Sequence[EvaluationReport]) -> pd.DataFrame:
    """Violation rate and interval coverage (unmeasured nodes and all nodes)"""
    summary = summarize_reports(reports, GRID_KEYS)
    return _columns(summary, GRID_KEYS, ["violation_rate", "coverage", "coverage_all"])


def timing_table(reports: Sequence[EvaluationReport], keys: Sequence[str] = GRID_KEYS) -> pd.DataFrame:
    """
    Mean per-step wall-clock of each loop component, in milliseconds.

    Reports without timing (rebuilt from trajectory dumps) are skipped.

    Raises:
        EmptyEvaluationError: If no report carries timings
    """
    records = []
    for report in reports:
        if report.timing is None:
            continue
        record = {key: report.labels.get(key) for key in keys}
        for summary in report.timing.components:
            record[f"{summary['component']}_ms"] = summary["mean_ms"]
            record[f"{summary['component']}_p95_ms"] = summary["p95_ms"]
        record["total_ms"] = report.timing.total_mean_ms
        record["overhead_pct"] = report.timing.overhead_pct
        records.append(record)
    if not records:
        raise EmptyEvaluationError("No timing information in the reports")
    frame = pd.DataFrame(records)
    return frame.groupby(list(keys), sort=True).mean().reset_index()


def ablation_table(reports: Sequence[EvaluationReport]) -> pd.DataFrame:
    """One row per ablation variant"""
    metrics = ["rmse_q", "rmse_p", "coverage", "violation_rate"]
    summary = summarize_reports(reports, ABLATION_KEYS, metrics=metrics)
    return _columns(summary, ABLATION_KEYS, metrics)


def sensitivity_table(reports: Sequence[EvaluationReport]) -> pd.DataFrame:
    """One row per (alpha, lookback) pair"""
    metrics = ["rmse_q", "rmse_p", "coverage", "violation_rate"]
    summary = summarize_reports(reports, SENSITIVITY_KEYS, metrics=metrics)
    return _columns(summary, SENSITIVITY_KEYS, metrics)


def grid_tables(reports: Sequence[EvaluationReport]) -> Dict[str, pd.DataFrame]:
    """The demand, pressure, safety and timing tables of a run grid"""
    tables = {
        "demand": demand_table(reports),
        "pressure": pressure_table(reports),
        "safety": safety_table(reports),
    }
    try:
        tables["timing"] = timing_table(reports)
    except EmptyEvaluationError:
        logger.warning("No timings recorded; table_timing.csv not written")
    return tables


def write_table(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def write_tables(tables: Dict[str, pd.DataFrame], directory: PathLike) -> List[Path]:
    """Write tables under their canonical file names"""
    directory = Path(directory)
    return [write_table(frame, directory / TABLE_FILES[name]) for name, frame in tables.items()]


def _save(fig, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_rmse_vs_budget(demand: pd.DataFrame, path: PathLike, sensor_sigma: float = 0.0) -> Path:
    """
    Line chart of demand RMSE against budget, one line per method.

    Only rows at `sensor_sigma` are drawn; the first network is used when the
    table covers several.
    """
    rows = demand[np.isclose(demand["sensor_sigma"], sensor_sigma)]
    if rows.empty:
        rows = demand
    network = rows["network"].iloc[0]
    rows = rows[rows["network"] == network]

    fig, ax = plt.subplots(figsize=(6, 4))
    for method, group in rows.groupby("method", sort=True):
        group = group.sort_values("budget")
        ax.errorbar(
            100.0 * group["budget"],
            group["rmse_q_mean"],
            yerr=group["rmse_q_std"],
            marker="o",
            capsize=3,
            label=method,
        )
    ax.set_xlabel("Sampling budget (% of junctions)")
    ax.set_ylabel("Demand RMSE (L/s)")
    ax.set_title(f"{network}, sensor sigma {sensor_sigma:g}")
    ax.legend()
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_timing(timing: pd.DataFrame, path: PathLike) -> Path:
    """Bar chart of mean per-step time by component, averaged over the grid"""
    means = [timing[f"{name}_ms"].mean() for name in TIMING_COMPONENTS]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(list(TIMING_COMPONENTS), means, color="tab:blue")
    ax.set_ylabel("Mean time per step (ms)")
    ax.set_title(f"Non-solver overhead {timing['overhead_pct'].mean():.1f}%")
    return _save(fig, path)
