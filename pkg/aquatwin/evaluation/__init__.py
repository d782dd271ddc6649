from aquatwin.evaluation.metrics import (
    EvaluationReport,
    TimingProfile,
    empirical_coverage,
    evaluate_trajectory,
    rmse_demand,
    rmse_pressure,
    summarize_reports,
    timing_profile,
    violation_rate,
)
from aquatwin.evaluation.reports import (
    TABLE_FILES,
    ablation_table,
    grid_tables,
    plot_rmse_vs_budget,
    plot_timing,
    sensitivity_table,
    write_tables,
)

__all__ = [
    "EvaluationReport",
    "TimingProfile",
    "empirical_coverage",
    "evaluate_trajectory",
    "rmse_demand",
    "rmse_pressure",
    "summarize_reports",
    "timing_profile",
    "violation_rate",
    "TABLE_FILES",
    "ablation_table",
    "grid_tables",
    "plot_rmse_vs_budget",
    "plot_timing",
    "sensitivity_table",
    "write_tables",
]
