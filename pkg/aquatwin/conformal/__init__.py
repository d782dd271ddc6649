from aquatwin.conformal.calibration import calibrate, collect_residuals
from aquatwin.conformal.quantile import (
    CalibrationTable,
    conformal_quantile,
    display_interval,
    prediction_interval,
    uncertainty_score,
)
from aquatwin.conformal.scorers import (
    ConformalScorer,
    FixedWidthScorer,
    RollingVarianceScorer,
)

__all__ = [
    "CalibrationTable",
    "ConformalScorer",
    "FixedWidthScorer",
    "RollingVarianceScorer",
    "calibrate",
    "collect_residuals",
    "conformal_quantile",
    "display_interval",
    "prediction_interval",
    "uncertainty_score",
]
