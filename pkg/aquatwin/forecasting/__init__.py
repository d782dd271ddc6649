from aquatwin.forecasting.archive import (
    load_model,
    load_model_bank,
    save_model,
    save_model_bank,
)
from aquatwin.forecasting.bank import BankPredictor
from aquatwin.forecasting.baselines import MovingAverageForecaster
from aquatwin.forecasting.lstm import (
    ForecastModel,
    ModelStack,
    gradient_check,
    init_model,
    loss_and_gradients,
    lstm_forward,
    predict,
)
from aquatwin.forecasting.training import AdamOptimizer, train_node_model

__all__ = [
    "AdamOptimizer",
    "BankPredictor",
    "ForecastModel",
    "ModelStack",
    "MovingAverageForecaster",
    "gradient_check",
    "init_model",
    "load_model",
    "load_model_bank",
    "loss_and_gradients",
    "lstm_forward",
    "predict",
    "save_model",
    "save_model_bank",
    "train_node_model",
]
