# aquatwin/__init__.py
from .config import ExperimentConfig, GenConfig, LstmHyperparams, SolverConfig
from .conformal import CalibrationTable, calibrate
from .constants import AblationVariant, NoiseMode, PolicyKind, Split
from .evaluation import EvaluationReport, evaluate_trajectory
from .exceptions import AquaTwinError
from .experiments import ExperimentPipeline
from .forecasting import ForecastModel, train_node_model
from .hydraulics import solve_steady_state
from .network import NetworkModel, hanoi_builtin, parse_inp
from .sampling import SamplingPolicy, TwinTrajectory, run_digital_twin
from .scenarios import ScenarioSet, generate_scenarios

__all__ = [
    "AblationVariant",
    "AquaTwinError",
    "CalibrationTable",
    "EvaluationReport",
    "ExperimentConfig",
    "ExperimentPipeline",
    "ForecastModel",
    "GenConfig",
    "LstmHyperparams",
    "NetworkModel",
    "NoiseMode",
    "PolicyKind",
    "SamplingPolicy",
    "ScenarioSet",
    "SolverConfig",
    "Split",
    "TwinTrajectory",
    "calibrate",
    "evaluate_trajectory",
    "generate_scenarios",
    "hanoi_builtin",
    "parse_inp",
    "run_digital_twin",
    "solve_steady_state",
    "train_node_model",
]
