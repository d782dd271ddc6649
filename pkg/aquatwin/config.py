"""Configuration dataclasses for aquatwin.

Every tunable lives in one of the dataclasses below; each validates itself in
``__post_init__`` and reports the dotted path of the offending field.
"""

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from aquatwin.constants import (
    DEFAULT_BUDGETS,
    DEFAULT_SENSOR_SIGMAS,
    SWEEP_ALPHAS,
    SWEEP_LOOKBACKS,
    NoiseMode,
    PolicyKind,
)
from aquatwin.exceptions import InvalidConfigError
from aquatwin.types import PathLike


def _require(condition: bool, path: str, reason: str) -> None:
    if not condition:
        raise InvalidConfigError(path, reason)


@dataclass(frozen=True)
class GenConfig:
    """Synthetic demand scenario settings"""

    n_scenarios: int = 20
    horizon_hours: int = 2160
    seed: int = 0
    diurnal_amplitude: float = 0.3
    weekly_amplitude: float = 0.1
    noise_cv: float = 0.1
    # (residential, commercial)
    node_class_fractions: Tuple[float, float] = (0.7, 0.3)
    demand_scale: float = 0.75

    def __post_init__(self):
        """Validate configuration after initialization"""
        _require(self.n_scenarios >= 1, "n_scenarios", "must be at least 1")
        _require(self.horizon_hours >= 2, "horizon_hours", "must be at least 2")
        _require(
            0.0 <= self.diurnal_amplitude < 1.0,
            "diurnal_amplitude",
            "must lie in [0, 1)",
        )
        _require(
            0.0 <= self.weekly_amplitude < 1.0, "weekly_amplitude", "must lie in [0, 1)"
        )
        _require(self.noise_cv >= 0.0, "noise_cv", "must be non-negative")
        _require(self.demand_scale > 0.0, "demand_scale", "must be positive")
        _require(
            len(self.node_class_fractions) == 2
            and all(f >= 0.0 for f in self.node_class_fractions)
            and math.isclose(sum(self.node_class_fractions), 1.0, abs_tol=1e-9),
            "node_class_fractions",
            "must be two non-negative fractions summing to 1",
        )


@dataclass(frozen=True)
class LstmHyperparams:
    """Per-node LSTM architecture and training settings"""

    lookback: int = 24
    layers: int = 2
    hidden: int = 16
    dropout: float = 0.2
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 10
    l2: float = 1e-5
    seed: int = 0
    # Desk-scale knob: subsample training windows per node
    max_train_windows: Optional[int] = None

    def __post_init__(self):
        """Validate configuration after initialization"""
        _require(self.lookback >= 1, "lookback", "must be at least 1")
        _require(self.layers >= 1, "layers", "must be at least 1")
        _require(self.hidden >= 1, "hidden", "must be at least 1")
        _require(0.0 <= self.dropout < 1.0, "dropout", "must lie in [0, 1)")
        _require(self.learning_rate > 0.0, "learning_rate", "must be positive")
        _require(self.batch_size >= 1, "batch_size", "must be at least 1")
        _require(self.max_epochs >= 1, "max_epochs", "must be at least 1")
        _require(self.patience >= 1, "patience", "must be at least 1")
        _require(self.l2 >= 0.0, "l2", "must be non-negative")
        _require(
            self.max_train_windows is None or self.max_train_windows >= 1,
            "max_train_windows",
            "must be positive when set",
        )


@dataclass(frozen=True)
class SolverConfig:
    """Global-gradient solver settings"""

    max_iterations: int = 200
    # Relative total flow change
    tolerance: float = 1e-6
    # m3/s, below which headloss is smoothed
    headloss_regularization: float = 1e-4
    # L/s
    mass_tolerance: float = 1e-6

    def __post_init__(self):
        """Validate configuration after initialization"""
        _require(self.max_iterations >= 1, "max_iterations", "must be at least 1")
        _require(self.tolerance > 0.0, "tolerance", "must be positive")
        _require(
            self.headloss_regularization > 0.0,
            "headloss_regularization",
            "must be positive",
        )
        _require(self.mass_tolerance > 0.0, "mass_tolerance", "must be positive")


_NESTED = {"gen": GenConfig, "hyper": LstmHyperparams, "solver": SolverConfig}


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Complete description of an experiment pipeline.

    Attributes:
        network: Builtin network name ("hanoi") or path to an INP file
        network_name: Label used in report tables. Defaults to the network stem.
        gen: Scenario generator settings
        hyper: LSTM hyperparameters
        solver: Hydraulic solver settings
        alpha: Conformal miscoverage level
        budgets: Sampling budgets as fractions of the junction count
        policies: Policies evaluated by the run command
        sensor_sigmas: Sensor noise levels evaluated by the run command
        seeds: Run seeds (policy stream and sensor noise)
        output_dir: Root directory of every artifact
    """

    network: str = "hanoi"
    network_name: Optional[str] = None
    gen: GenConfig = field(default_factory=GenConfig)
    hyper: LstmHyperparams = field(default_factory=LstmHyperparams)
    solver: SolverConfig = field(default_factory=SolverConfig)
    alpha: float = 0.1
    budgets: Tuple[float, ...] = DEFAULT_BUDGETS
    policies: Tuple[PolicyKind, ...] = (
        PolicyKind.ADAPTIVE,
        PolicyKind.UNIFORM_RANDOM,
        PolicyKind.STATIC_HIGH_VARIANCE,
        PolicyKind.ROUND_ROBIN,
        PolicyKind.FULL,
    )
    sensor_sigmas: Tuple[float, ...] = DEFAULT_SENSOR_SIGMAS
    seeds: Tuple[int, ...] = (0, 1, 2)
    output_dir: str = "aquatwin_out"
    split_fractions: Tuple[float, float, float] = (0.6, 0.2, 0.2)
    noise_mode: NoiseMode = NoiseMode.MULTIPLICATIVE
    calibration_budget: float = 0.4
    ablation_budget: float = 0.4
    sweep_alphas: Tuple[float, ...] = SWEEP_ALPHAS
    sweep_lookbacks: Tuple[int, ...] = SWEEP_LOOKBACKS
    sweep_budget: float = 0.4
    archive_residuals: bool = True
    progress: bool = True

    def __post_init__(self):
        """Validate configuration after initialization"""
        _require(0.0 < self.alpha < 1.0, "alpha", "must lie in (0, 1)")
        _require(len(self.budgets) > 0, "budgets", "at least one budget required")
        for k, budget in enumerate(self.budgets):
            _require(0.0 < budget <= 1.0, f"budgets[{k}]", "must lie in (0, 1]")
        _require(len(self.policies) > 0, "policies", "at least one policy required")
        for k, sigma in enumerate(self.sensor_sigmas):
            _require(sigma >= 0.0, f"sensor_sigmas[{k}]", "must be non-negative")
        _require(len(self.seeds) > 0, "seeds", "at least one seed required")
        _require(
            len(self.split_fractions) == 3
            and all(f > 0.0 for f in self.split_fractions)
            and math.isclose(sum(self.split_fractions), 1.0, abs_tol=1e-9),
            "split_fractions",
            "must be three positive fractions summing to 1",
        )
        for name in ("calibration_budget", "ablation_budget", "sweep_budget"):
            value = getattr(self, name)
            _require(0.0 < value <= 1.0, name, "must lie in (0, 1]")
        for k, alpha in enumerate(self.sweep_alphas):
            _require(0.0 < alpha < 1.0, f"sweep_alphas[{k}]", "must lie in (0, 1)")
        for k, lookback in enumerate(self.sweep_lookbacks):
            _require(lookback >= 1, f"sweep_lookbacks[{k}]", "must be at least 1")
        _require(
            self.gen.horizon_hours > self.hyper.lookback,
            "gen.horizon_hours",
            "must exceed hyper.lookback",
        )

    @property
    def label(self) -> str:
        """Network label used in report tables"""
        if self.network_name:
            return self.network_name
        return Path(self.network).stem

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON-compatible dictionary"""
        data: Dict[str, Any] = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name in _NESTED:
                value = {
                    k: list(v) if isinstance(v, tuple) else v
                    for k, v in dataclasses.asdict(value).items()
                }
            elif f.name == "policies":
                value = [p.value for p in value]
            elif isinstance(value, NoiseMode):
                value = value.value
            elif isinstance(value, tuple):
                value = list(value)
            data[f.name] = value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        """
        Build a configuration from a decoded JSON document.

        Raises:
            InvalidConfigError: On unknown keys, wrong types, or failed validation,
                naming the dotted field path
        """
        if not isinstance(data, dict):
            raise InvalidConfigError("<root>", "expected a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        kwargs: Dict[str, Any] = {}
        for key, value in data.items():
            if key not in known:
                raise InvalidConfigError(key, "unknown field")
            if key in _NESTED:
                kwargs[key] = _build_nested(key, _NESTED[key], value)
            elif key == "policies":
                kwargs[key] = tuple(
                    _enum_value(PolicyKind, v, f"policies[{k}]")
                    for k, v in enumerate(_as_list(value, key))
                )
            elif key == "noise_mode":
                kwargs[key] = _enum_value(NoiseMode, value, key)
            elif key in (
                "budgets",
                "sensor_sigmas",
                "seeds",
                "split_fractions",
                "sweep_alphas",
                "sweep_lookbacks",
            ):
                kwargs[key] = tuple(_as_list(value, key))
            else:
                kwargs[key] = value
        try:
            return cls(**kwargs)
        except TypeError as e:
            raise InvalidConfigError("<root>", str(e)) from e

    @classmethod
    def from_json(cls, path: PathLike) -> "ExperimentConfig":
        """Load and validate a configuration file"""
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise InvalidConfigError("<root>", f"invalid JSON: {e}") from e
        return cls.from_dict(data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON encoding"""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def _as_list(value: Any, path: str) -> list:
    if not isinstance(value, (list, tuple)):
        raise InvalidConfigError(path, "expected a list")
    return list(value)


def _enum_value(enum_cls, value: Any, path: str):
    try:
        return enum_cls(value)
    except ValueError:
        choices = ", ".join(member.value for member in enum_cls)
        raise InvalidConfigError(path, f"expected one of: {choices}") from None


def _build_nested(prefix: str, cls, value: Any):
    if not isinstance(value, dict):
        raise InvalidConfigError(prefix, "expected a JSON object")
    known = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, item in value.items():
        if key not in known:
            raise InvalidConfigError(f"{prefix}.{key}", "unknown field")
        kwargs[key] = tuple(item) if isinstance(item, list) else item
    try:
        return cls(**kwargs)
    except InvalidConfigError as e:
        raise InvalidConfigError(f"{prefix}.{e.field_path}", e.reason) from None
