from typing import Optional


class AquaTwinError(Exception):
    """Base exception for all aquatwin errors"""

    pass


# Network model


class NetworkError(AquaTwinError):
    """Base class for network definition errors"""

    pass


class MalformedSectionError(NetworkError):
    """Raised when a line of an INP section cannot be parsed"""

    def __init__(self, section: str, line_number: int, detail: str = ""):
        self.section = section
        self.line_number = line_number
        self.detail = detail
        message = f"Malformed [{section}] entry on line {line_number}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class DuplicateLabelError(NetworkError):
    """Raised when two nodes or two pipes share a label"""

    def __init__(self, label: str, line_number: Optional[int] = None):
        self.label = label
        self.line_number = line_number
        where = f" (line {line_number})" if line_number is not None else ""
        super().__init__(f"Duplicate label '{label}'{where}")


class DanglingPipeEndpointError(NetworkError):
    """Raised when a pipe references an undeclared node"""

    def __init__(self, pipe: str, label: str):
        self.pipe = pipe
        self.label = label
        super().__init__(f"Pipe '{pipe}' references undefined node '{label}'")


class NoSourceError(NetworkError):
    """Raised when a network has no reservoir or tank"""

    def __init__(self):
        super().__init__("Network declares no reservoir or tank")


class UnsupportedElementError(NetworkError):
    """Raised when an INP file contains pumps or valves"""

    def __init__(self, section: str, line_number: int):
        self.section = section
        self.line_number = line_number
        super().__init__(
            f"[{section}] entries are not supported (line {line_number}); "
            "only pipes between junctions and fixed-head sources can be simulated"
        )


class NetworkValidationError(NetworkError):
    """Raised when a parsed network violates topology or attribute rules"""

    def __init__(self, report):
        self.report = report
        details = "; ".join(finding.message for finding in report.findings)
        super().__init__(f"Network failed validation: {details}")


# Hydraulics


class HydraulicError(AquaTwinError):
    """Base class for hydraulic solver errors"""

    pass


class NonConvergenceError(HydraulicError):
    """Raised when the steady-state solver fails to converge"""

    def __init__(self, iterations: int, residual: float, reason: str = ""):
        self.iterations = iterations
        self.residual = residual
        self.reason = reason
        message = (
            f"Hydraulic solve did not converge after {iterations} iterations "
            f"(max mass residual {residual:.3e} L/s)"
        )
        if reason:
            message = f"{message}: {reason}"
        super().__init__(message)


# Scenarios


class ScenarioError(AquaTwinError):
    """Base class for scenario generation errors"""

    pass


class TooFewScenariosError(ScenarioError):
    """Raised when a split would leave a label without scenarios"""

    pass


# Forecasting


class ForecastError(AquaTwinError):
    """Base class for forecaster errors"""

    pass


class ShapeMismatchError(ForecastError):
    """Raised when an input window does not match the model lookback"""

    pass


class InsufficientDataError(ForecastError):
    """Raised when there are too few training windows"""

    pass


class NonFiniteLossError(ForecastError):
    """Raised when training diverges"""

    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"Training loss became non-finite in epoch {epoch}")


class MissingModelError(ForecastError):
    """Raised when a junction has no forecaster"""

    def __init__(self, node: int):
        self.node = node
        super().__init__(f"No forecaster available for junction {node}")


# Conformal calibration


class CalibrationError(AquaTwinError):
    """Base class for conformal calibration errors"""

    pass


class TooFewResidualsError(CalibrationError):
    """Raised when the calibration set cannot attain the corrected quantile"""

    def __init__(self, n: int, required: int):
        self.n = n
        self.required = required
        super().__init__(
            f"{n} residuals available, at least {required} required for the quantile"
        )


class UncalibratedNodeError(CalibrationError):
    """Raised when a node has no calibration entry"""

    def __init__(self, node: int):
        self.node = node
        super().__init__(f"Junction {node} is not calibrated")


class RolloutFailureError(CalibrationError):
    """Raised when a calibration rollout hits a hydraulic failure"""

    def __init__(self, scenario_id: int, step: int):
        self.scenario_id = scenario_id
        self.step = step
        super().__init__(f"Rollout failed in scenario {scenario_id} at step {step}")


# Sampling


class SamplingError(AquaTwinError):
    """Base class for sampling policy errors"""

    pass


class BudgetExceedsNetworkError(SamplingError):
    """Raised when the sampling budget exceeds the number of nodes"""

    def __init__(self, budget: int, n_nodes: int):
        self.budget = budget
        self.n_nodes = n_nodes
        super().__init__(f"Budget {budget} exceeds network size {n_nodes}")


# Evaluation


class EvaluationError(AquaTwinError):
    """Base class for metric errors"""

    pass


class EmptyEvaluationError(EvaluationError):
    """Raised when a metric has no samples to aggregate"""

    pass


# Configuration and artifacts


class ConfigurationError(AquaTwinError):
    """Raised when there are configuration issues"""

    pass


class InvalidConfigError(ConfigurationError):
    """Raised when a configuration field fails validation"""

    def __init__(self, field_path: str, reason: str):
        self.field_path = field_path
        self.reason = reason
        super().__init__(f"Invalid config field '{field_path}': {reason}")


class ArtifactError(AquaTwinError):
    """Base class for on-disk artifact errors"""

    pass


class MissingArtifactError(ArtifactError):
    """Raised when an upstream artifact is not on disk"""

    def __init__(self, path, hint: str = ""):
        self.path = path
        message = f"Missing artifact: {path}"
        if hint:
            message = f"{message} ({hint})"
        super().__init__(message)
