"""Experiment pipeline stages and their on-disk artifacts."""

from aquatwin.experiments.artifacts import ArtifactLayout, load_network, write_manifest
from aquatwin.experiments.pipeline import (
    ExperimentPipeline,
    cmd_ablate,
    cmd_calibrate,
    cmd_evaluate,
    cmd_generate,
    cmd_run,
    cmd_sweep,
    cmd_train,
    sensitivity_grid,
)

__all__ = [
    "ArtifactLayout",
    "ExperimentPipeline",
    "cmd_ablate",
    "cmd_calibrate",
    "cmd_evaluate",
    "cmd_generate",
    "cmd_run",
    "cmd_sweep",
    "cmd_train",
    "load_network",
    "sensitivity_grid",
    "write_manifest",
]
