"""On-disk scenario archive: one CSV per scenario plus a JSON manifest."""

import dataclasses
import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from aquatwin.config import GenConfig
from aquatwin.constants import NodeClass, Split
from aquatwin.exceptions import MissingArtifactError
from aquatwin.scenarios.generator import DemandScenario, ScenarioSet
from aquatwin.types import PathLike

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def scenario_filename(scenario_id: int) -> str:
    return f"scenario_{scenario_id:04d}.csv"


def scenario_frame(scenario: DemandScenario) -> pd.DataFrame:
    """Demand matrix as a frame with columns hour, node_0 .. node_{N-1}"""
    frame = pd.DataFrame(
        scenario.demands,
        columns=[f"node_{i}" for i in range(scenario.n_junctions)],
    )
    frame.insert(0, "hour", np.arange(scenario.horizon))
    return frame


def write_scenario_set(
    scenario_set: ScenarioSet, directory: PathLike, extra: Optional[dict] = None
) -> Path:
    """
    Write every scenario as CSV and a manifest with seed, config and split labels.

    Args:
        scenario_set: Scenarios to persist, split or unsplit
        directory: Target directory, created if needed
        extra: Additional manifest fields (config hash, versions, ...)

    Returns:
        Path: Manifest path
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for scenario in scenario_set.scenarios:
        path = directory / scenario_filename(scenario.scenario_id)
        scenario_frame(scenario).to_csv(path, index=False)

    manifest = {
        "seed": scenario_set.config.seed,
        "config": {
            k: list(v) if isinstance(v, tuple) else v
            for k, v in dataclasses.asdict(scenario_set.config).items()
        },
        "scenario_ids": [s.scenario_id for s in scenario_set.scenarios],
        "split": [label.value for label in scenario_set.split],
        "node_classes": [c.value for c in scenario_set.node_classes],
        "junction_labels": list(scenario_set.junction_labels),
    }
    if extra:
        manifest.update(extra)
    manifest_path = directory / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    logger.info(f"Wrote {len(scenario_set)} scenarios to {directory}")
    return manifest_path


def read_scenario_set(directory: PathLike) -> ScenarioSet:
    """
    Load a scenario archive written by `write_scenario_set`.

    Raises:
        MissingArtifactError: If the manifest or a scenario file is absent
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise MissingArtifactError(manifest_path, "run `aquatwin generate` first")
    manifest = json.loads(manifest_path.read_text())

    scenarios = []
    for scenario_id in manifest["scenario_ids"]:
        path = directory / scenario_filename(scenario_id)
        if not path.exists():
            raise MissingArtifactError(path, "scenario archive is incomplete")
        frame = pd.read_csv(path, float_precision="round_trip")
        demands = frame.drop(columns="hour").to_numpy(dtype=float)
        scenarios.append(DemandScenario(int(scenario_id), demands))

    config = GenConfig(
        **{
            k: tuple(v) if isinstance(v, list) else v
            for k, v in manifest["config"].items()
        }
    )
    return ScenarioSet(
        scenarios=scenarios,
        split=tuple(Split(v) for v in manifest.get("split", [])),
        node_classes=tuple(NodeClass(v) for v in manifest.get("node_classes", [])),
        junction_labels=tuple(manifest.get("junction_labels", [])),
        config=config,
    )
