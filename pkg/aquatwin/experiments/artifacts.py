"""On-disk layout of pipeline artifacts and per-stage manifests."""

import json
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Dict, Optional

from aquatwin.config import ExperimentConfig
from aquatwin.exceptions import MissingArtifactError
from aquatwin.network.fixtures import BUILTIN_NETWORKS, builtin_inp_text, hanoi_builtin
from aquatwin.network.inp import parse_inp
from aquatwin.network.model import NetworkModel
from aquatwin.types import PathLike, StageManifest

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
VERSIONED_PACKAGES = ("aquatwin", "numpy", "scipy", "pandas", "networkx")


@dataclass(frozen=True)
class ArtifactLayout:
    """
    Directory structure under an experiment's output root.

    Attributes:
        root (Path): Output directory of the experiment

    Example:
        ```python
        layout = ArtifactLayout(Path("out"))
        table = CalibrationTable.load(layout.calibration_file)
        ```
    """

    root: Path

    @property
    def config_file(self) -> Path:
        return self.root / "config.json"

    @property
    def scenarios(self) -> Path:
        return self.root / "scenarios"

    @property
    def models(self) -> Path:
        return self.root / "models"

    @property
    def calibration(self) -> Path:
        return self.root / "calibration"

    @property
    def calibration_file(self) -> Path:
        return self.calibration / "calibration.json"

    @property
    def residuals_file(self) -> Path:
        return self.calibration / "residuals.csv"

    @property
    def runs(self) -> Path:
        return self.root / "runs"

    @property
    def run_index(self) -> Path:
        return self.runs / "index.csv"

    @property
    def reports(self) -> Path:
        return self.root / "reports"

    @property
    def charts(self) -> Path:
        return self.root / "charts"

    @property
    def ablation(self) -> Path:
        return self.root / "ablation"

    @property
    def sweep(self) -> Path:
        return self.root / "sweep"

    def sweep_models(self, lookback: int) -> Path:
        return self.sweep / f"models_w{lookback}"


def package_versions() -> Dict[str, str]:
    """Installed versions of the packages that shape numerical results"""
    versions = {}
    for name in VERSIONED_PACKAGES:
        try:
            versions[name] = version(name)
        except PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def stage_manifest(stage: str, config: ExperimentConfig, extra: Optional[dict] = None) -> StageManifest:
    return StageManifest(
        stage=stage,
        config_hash=config.config_hash(),
        seeds=list(config.seeds),
        versions=package_versions(),
        created_utc=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        extra=dict(extra or {}),
    )


def write_manifest(
    directory: PathLike, stage: str, config: ExperimentConfig, extra: Optional[dict] = None
) -> Path:
    """Write `manifest.json` for one stage; the only place timestamps are recorded"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / MANIFEST_NAME
    path.write_text(json.dumps(stage_manifest(stage, config, extra), indent=2, sort_keys=True))
    logger.debug(f"Wrote {stage} manifest to {path}")
    return path


def read_manifest(directory: PathLike) -> StageManifest:
    """
    Raises:
        MissingArtifactError: If the stage has not written its manifest
    """
    path = Path(directory) / MANIFEST_NAME
    if not path.exists():
        raise MissingArtifactError(path)
    return json.loads(path.read_text())


def load_network(config: ExperimentConfig) -> NetworkModel:
    """
    Resolve the configured network: a builtin name or a path to an INP file.

    Raises:
        MissingArtifactError: If the INP file does not exist
        NetworkError: If the file fails to parse or validate
    """
    name = config.network
    if name.lower() == "hanoi":
        return hanoi_builtin()
    if name.lower() in BUILTIN_NETWORKS:
        return parse_inp(builtin_inp_text(name))
    path = Path(name)
    if not path.exists():
        raise MissingArtifactError(path, "network must be a builtin name or an INP file")
    logger.info(f"Loading network from {path}")
    return parse_inp(path.read_text())
