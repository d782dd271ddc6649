"""JSON model archive: one portable file per node."""

import dataclasses
import json
import logging
from pathlib import Path
from typing import Dict, Mapping

import numpy as np

from aquatwin.config import LstmHyperparams
from aquatwin.exceptions import MissingArtifactError
from aquatwin.forecasting.lstm import ForecastModel, param_names
from aquatwin.network.model import NodeId
from aquatwin.types import EpochRecord, Normalization, PathLike

logger = logging.getLogger(__name__)

INDEX_NAME = "index.json"


def model_to_dict(model: ForecastModel) -> dict:
    names = param_names(model.hyper.layers)
    return {
        "node": {"index": model.node.index, "label": model.node.label},
        "hyper": dataclasses.asdict(model.hyper),
        "seed": model.seed,
        "normalization": dict(model.normalization),
        "shapes": {name: list(model.params[name].shape) for name in names},
        "params": {name: model.params[name].ravel().tolist() for name in names},
        "train_log": [dict(record) for record in model.train_log],
    }


def model_from_dict(data: dict) -> ForecastModel:
    hyper = LstmHyperparams(**data["hyper"])
    params = {
        name: np.asarray(values, dtype=float).reshape(data["shapes"][name])
        for name, values in data["params"].items()
    }
    return ForecastModel(
        node=NodeId(int(data["node"]["index"]), str(data["node"]["label"])),
        params=params,
        normalization=Normalization(**data["normalization"]),
        hyper=hyper,
        seed=int(data["seed"]),
        train_log=[EpochRecord(**record) for record in data.get("train_log", [])],
    )


def save_model(model: ForecastModel, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_dict(model), sort_keys=True))
    return path


def load_model(path: PathLike) -> ForecastModel:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(path, "run `aquatwin train` first")
    return model_from_dict(json.loads(path.read_text()))


def model_filename(model: ForecastModel) -> str:
    return f"node_{model.node.label}.json"


def save_model_bank(models: Mapping[int, ForecastModel], directory: PathLike) -> Path:
    """
    Write every node model plus an index mapping junction position to file.

    Returns:
        Path: Index file path
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = {}
    for position in sorted(models):
        filename = model_filename(models[position])
        save_model(models[position], directory / filename)
        index[str(position)] = filename
    index_path = directory / INDEX_NAME
    index_path.write_text(json.dumps(index, indent=2, sort_keys=True))
    logger.info(f"Saved {len(index)} node models to {directory}")
    return index_path


def load_model_bank(directory: PathLike) -> Dict[int, ForecastModel]:
    """
    Raises:
        MissingArtifactError: If the index or any listed model file is missing
    """
    directory = Path(directory)
    index_path = directory / INDEX_NAME
    if not index_path.exists():
        raise MissingArtifactError(index_path, "run `aquatwin train` first")
    index = json.loads(index_path.read_text())
    return {
        int(position): load_model(directory / filename)
        for position, filename in sorted(index.items(), key=lambda item: int(item[0]))
    }
