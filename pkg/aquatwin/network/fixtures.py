"""Builtin benchmark networks shipped as package data."""

import logging
from functools import lru_cache
from importlib import resources

from aquatwin.network.inp import parse_inp
from aquatwin.network.model import NetworkModel

logger = logging.getLogger(__name__)

BUILTIN_NETWORKS = {"hanoi": "hanoi.inp"}


def builtin_inp_text(name: str) -> str:
    """Raw INP text of a builtin network"""
    try:
        filename = BUILTIN_NETWORKS[name.lower()]
    except KeyError:
        raise KeyError(f"Unknown builtin network '{name}'") from None
    data_dir = resources.files("aquatwin.network").joinpath("data")
    return data_dir.joinpath(filename).read_text()


@lru_cache(maxsize=None)
def hanoi_builtin() -> NetworkModel:
    """
    The Hanoi benchmark: one reservoir at 100 m, 31 demand junctions, 34 pipes.

    Returns:
        NetworkModel: The same immutable instance on every call
    """
    net = parse_inp(builtin_inp_text("hanoi"))
    logger.debug(f"Loaded Hanoi fixture: {net.n_nodes} nodes, {net.n_pipes} pipes")
    return net
