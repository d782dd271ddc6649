"""Network model module for aquatwin."""

from aquatwin.network.fixtures import builtin_inp_text, hanoi_builtin
from aquatwin.network.inp import parse_inp, serialize_inp
from aquatwin.network.model import (
    Finding,
    NetworkModel,
    Node,
    NodeId,
    Pipe,
    ValidationReport,
    validate_network,
)

__all__ = [
    "Finding",
    "NetworkModel",
    "Node",
    "NodeId",
    "Pipe",
    "ValidationReport",
    "builtin_inp_text",
    "hanoi_builtin",
    "parse_inp",
    "serialize_inp",
    "validate_network",
]
