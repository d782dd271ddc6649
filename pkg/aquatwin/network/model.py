"""Network graph types and topology validation."""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from aquatwin.constants import FindingKind, NodeKind

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NodeId:
    """Dense integer handle plus the original INP label"""

    index: int
    label: str


@dataclass(frozen=True)
class Node:
    """
    A junction or a fixed-head source.

    Attributes:
        id (NodeId): Dense index and label
        kind (NodeKind): Junction or fixed-head source
        elevation (float): Elevation in meters
        base_demand (float): Base demand in L/s (junctions only, 0 for sources)
        fixed_head (Optional[float]): Hydraulic head in meters (sources only)
    """

    id: NodeId
    kind: NodeKind
    elevation: float
    base_demand: float = 0.0
    fixed_head: Optional[float] = None

    @property
    def is_junction(self) -> bool:
        return self.kind is NodeKind.JUNCTION


@dataclass(frozen=True)
class Pipe:
    """
    A Hazen-Williams pipe.

    Attributes:
        id (int): Dense pipe index
        label (str): Original INP label
        start (NodeId): Upstream node for the sign convention of flow
        end (NodeId): Downstream node
        length (float): Length in meters
        diameter (float): Diameter in meters
        roughness (float): Hazen-Williams C coefficient
    """

    id: int
    label: str
    start: NodeId
    end: NodeId
    length: float
    diameter: float
    roughness: float


@dataclass(frozen=True)
class NetworkModel:
    """
    Graph of junctions, fixed-head sources and pipes.

    Instances are immutable and hashable; array views are derived lazily.
    Build instances with `NetworkModel.build` so that adjacency is consistent.
    """

    nodes: Tuple[Node, ...]
    pipes: Tuple[Pipe, ...]
    adjacency: Tuple[Tuple[int, ...], ...]
    title: str = ""
    patterns: Tuple[Tuple[str, Tuple[float, ...]], ...] = ()
    demand_entries: Tuple[Tuple[str, float, str], ...] = ()
    coordinates: Tuple[Tuple[str, float, float], ...] = ()
    warnings: Tuple[str, ...] = field(default=(), compare=False)

    @classmethod
    def build(cls, nodes: Sequence[Node], pipes: Sequence[Pipe], **extras) -> "NetworkModel":
        """Create a model and derive per-node incident-pipe lists"""
        incident: List[List[int]] = [[] for _ in nodes]
        for pipe in pipes:
            for end in (pipe.start, pipe.end):
                if 0 <= end.index < len(nodes):
                    incident[end.index].append(pipe.id)
        return cls(
            nodes=tuple(nodes),
            pipes=tuple(pipes),
            adjacency=tuple(tuple(items) for items in incident),
            **extras,
        )

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_pipes(self) -> int:
        return len(self.pipes)

    @cached_property
    def junction_indices(self) -> np.ndarray:
        return np.array([n.id.index for n in self.nodes if n.is_junction], dtype=int)

    @cached_property
    def source_indices(self) -> np.ndarray:
        return np.array([n.id.index for n in self.nodes if not n.is_junction], dtype=int)

    @property
    def n_junctions(self) -> int:
        return len(self.junction_indices)

    @cached_property
    def junction_labels(self) -> Tuple[str, ...]:
        return tuple(self.nodes[i].id.label for i in self.junction_indices)

    @cached_property
    def base_demands(self) -> np.ndarray:
        """Base demand per junction, L/s, in junction order"""
        return np.array([self.nodes[i].base_demand for i in self.junction_indices])

    @cached_property
    def elevations(self) -> np.ndarray:
        return np.array([n.elevation for n in self.nodes])

    @cached_property
    def _label_index(self) -> Dict[str, int]:
        return {n.id.label: n.id.index for n in self.nodes}

    def index_of(self, label: str) -> int:
        """Dense node index for an INP label"""
        return self._label_index[label]

    def to_graph(self) -> nx.Graph:
        """Undirected networkx view used for connectivity checks"""
        graph = nx.Graph()
        graph.add_nodes_from(n.id.index for n in self.nodes)
        graph.add_edges_from((p.start.index, p.end.index) for p in self.pipes)
        return graph


@dataclass(frozen=True)
class Finding:
    """One violated network invariant"""

    kind: FindingKind
    subject: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    """Findings of `validate_network`; empty iff the topology is solvable"""

    findings: Tuple[Finding, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.findings

    def of_kind(self, kind: FindingKind) -> List[Finding]:
        return [f for f in self.findings if f.kind is kind]

    def __len__(self) -> int:
        return len(self.findings)


def _positive(value: float) -> bool:
    return math.isfinite(value) and value > 0.0


def validate_network(net: NetworkModel) -> ValidationReport:
    """
    Check a network against the model invariants.

    Args:
        net (NetworkModel): Network to check

    Returns:
        ValidationReport: Findings for disconnected nodes, missing sources,
            non-positive or non-finite attributes, self loops, duplicate labels
            and inconsistent adjacency lists

    Example:
        ```python
        report = validate_network(hanoi_builtin())
        assert report.ok
        ```
    """
    findings: List[Finding] = []

    seen = set()
    for k, node in enumerate(net.nodes):
        label = node.id.label
        if node.id.index != k:
            findings.append(
                Finding(FindingKind.INCONSISTENT_ADJACENCY, label, f"Node '{label}' has index {node.id.index}, expected {k}")
            )
        if label in seen:
            findings.append(
                Finding(FindingKind.DUPLICATE_LABEL, label, f"Duplicate node label '{label}'")
            )
        seen.add(label)
        if not math.isfinite(node.elevation):
            findings.append(
                Finding(FindingKind.NON_FINITE_ATTRIBUTE, label, f"Node '{label}' has non-finite elevation")
            )
        if node.is_junction:
            if not math.isfinite(node.base_demand):
                findings.append(
                    Finding(FindingKind.NON_FINITE_ATTRIBUTE, label, f"Junction '{label}' has non-finite demand")
                )
            elif node.base_demand < 0.0:
                findings.append(
                    Finding(FindingKind.NEGATIVE_DEMAND, label, f"Junction '{label}' has negative base demand")
                )
        elif node.fixed_head is None or not math.isfinite(node.fixed_head):
            findings.append(
                Finding(FindingKind.NON_FINITE_ATTRIBUTE, label, f"Source '{label}' has no finite head")
            )

    for pipe in net.pipes:
        for name in ("length", "diameter", "roughness"):
            value = getattr(pipe, name)
            if not _positive(value):
                findings.append(
                    Finding(
                        FindingKind.NON_POSITIVE_ATTRIBUTE,
                        pipe.label,
                        f"Pipe '{pipe.label}' has non-positive {name} ({value})",
                    )
                )
        if pipe.start.index == pipe.end.index:
            findings.append(
                Finding(FindingKind.SELF_LOOP, pipe.label, f"Pipe '{pipe.label}' starts and ends at the same node")
            )
        for end in (pipe.start, pipe.end):
            if not 0 <= end.index < net.n_nodes or pipe.id not in net.adjacency[end.index]:
                findings.append(
                    Finding(
                        FindingKind.INCONSISTENT_ADJACENCY,
                        pipe.label,
                        f"Pipe '{pipe.label}' missing from adjacency of node '{end.label}'",
                    )
                )

    sources = net.source_indices
    if len(sources) == 0:
        findings.append(Finding(FindingKind.NO_SOURCE, "", "Network has no fixed-head source"))
    elif net.n_nodes:
        reachable = nx.node_connected_component(net.to_graph(), int(sources[0]))
        for node in net.nodes:
            if node.id.index not in reachable:
                findings.append(
                    Finding(
                        FindingKind.DISCONNECTED,
                        node.id.label,
                        f"Node '{node.id.label}' is not connected to the network",
                    )
                )

    if findings:
        logger.debug(f"Validation produced {len(findings)} findings")
    return ValidationReport(tuple(findings))
