"""EPANET 2.x INP reader and writer for the junction/source/pipe subset."""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from aquatwin.constants import NodeKind
from aquatwin.exceptions import (
    DanglingPipeEndpointError,
    DuplicateLabelError,
    MalformedSectionError,
    NetworkValidationError,
    NoSourceError,
    UnsupportedElementError,
)
from aquatwin.network.model import NetworkModel, Node, NodeId, Pipe, validate_network

logger = logging.getLogger(__name__)

MM_PER_M = 1000.0

_KNOWN_SECTIONS = {
    "TITLE",
    "JUNCTIONS",
    "RESERVOIRS",
    "TANKS",
    "PIPES",
    "PATTERNS",
    "DEMANDS",
    "COORDINATES",
    "OPTIONS",
    "END",
}
_REJECTED_SECTIONS = {"PUMPS", "VALVES"}


@dataclass
class _ParseState:
    nodes: List[Node] = field(default_factory=list)
    labels: Dict[str, int] = field(default_factory=dict)
    # (label, start label, end label, length, diameter mm, roughness, line)
    raw_pipes: List[Tuple[str, str, str, float, float, float, int]] = field(
        default_factory=list
    )
    title: List[str] = field(default_factory=list)
    patterns: Dict[str, List[float]] = field(default_factory=dict)
    demand_entries: List[Tuple[str, float, str]] = field(default_factory=list)
    coordinates: List[Tuple[str, float, float]] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)


def _floats(parts: List[str], section: str, line_number: int) -> List[float]:
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise MalformedSectionError(
            section, line_number, f"expected numbers, got {' '.join(parts)}"
        ) from None
    if not all(math.isfinite(v) for v in values):
        raise MalformedSectionError(section, line_number, "non-finite value")
    return values


def _need(parts: List[str], count: int, section: str, line_number: int) -> None:
    if len(parts) < count:
        raise MalformedSectionError(
            section, line_number, f"expected at least {count} columns, got {len(parts)}"
        )


def _add_node(state: _ParseState, node_kwargs: dict, label: str, line_number: int) -> None:
    if label in state.labels:
        raise DuplicateLabelError(label, line_number)
    index = len(state.nodes)
    state.labels[label] = index
    state.nodes.append(Node(id=NodeId(index, label), **node_kwargs))


def _parse_line(state: _ParseState, section: str, parts: List[str], raw: str, line_number: int) -> None:
    if section == "TITLE":
        state.title.append(raw.strip())
    elif section == "JUNCTIONS":
        _need(parts, 2, section, line_number)
        values = _floats(parts[1:3], section, line_number)
        demand = values[1] if len(values) > 1 else 0.0
        _add_node(
            state,
            {"kind": NodeKind.JUNCTION, "elevation": values[0], "base_demand": demand},
            parts[0],
            line_number,
        )
    elif section == "RESERVOIRS":
        _need(parts, 2, section, line_number)
        (head,) = _floats(parts[1:2], section, line_number)
        _add_node(
            state,
            {"kind": NodeKind.FIXED_HEAD, "elevation": head, "fixed_head": head},
            parts[0],
            line_number,
        )
    elif section == "TANKS":
        _need(parts, 3, section, line_number)
        elevation, level = _floats(parts[1:3], section, line_number)
        _add_node(
            state,
            {
                "kind": NodeKind.FIXED_HEAD,
                "elevation": elevation,
                "fixed_head": elevation + level,
            },
            parts[0],
            line_number,
        )
    elif section == "PIPES":
        _need(parts, 6, section, line_number)
        length, diameter, roughness = _floats(parts[3:6], section, line_number)
        if len(parts) > 7 and parts[7].upper() == "CLOSED":
            state.warnings.append(
                f"Pipe '{parts[0]}' is closed in the file; simulated as open"
            )
        state.raw_pipes.append(
            (parts[0], parts[1], parts[2], length, diameter, roughness, line_number)
        )
    elif section == "PATTERNS":
        _need(parts, 2, section, line_number)
        state.patterns.setdefault(parts[0], []).extend(
            _floats(parts[1:], section, line_number)
        )
    elif section == "DEMANDS":
        _need(parts, 2, section, line_number)
        (demand,) = _floats(parts[1:2], section, line_number)
        pattern = parts[2] if len(parts) > 2 else ""
        state.demand_entries.append((parts[0], demand, pattern))
    elif section == "COORDINATES":
        _need(parts, 3, section, line_number)
        x, y = _floats(parts[1:3], section, line_number)
        state.coordinates.append((parts[0], x, y))
    elif section == "OPTIONS":
        if len(parts) >= 2 and parts[0].upper() == "UNITS" and parts[1].upper() != "LPS":
            state.warnings.append(
                f"Flow units {parts[1]} declared; values are interpreted as LPS"
            )


def parse_inp(text: str) -> NetworkModel:
    """
    Parse EPANET INP text into a validated network.

    Args:
        text (str): INP file contents. Units are interpreted as LPS/SI with pipe
            diameters in millimeters.

    Returns:
        NetworkModel: Network with nodes indexed by first appearance in the file.
            Skipped sections are listed in `NetworkModel.warnings`.

    Raises:
        MalformedSectionError: A line has missing or non-numeric columns
        DuplicateLabelError: A node or pipe label is declared twice
        DanglingPipeEndpointError: A pipe references an undeclared node
        NoSourceError: Neither reservoirs nor tanks are declared
        UnsupportedElementError: Pumps or valves are present
        NetworkValidationError: The topology is not solvable (e.g. disconnected)

    Example:
        ```python
        net = parse_inp(Path("net.inp").read_text())
        print(net.n_junctions, net.n_pipes)
        ```
    """
    state = _ParseState()
    section: Optional[str] = None
    skipped = set()

    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        content = raw_line.split(";", 1)[0]
        stripped = content.strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise MalformedSectionError(stripped, line_number, "unterminated header")
            section = stripped[1:-1].strip().upper()
            if section == "END":
                break
            if section not in _KNOWN_SECTIONS and section not in _REJECTED_SECTIONS:
                if section not in skipped:
                    state.warnings.append(f"Skipped unsupported section [{section}]")
                    skipped.add(section)
            continue
        if section is None:
            raise MalformedSectionError("<none>", line_number, "data before any section header")
        if section in _REJECTED_SECTIONS:
            raise UnsupportedElementError(section, line_number)
        if section in skipped:
            continue
        _parse_line(state, section, stripped.split(), content, line_number)

    if not any(n.kind is NodeKind.FIXED_HEAD for n in state.nodes):
        raise NoSourceError()

    pipes: List[Pipe] = []
    pipe_labels = set()
    for label, start, end, length, diameter_mm, roughness, line_number in state.raw_pipes:
        if label in pipe_labels:
            raise DuplicateLabelError(label, line_number)
        pipe_labels.add(label)
        for endpoint in (start, end):
            if endpoint not in state.labels:
                logger.error(f"Pipe '{label}' references undefined node '{endpoint}'")
                raise DanglingPipeEndpointError(label, endpoint)
        pipes.append(
            Pipe(
                id=len(pipes),
                label=label,
                start=state.nodes[state.labels[start]].id,
                end=state.nodes[state.labels[end]].id,
                length=length,
                diameter=diameter_mm / MM_PER_M,
                roughness=roughness,
            )
        )

    for message in state.warnings:
        logger.warning(message)

    net = NetworkModel.build(
        state.nodes,
        pipes,
        title="\n".join(t for t in state.title if t),
        patterns=tuple((k, tuple(v)) for k, v in state.patterns.items()),
        demand_entries=tuple(state.demand_entries),
        coordinates=tuple(state.coordinates),
        warnings=tuple(state.warnings),
    )
    report = validate_network(net)
    if not report.ok:
        raise NetworkValidationError(report)
    return net


def _fmt(value: float) -> str:
    return repr(float(value))


def _section_of(node: Node) -> str:
    if node.is_junction:
        return "[JUNCTIONS]"
    if node.fixed_head > node.elevation:
        return "[TANKS]"
    return "[RESERVOIRS]"


def serialize_inp(net: NetworkModel) -> str:
    """
    Write a network back to INP text.

    Sources whose head sits above their elevation are written as tanks at a
    fixed level (initial, minimum and maximum level equal), the others as
    reservoirs. Tank heads come back as elevation plus level, exact up to
    float rounding; everything else in the supported subset round-trips
    through `parse_inp`.
    """
    lines: List[str] = []
    if net.title:
        lines.append("[TITLE]")
        lines.extend(net.title.splitlines())
        lines.append("")

    # Emit nodes in index order, switching section headers as the kind changes,
    # so that first-appearance indexing is preserved on re-parse
    current = None
    for node in net.nodes:
        header = _section_of(node)
        if header != current:
            if current is not None:
                lines.append("")
            lines.append(header)
            current = header
        if node.is_junction:
            lines.append(f"{node.id.label}\t{_fmt(node.elevation)}\t{_fmt(node.base_demand)}")
        elif header == "[TANKS]":
            level = _fmt(node.fixed_head - node.elevation)
            lines.append(
                "\t".join([node.id.label, _fmt(node.elevation), level, level, level, "0"])
            )
        else:
            lines.append(f"{node.id.label}\t{_fmt(node.fixed_head)}")
    lines.append("")

    lines.append("[PIPES]")
    for pipe in net.pipes:
        lines.append(
            "\t".join(
                [
                    pipe.label,
                    pipe.start.label,
                    pipe.end.label,
                    _fmt(pipe.length),
                    _fmt(pipe.diameter * MM_PER_M),
                    _fmt(pipe.roughness),
                    "0",
                    "Open",
                ]
            )
        )
    lines.append("")

    if net.patterns:
        lines.append("[PATTERNS]")
        for label, multipliers in net.patterns:
            lines.append("\t".join([label] + [_fmt(m) for m in multipliers]))
        lines.append("")

    if net.demand_entries:
        lines.append("[DEMANDS]")
        for label, demand, pattern in net.demand_entries:
            lines.append("\t".join(filter(None, [label, _fmt(demand), pattern])))
        lines.append("")

    if net.coordinates:
        lines.append("[COORDINATES]")
        for label, x, y in net.coordinates:
            lines.append(f"{label}\t{_fmt(x)}\t{_fmt(y)}")
        lines.append("")

    lines.append("[END]")
    return "\n".join(lines) + "\n"
