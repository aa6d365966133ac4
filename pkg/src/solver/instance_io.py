"""
Standalone instance files, one record per line:

    figop v1 <n> <budget>
    <id> <ig> <x> <y>            node lines, ids 1..n (a line for the root, id 0, is optional)
    <i> <j> <cost> <fidelity>    one cost line per unordered pair of nodes 0..n

Fidelity is "metric" or "topological". Anything after a '#' is a comment.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from src.setup.exceptions import InstanceParseError
from src.world_model.figop_graph import FigOpGraph


FIDELITIES = ("metric", "topological")


def instance_to_text(graph: FigOpGraph, budget: float) -> str:
    n = graph.size - 1
    lines = [f"figop v1 {n} {budget:.10g}"]

    for node in range(graph.size):
        x, y = graph.positions[node]
        lines.append(f"{node} {graph.info_gain[node]:.10g} {x:.10g} {y:.10g}")

    for i in range(graph.size):
        for j in range(i + 1, graph.size):
            lines.append(f"{i} {j} {graph.cost[i, j]:.17g} {graph.fidelity[i, j]}")

    return "\n".join(lines) + "\n"


def write_instance(path: Path, graph: FigOpGraph, budget: float) -> None:
    Path(path).write_text(instance_to_text(graph=graph, budget=budget))


def read_instance(path: Path) -> tuple[FigOpGraph, float]:
    return text_to_instance(Path(path).read_text())


def _number(token: str, line: int, column: int, kind: type = float):
    try:
        value = kind(token)
    except ValueError as error:
        raise InstanceParseError(f"expected a number, found {token!r}", line=line, column=column) from error

    if not math.isfinite(value):
        raise InstanceParseError(f"expected a finite number, found {token!r}", line=line, column=column)
    return value


def text_to_instance(text: str) -> tuple[FigOpGraph, float]:
    """
    Parse an instance.

    Returns:
        tuple[FigOpGraph, float]: the graph (node 0 is the root) and the budget

    Raises:
        InstanceParseError: naming the line (and column) of the first problem found
    """
    records = []
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        if content.strip():
            records.append((number, content.split()))

    if not records:
        raise InstanceParseError("missing header 'figop v1 n budget'", line=1)

    header_line, header = records[0]
    if len(header) != 4 or header[0] != "figop" or header[1] != "v1":
        raise InstanceParseError("expected header 'figop v1 n budget'", line=header_line)

    n = _number(header[2], header_line, column=3, kind=int)
    budget = _number(header[3], header_line, column=4)
    if n < 0 or budget <= 0:
        raise InstanceParseError("n must be non-negative and the budget positive", line=header_line)

    size = n + 1
    info_gain = np.zeros(size)
    positions = np.zeros((size, 2))
    cost = np.zeros((size, size))
    fidelity = np.full((size, size), "metric", dtype=object)
    seen_nodes: set[int] = set()
    seen_pairs: set[tuple[int, int]] = set()

    for line, tokens in records[1:]:
        if len(tokens) != 4:
            raise InstanceParseError(f"expected 4 fields, found {len(tokens)}", line=line)

        if tokens[3] in FIDELITIES:
            i = _number(tokens[0], line, column=1, kind=int)
            j = _number(tokens[1], line, column=2, kind=int)
            value = _number(tokens[2], line, column=3)

            if not (0 <= i < size and 0 <= j < size) or i == j:
                raise InstanceParseError(f"invalid node pair ({i}, {j})", line=line)
            if value < 0:
                raise InstanceParseError(f"negative cost {value}", line=line, column=3)

            pair = (min(i, j), max(i, j))
            if pair in seen_pairs:
                raise InstanceParseError(f"duplicate cost line for pair {pair}", line=line)

            seen_pairs.add(pair)
            cost[i, j] = cost[j, i] = value
            fidelity[i, j] = fidelity[j, i] = tokens[3]
        else:
            node = _number(tokens[0], line, column=1, kind=int)
            if not 0 <= node < size:
                raise InstanceParseError(f"node id {node} outside 0..{n}", line=line)
            if node in seen_nodes:
                raise InstanceParseError(f"duplicate node {node}", line=line)

            gain = _number(tokens[1], line, column=2)
            if gain < 0:
                raise InstanceParseError(f"negative information gain {gain}", line=line, column=2)
            if node == 0 and gain != 0:
                raise InstanceParseError("the root carries no information gain", line=line, column=2)

            seen_nodes.add(node)
            info_gain[node] = gain
            positions[node] = (_number(tokens[2], line, column=3), _number(tokens[3], line, column=4))

    end = records[-1][0] + 1
    missing_nodes = sorted(set(range(1, size)) - seen_nodes)
    if missing_nodes:
        raise InstanceParseError(f"missing node lines for {missing_nodes}", line=end)

    missing_pairs = [(i, j) for i in range(size) for j in range(i + 1, size) if (i, j) not in seen_pairs]
    if missing_pairs:
        raise InstanceParseError(f"missing cost lines for {len(missing_pairs)} pairs, first {missing_pairs[0]}", line=end)

    graph = FigOpGraph.from_matrix(cost=cost, info_gain=info_gain, positions=positions, fidelity=fidelity)
    return graph, budget
