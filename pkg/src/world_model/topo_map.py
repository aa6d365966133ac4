"""
The global topological map. Breadcrumbs are dropped in the robot's wake and record space that
is known to be traversable; frontier nodes mark where explored space meets unexplored space.
Edge weights are computed once, when the edge is created, and never touched again.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import networkx as nx

from src.setup.exceptions import ContractError, ParameterError
from src.world_model.metric_map import Point


class NodeKind(str, Enum):
    BREADCRUMB = "breadcrumb"
    FRONTIER = "frontier"


@dataclass(frozen=True)
class TopoNode:
    id: int
    position: Point
    kind: NodeKind
    info_gain: float = 0.0


class TopoMap:
    def __init__(self) -> None:
        self.graph = nx.Graph()
        self.next_id = 0

    @property
    def nodes(self) -> list[TopoNode]:
        return [data["node"] for _, data in self.graph.nodes(data=True)]

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [(a, b, data["weight"]) for a, b, data in self.graph.edges(data=True)]

    def breadcrumbs(self) -> list[TopoNode]:
        return [node for node in self.nodes if node.kind == NodeKind.BREADCRUMB]

    def frontiers(self) -> list[TopoNode]:
        return [node for node in self.nodes if node.kind == NodeKind.FRONTIER]

    def add_node(self, position: Point, kind: NodeKind, info_gain: float = 0.0) -> TopoNode:
        node = TopoNode(id=self.next_id, position=(float(position[0]), float(position[1])), kind=kind, info_gain=info_gain)
        self.graph.add_node(node.id, node=node)
        self.next_id += 1
        return node

    def add_edge(self, a: int, b: int, weight: float) -> None:
        """
        Connect two nodes. An edge that already exists keeps its original weight.
        """
        self.node(a)
        self.node(b)

        if not (math.isfinite(weight) and weight > 0):
            raise ParameterError(f"Edge weights must be finite and positive, got {weight}")

        if a != b and not self.graph.has_edge(a, b):
            self.graph.add_edge(a, b, weight=float(weight))

    def remove_node(self, node_id: int) -> None:
        self.node(node_id)
        self.graph.remove_node(node_id)

    def node(self, node_id: int) -> TopoNode:
        if node_id not in self.graph:
            raise ContractError(f"The topological map has no node {node_id}")
        return self.graph.nodes[node_id]["node"]

    def nearest(self, position: Point, kind: NodeKind | None = None) -> TopoNode | None:
        candidates = [node for node in self.nodes if kind is None or node.kind == kind]
        if not candidates:
            return None

        return min(
            candidates,
            key=lambda node: (math.dist(node.position, position), node.id)
        )

    def distances_from(self, node_id: int) -> dict[int, float]:
        self.node(node_id)
        return nx.single_source_dijkstra_path_length(self.graph, node_id, weight="weight")

    def route(self, start: int, goal: int) -> list[int]:
        """
        Returns:
            list[int]: node ids along the shortest path, empty when the nodes are disconnected
        """
        self.node(start)
        self.node(goal)
        try:
            return nx.dijkstra_path(self.graph, start, goal, weight="weight")
        except nx.NetworkXNoPath:
            return []


def topo_cost(topo: TopoMap, start: int, goal: int) -> float:
    """
    Returns:
        float: the shortest-path distance over the frozen edge weights, math.inf if disconnected
    """
    topo.node(start)
    topo.node(goal)

    if start == goal:
        return 0.0

    try:
        return float(nx.dijkstra_path_length(topo.graph, start, goal, weight="weight"))
    except nx.NetworkXNoPath:
        return math.inf
