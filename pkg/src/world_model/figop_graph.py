"""
The complete multi-fidelity graph handed to the solver. Node 0 is the robot; every other node
is a frontier cluster. An edge takes the risk-weighted metric cost when both of its endpoints
have a free cell inside the metric window and a path between them exists there, and the
topological cost between their topological nodes otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from loguru import logger

from src.setup.exceptions import ContractError, ParameterError
from src.world_model.frontiers import FrontierCluster
from src.world_model.metric_map import Cell, MetricMap, Point, metric_cost_field
from src.world_model.topo_map import NodeKind, TopoMap


Fidelity = Literal["metric", "topological"]
ROOT_KEY = -1


@dataclass
class FigOpGraph:
    keys: tuple[int, ...]
    positions: np.ndarray
    info_gain: np.ndarray
    cost: np.ndarray
    fidelity: np.ndarray
    clusters: list[FrontierCluster] = field(default_factory=list)
    unreachable: list[int] = field(default_factory=list)
    root: int = 0

    def __post_init__(self) -> None:
        n = len(self.keys)
        if self.cost.shape != (n, n) or self.fidelity.shape != (n, n):
            raise ParameterError(f"Cost and fidelity matrices must be {n}x{n}, got {self.cost.shape}")
        if len(self.info_gain) != n or len(self.positions) != n:
            raise ParameterError("Every node needs one information gain value and one position")
        if not np.all(np.isfinite(self.cost)):
            raise ParameterError("Unreachable pairs must be excluded, so every cost has to be finite")
        if not np.allclose(self.cost, self.cost.T, rtol=0, atol=1e-9):
            raise ParameterError("The cost matrix must be symmetric")
        if np.any(np.diag(self.cost) != 0):
            raise ParameterError("The cost matrix must have a zero diagonal")
        if np.any(self.cost < 0) or np.any(np.asarray(self.info_gain) < 0):
            raise ParameterError("Costs and information gains cannot be negative")

    @property
    def size(self) -> int:
        return len(self.keys)

    @classmethod
    def from_matrix(
        cls,
        cost: np.ndarray | list[list[float]],
        info_gain: np.ndarray | list[float],
        positions: np.ndarray | None = None,
        fidelity: np.ndarray | None = None,
        keys: tuple[int, ...] | None = None
    ) -> FigOpGraph:
        """
        Make a graph straight from a cost matrix, node 0 being the root. Used by the instance
        reader and the tests.
        """
        cost = np.asarray(cost, dtype=float)
        n = cost.shape[0]
        return cls(
            keys=keys if keys is not None else (ROOT_KEY, *range(1, n)),
            positions=np.zeros((n, 2)) if positions is None else np.asarray(positions, dtype=float),
            info_gain=np.asarray(info_gain, dtype=float),
            cost=cost,
            fidelity=np.full((n, n), "metric", dtype=object) if fidelity is None else np.asarray(fidelity, dtype=object)
        )


def build_figop_graph(
    robot: Point,
    clusters: list[FrontierCluster],
    metric_map: MetricMap,
    topo: TopoMap,
    force_topological: bool = False
) -> FigOpGraph:
    """
    Assemble the complete graph over the robot and the frontier clusters.

    A cluster gets a metric image when its centroid lies inside the metric window and the cell
    of its representative frontier node is free. Pairs that are unreachable in both maps are
    routed through the robot; clusters the robot cannot reach at all are left out and listed in
    FigOpGraph.unreachable.

    Args:
        robot: the robot's world position
        clusters: frontier clusters, whose ids become the node keys
        metric_map: the current metric window
        topo: the topological map
        force_topological: cost every edge on the topological map

    Returns:
        FigOpGraph: the graph, root first, clusters in input order
    """
    robot_cell = metric_map.world_to_cell(robot)
    if robot_cell is None or not metric_map.is_free(robot_cell):
        raise ContractError(f"The robot at {robot} is not inside a free cell of the metric map")

    robot_crumb = topo.nearest(robot, kind=NodeKind.BREADCRUMB)
    if robot_crumb is None:
        raise ContractError("The topological map holds no breadcrumb near the robot")

    clusters = [replace(cluster, metric_cell=_metric_image(cluster, metric_map, topo)) for cluster in clusters]
    metric_images: list[Cell | None] = [robot_cell] + [cluster.metric_cell for cluster in clusters]
    topo_images = [robot_crumb.id] + [cluster.topo_node for cluster in clusters]

    n = len(topo_images)
    cost = np.full((n, n), math.inf)
    fidelity = np.full((n, n), "topological", dtype=object)
    np.fill_diagonal(cost, 0.0)

    if not force_topological:
        _fill_metric_costs(cost, fidelity, metric_images, metric_map)

    _fill_topological_costs(cost, topo_images, topo)

    reachable = [0] + [i for i in range(1, n) if math.isfinite(cost[0, i])]
    unreachable = [clusters[i - 1].id for i in range(1, n) if not math.isfinite(cost[0, i])]
    if unreachable:
        logger.warning(f"Excluding {len(unreachable)} unreachable frontier clusters: {unreachable}")

    index = np.array(reachable)
    cost = cost[np.ix_(index, index)]
    fidelity = fidelity[np.ix_(index, index)]

    # Pairs that only connect through the robot's own position
    for i, j in zip(*np.nonzero(~np.isfinite(cost))):
        cost[i, j] = cost[i, 0] + cost[0, j]
        fidelity[i, j] = "topological"

    kept = [clusters[i - 1] for i in reachable[1:]]
    return FigOpGraph(
        keys=(ROOT_KEY, *[cluster.id for cluster in kept]),
        positions=np.array([robot] + [cluster.centroid for cluster in kept], dtype=float),
        info_gain=np.array([0.0] + [cluster.info_gain for cluster in kept]),
        cost=cost,
        fidelity=fidelity,
        clusters=kept,
        unreachable=unreachable
    )


def _metric_image(cluster: FrontierCluster, metric_map: MetricMap, topo: TopoMap) -> Cell | None:
    if metric_map.world_to_cell(cluster.centroid) is None:
        return None

    cell = metric_map.world_to_cell(topo.node(cluster.topo_node).position)
    return cell if cell is not None and metric_map.is_free(cell) else None


def _fill_metric_costs(
    cost: np.ndarray,
    fidelity: np.ndarray,
    metric_images: list[Cell | None],
    metric_map: MetricMap
) -> None:
    with_image = [i for i, cell in enumerate(metric_images) if cell is not None]
    sources = sorted({metric_images[i] for i in with_image})
    field_index = {cell: k for k, cell in enumerate(sources)}
    fields = metric_cost_field(metric_map=metric_map, sources=sources)

    for a, i in enumerate(with_image):
        for j in with_image[a + 1:]:
            value = float(fields[field_index[metric_images[i]]][metric_images[j]])
            if math.isfinite(value):
                cost[i, j] = cost[j, i] = value
                fidelity[i, j] = fidelity[j, i] = "metric"


def _fill_topological_costs(cost: np.ndarray, topo_images: list[int], topo: TopoMap) -> None:
    n = len(topo_images)
    for i in range(n):
        distances = topo.distances_from(topo_images[i])
        for j in range(i + 1, n):
            if math.isfinite(cost[i, j]):
                continue
            value = 0.0 if topo_images[i] == topo_images[j] else distances.get(topo_images[j], math.inf)
            cost[i, j] = cost[j, i] = value
