"""
Frontier handling on the metric map: segment extraction, density clustering of frontier nodes,
and the breadth-times-depth information gain estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from loguru import logger
from scipy import ndimage
from sklearn.cluster import DBSCAN

from src.setup.config import config
from src.setup.exceptions import ParameterError
from src.world_model.metric_map import Cell, MetricMap, Occupancy, Point
from src.world_model.topo_map import TopoNode


EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class SensorModel:
    r_sense: float = config.r_sense
    long_range: float = config.long_range
    rays_per_scan: int = config.rays_per_scan

    def __post_init__(self) -> None:
        if not 0 < self.r_sense < self.long_range:
            raise ParameterError(f"Need 0 < r_sense < long_range, got {self.r_sense}, {self.long_range}")
        if self.rays_per_scan <= 0:
            raise ParameterError(f"rays_per_scan must be positive, got {self.rays_per_scan}")


@dataclass
class FrontierCluster:
    id: int
    centroid: Point
    members: list[int]
    topo_node: int
    info_gain: float
    metric_cell: Cell | None = None

    def __post_init__(self) -> None:
        if not self.members:
            raise ParameterError("A frontier cluster needs at least one member")
        if self.info_gain < 0:
            raise ParameterError(f"Information gain cannot be negative, got {self.info_gain}")


@dataclass(frozen=True)
class LongRangeAssociation:
    """
    The 8-connected components of unknown cells, and which of them contain a long-range
    indication of free space.
    """
    labels: np.ndarray
    boosted: frozenset[int] = field(default_factory=frozenset)


def frontier_mask(metric_map: MetricMap) -> np.ndarray:
    unknown = metric_map.occupancy == Occupancy.UNKNOWN
    free = metric_map.occupancy == Occupancy.FREE
    return free & ndimage.binary_dilation(unknown, structure=EIGHT_CONNECTED)


def detect_frontiers(metric_map: MetricMap, mask: np.ndarray | None = None) -> list[list[Cell]]:
    """
    Extract frontier segments: maximal 8-connected groups of free cells that touch at least one
    unknown cell.

    Args:
        metric_map: the window to search
        mask: an optional restriction; only frontier cells where the mask is True are kept

    Returns:
        list[list[Cell]]: one list of window cells (row-major order) per segment
    """
    frontier = frontier_mask(metric_map)
    if mask is not None:
        frontier &= mask

    labels, count = ndimage.label(frontier, structure=EIGHT_CONNECTED)
    segments = []
    for label in range(1, count + 1):
        cells = np.argwhere(labels == label)
        segments.append([(int(row), int(col)) for row, col in cells])

    return segments


def cluster_frontiers(
    frontier_nodes: list[TopoNode],
    eps: float = config.dbscan_eps,
    min_pts: int = config.dbscan_min_pts
) -> list[FrontierCluster]:
    """
    Group frontier nodes with DBSCAN over their positions. Noise points become singleton clusters
    so that no frontier is hidden from the planner.

    The clusters come out in DBSCAN label order followed by the promoted noise points in input
    order, and are numbered accordingly.

    Args:
        frontier_nodes: the frontier nodes of the topological map
        eps: the neighbourhood radius in meters
        min_pts: the neighbourhood size (the point itself included) that makes a core point

    Returns:
        list[FrontierCluster]: clusters with centroid, members, representative node and IG
    """
    if eps <= 0 or min_pts < 1:
        raise ParameterError(f"Need eps > 0 and min_pts >= 1, got eps={eps}, min_pts={min_pts}")

    if not frontier_nodes:
        return []

    positions = np.array([node.position for node in frontier_nodes], dtype=float)
    labels = DBSCAN(eps=eps, min_samples=min_pts).fit(positions).labels_

    groups = [np.flatnonzero(labels == label) for label in range(labels.max() + 1)]
    groups += [np.array([index]) for index in np.flatnonzero(labels == -1)]

    clusters = []
    for cluster_id, group in enumerate(groups):
        members = [frontier_nodes[index] for index in group]
        centroid = positions[group].mean(axis=0)
        representative = min(members, key=lambda node: math.dist(node.position, centroid))

        clusters.append(
            FrontierCluster(
                id=cluster_id,
                centroid=(float(centroid[0]), float(centroid[1])),
                members=[node.id for node in members],
                topo_node=representative.id,
                info_gain=float(sum(node.info_gain for node in members))
            )
        )

    logger.debug(f"Grouped {len(frontier_nodes)} frontier nodes into {len(clusters)} clusters")
    return clusters


def associate_long_range(metric_map: MetricMap) -> LongRangeAssociation:
    unknown = metric_map.occupancy == Occupancy.UNKNOWN
    labels, _ = ndimage.label(unknown, structure=EIGHT_CONNECTED)
    boosted = np.unique(labels[metric_map.long_range & unknown])
    return LongRangeAssociation(labels=labels, boosted=frozenset(int(label) for label in boosted if label > 0))


def estimate_info_gain(
    segment: list[Cell],
    metric_map: MetricMap,
    sensor: SensorModel,
    depth_boost: float = config.depth_boost,
    association: LongRangeAssociation | None = None
) -> float:
    """
    Estimate the area a frontier segment is expected to uncover: its breadth (cell count times
    resolution) times the sensing depth r_sense, multiplied by depth_boost when the unknown space
    behind it connects to a long-range indication of free space.

    Args:
        segment: the window cells of one frontier segment
        metric_map: the window the segment was detected on
        sensor: the sensor model supplying r_sense
        depth_boost: the depth factor for associated segments
        association: a precomputed association, to share between the segments of one map

    Returns:
        float: the information gain in square meters
    """
    if not segment:
        raise ParameterError("Cannot estimate the information gain of an empty segment")

    association = association or associate_long_range(metric_map)
    depth_factor = depth_boost if _is_associated(segment, metric_map, association) else 1.0
    breadth = len(segment) * metric_map.resolution
    return breadth * sensor.r_sense * depth_factor


def _is_associated(segment: list[Cell], metric_map: MetricMap, association: LongRangeAssociation) -> bool:
    if not association.boosted:
        return False

    size = metric_map.size
    for row, col in segment:
        neighbourhood = association.labels[max(row - 1, 0):min(row + 2, size), max(col - 1, 0):min(col + 2, size)]
        if any(int(label) in association.boosted for label in np.unique(neighbourhood) if label > 0):
            return True

    return False


def frontier_anchor(segment: list[Cell]) -> Cell:
    """
    The segment cell closest to the segment's mean cell position; this is where the frontier
    node of the segment is placed.
    """
    cells = np.array(segment, dtype=float)
    mean = cells.mean(axis=0)
    index = int(np.argmin(((cells - mean) ** 2).sum(axis=1)))
    return segment[index]
