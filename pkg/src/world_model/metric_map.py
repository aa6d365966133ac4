"""
The rolling metric map: a fixed-size square grid of occupancy states and traversal risks that
stays centred on the robot, together with risk-weighted shortest paths over its free cells.

Cells are addressed in two frames. Global cells (row, col) tile the world with the map's
resolution, row from y and col from x. Window cells are global cells minus the window offset.
Every public function in this module that takes a "cell" expects a window cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from src.setup.config import config
from src.setup.exceptions import DomainError, ParameterError


Cell = tuple[int, int]
Point = tuple[float, float]

# The four "forward" neighbour offsets. Together with their mirrors they form 8-connectivity.
FORWARD_OFFSETS: tuple[Cell, ...] = ((0, 1), (1, -1), (1, 0), (1, 1))


class Occupancy(IntEnum):
    UNKNOWN = -1
    FREE = 0
    OCCUPIED = 1


@dataclass
class MetricMap:
    resolution: float
    offset: Cell
    occupancy: np.ndarray
    risk: np.ndarray
    nominal_risk: np.ndarray
    long_range: np.ndarray

    @classmethod
    def empty(
        cls,
        center: Point,
        half_extent: float = config.metric_half_extent,
        resolution: float = config.resolution
    ) -> MetricMap:
        """
        Make a window of unknown cells whose centre cell contains the given world coordinate.
        """
        if half_extent <= 0 or resolution <= 0:
            raise ParameterError(f"Need half_extent > 0 and resolution > 0, got {half_extent}, {resolution}")

        size = int(round(2 * half_extent / resolution))
        return cls(
            resolution=resolution,
            offset=_offset_for_center(center=center, size=size, resolution=resolution),
            occupancy=np.full((size, size), Occupancy.UNKNOWN, dtype=np.int8),
            risk=np.ones((size, size), dtype=float),
            nominal_risk=np.ones((size, size), dtype=float),
            long_range=np.zeros((size, size), dtype=bool)
        )

    @classmethod
    def from_arrays(
        cls,
        occupancy: np.ndarray,
        risk: np.ndarray | None = None,
        resolution: float = config.resolution,
        offset: Cell = (0, 0)
    ) -> MetricMap:
        occupancy = np.asarray(occupancy, dtype=np.int8)
        if occupancy.ndim != 2 or occupancy.shape[0] != occupancy.shape[1]:
            raise ParameterError(f"A metric map is square, got shape {occupancy.shape}")

        risk = np.ones(occupancy.shape, dtype=float) if risk is None else np.asarray(risk, dtype=float).copy()
        return cls(
            resolution=resolution,
            offset=offset,
            occupancy=occupancy.copy(),
            risk=risk,
            nominal_risk=risk.copy(),
            long_range=np.zeros(occupancy.shape, dtype=bool)
        )

    @property
    def size(self) -> int:
        return self.occupancy.shape[0]

    @property
    def half_extent(self) -> float:
        return self.size * self.resolution / 2

    @property
    def center(self) -> Point:
        return (
            (self.offset[1] + self.size / 2) * self.resolution,
            (self.offset[0] + self.size / 2) * self.resolution
        )

    def copy(self) -> MetricMap:
        return MetricMap(
            resolution=self.resolution,
            offset=self.offset,
            occupancy=self.occupancy.copy(),
            risk=self.risk.copy(),
            nominal_risk=self.nominal_risk.copy(),
            long_range=self.long_range.copy()
        )

    def in_window(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.size and 0 <= cell[1] < self.size

    def is_free(self, cell: Cell) -> bool:
        return self.in_window(cell) and self.occupancy[cell] == Occupancy.FREE

    def world_to_cell(self, point: Point) -> Cell | None:
        """
        Returns:
            Cell | None: the window cell containing the point, or None outside the window.
        """
        row = math.floor(point[1] / self.resolution) - self.offset[0]
        col = math.floor(point[0] / self.resolution) - self.offset[1]
        cell = (row, col)
        return cell if self.in_window(cell) else None

    def cell_to_world(self, cell: Cell) -> Point:
        return (
            (cell[1] + self.offset[1] + 0.5) * self.resolution,
            (cell[0] + self.offset[0] + 0.5) * self.resolution
        )

    def to_global(self, cell: Cell) -> Cell:
        return cell[0] + self.offset[0], cell[1] + self.offset[1]

    def to_window(self, global_cell: Cell) -> Cell:
        return global_cell[0] - self.offset[0], global_cell[1] - self.offset[1]


def _offset_for_center(center: Point, size: int, resolution: float) -> Cell:
    return (
        math.floor(center[1] / resolution) - size // 2,
        math.floor(center[0] / resolution) - size // 2
    )


def update_metric_window(metric_map: MetricMap, new_center: Point) -> MetricMap:
    """
    Re-centre the window on a new world position. Cells that stay inside the window keep their
    state, cells that enter it are unknown, and the cell count never changes.

    Args:
        metric_map: the current window
        new_center: the world coordinate the window should be centred on

    Returns:
        MetricMap: a new map; the input is left untouched
    """
    size = metric_map.size
    new_offset = _offset_for_center(center=new_center, size=size, resolution=metric_map.resolution)
    shifted = MetricMap.empty(center=new_center, half_extent=metric_map.half_extent, resolution=metric_map.resolution)

    d_row = new_offset[0] - metric_map.offset[0]
    d_col = new_offset[1] - metric_map.offset[1]
    if abs(d_row) >= size or abs(d_col) >= size:
        return shifted

    # Overlap expressed in the old window's frame, then in the new one's
    old_rows = slice(max(d_row, 0), size + min(d_row, 0))
    old_cols = slice(max(d_col, 0), size + min(d_col, 0))
    new_rows = slice(max(-d_row, 0), size + min(-d_row, 0))
    new_cols = slice(max(-d_col, 0), size + min(-d_col, 0))

    for layer in ("occupancy", "risk", "nominal_risk", "long_range"):
        getattr(shifted, layer)[new_rows, new_cols] = getattr(metric_map, layer)[old_rows, old_cols]

    return shifted


def _shifted_slices(size: int, d_row: int, d_col: int) -> tuple[tuple[slice, slice], tuple[slice, slice]]:
    source_rows = slice(0, size - d_row)
    target_rows = slice(d_row, size)

    if d_col >= 0:
        source_cols, target_cols = slice(0, size - d_col), slice(d_col, size)
    else:
        source_cols, target_cols = slice(-d_col, size), slice(0, size + d_col)

    return (source_rows, source_cols), (target_rows, target_cols)


def traversal_graph(metric_map: MetricMap) -> coo_matrix:
    """
    Build the 8-connected graph over free cells. A step between two free cells costs its
    Euclidean length times the mean risk of its two endpoints.

    Returns:
        coo_matrix: an upper-triangular adjacency matrix over row-major window cell indices
    """
    size = metric_map.size
    free = metric_map.occupancy == Occupancy.FREE
    index = np.arange(size * size).reshape(size, size)
    sources, targets, weights = [], [], []

    for d_row, d_col in FORWARD_OFFSETS:
        (source_rows, source_cols), (target_rows, target_cols) = _shifted_slices(size, d_row, d_col)
        both_free = free[source_rows, source_cols] & free[target_rows, target_cols]
        step = metric_map.resolution * math.hypot(d_row, d_col)
        mean_risk = (metric_map.risk[source_rows, source_cols] + metric_map.risk[target_rows, target_cols]) / 2

        sources.append(index[source_rows, source_cols][both_free])
        targets.append(index[target_rows, target_cols][both_free])
        weights.append(step * mean_risk[both_free])

    return coo_matrix(
        (np.concatenate(weights), (np.concatenate(sources), np.concatenate(targets))),
        shape=(size * size, size * size)
    )


def metric_cost_field(metric_map: MetricMap, sources: list[Cell], return_predecessors: bool = False):
    """
    Run Dijkstra from several free cells at once.

    Returns:
        np.ndarray: distances of shape (len(sources), size, size), inf where unreachable. When
        return_predecessors is True, a second array holds row-major predecessor indices.
    """
    size = metric_map.size
    for cell in sources:
        if not metric_map.is_free(cell):
            raise DomainError(f"Cell {cell} is not a free cell of the metric map")

    if len(sources) == 0:
        empty = np.empty((0, size, size))
        return (empty, empty.astype(int)) if return_predecessors else empty

    indices = [row * size + col for row, col in sources]
    result = dijkstra(
        csgraph=traversal_graph(metric_map).tocsr(),
        directed=False,
        indices=indices,
        return_predecessors=return_predecessors
    )

    if return_predecessors:
        distances, predecessors = result
        return distances.reshape(len(sources), size, size), predecessors.reshape(len(sources), size, size)
    else:
        return result.reshape(len(sources), size, size)


def metric_cost(metric_map: MetricMap, start: Cell, goal: Cell) -> float:
    """
    The cost of the risk-minimised 8-connected path between two free cells.

    Returns:
        float: the cost in risk-weighted meters, math.inf when no free path exists
    """
    if not metric_map.is_free(goal):
        raise DomainError(f"Cell {goal} is not a free cell of the metric map")

    field = metric_cost_field(metric_map=metric_map, sources=[start])
    return float(field[0][goal])


def metric_route(metric_map: MetricMap, start: Cell, goal: Cell) -> list[Cell]:
    """
    Returns:
        list[Cell]: the cells of the risk-minimised path from start to goal (both included),
        or an empty list when the goal cannot be reached.
    """
    if not metric_map.is_free(goal):
        raise DomainError(f"Cell {goal} is not a free cell of the metric map")

    distances, predecessors = metric_cost_field(metric_map=metric_map, sources=[start], return_predecessors=True)
    return trace_route(distances=distances[0], predecessors=predecessors[0], start=start, goal=goal)


def trace_route(distances: np.ndarray, predecessors: np.ndarray, start: Cell, goal: Cell) -> list[Cell]:
    """
    Walk a single-source predecessor array back from the goal.

    Returns:
        list[Cell]: start to goal, or an empty list when the goal is unreachable
    """
    if not math.isfinite(distances[goal]):
        return []

    size = distances.shape[0]
    route = [goal]
    current = goal[0] * size + goal[1]
    start_index = start[0] * size + start[1]
    while current != start_index:
        current = int(predecessors.flat[current])
        route.append((int(current // size), int(current % size)))

    route.reverse()
    return route
