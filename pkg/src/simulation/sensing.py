"""
Simulated sensing and world-model upkeep: ray casting against the ground truth, breadcrumb
dropping, and the replacement of in-window frontier nodes after every scan.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy import ndimage

from src.setup.config import config
from src.simulation.environments import Environment
from src.world_model.frontiers import (
    EIGHT_CONNECTED, SensorModel, associate_long_range, detect_frontiers, estimate_info_gain, frontier_anchor
)
from src.world_model.metric_map import MetricMap, Occupancy, Point, metric_cost_field, update_metric_window
from src.world_model.topo_map import NodeKind, TopoMap


@dataclass
class RobotState:
    position: Point
    heading: float = 0.0
    speed: float = config.speed
    odometer: float = 0.0
    elapsed: float = 0.0


@dataclass
class WorldModel:
    """
    The robot's knowledge: the rolling metric window, the topological map, and a world-anchored
    memory of which ground-truth cells have ever been observed (and which of those were free).
    """
    metric: MetricMap
    topo: TopoMap
    observed: np.ndarray
    covered: np.ndarray
    last_breadcrumb: int | None = None
    depth_boost: float = config.depth_boost
    frontier_links: int = config.frontier_links

    @classmethod
    def start(cls, env: Environment, position: Point, half_extent: float = config.metric_half_extent) -> WorldModel:
        return cls(
            metric=MetricMap.empty(center=position, half_extent=half_extent, resolution=env.resolution),
            topo=TopoMap(),
            observed=np.zeros(env.shape, dtype=bool),
            covered=np.zeros(env.shape, dtype=bool)
        )

    @property
    def coverage(self) -> float:
        return float(np.count_nonzero(self.covered)) * self.metric.resolution ** 2

    def window_memory(self, memory: np.ndarray, outside: bool = False) -> np.ndarray:
        """
        Cut the window's view out of a world-anchored layer. Cells outside the world read `outside`.
        """
        size = self.metric.size
        rows = np.arange(size) + self.metric.offset[0]
        cols = np.arange(size) + self.metric.offset[1]
        inside_rows = (rows >= 0) & (rows < memory.shape[0])
        inside_cols = (cols >= 0) & (cols < memory.shape[1])

        view = np.full((size, size), outside, dtype=memory.dtype)
        view[np.ix_(inside_rows, inside_cols)] = memory[np.ix_(rows[inside_rows], cols[inside_cols])]
        return view


def cast_rays(env: Environment, position: Point, sensor: SensorModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    March rays_per_scan rays outwards in steps of a quarter cell. A ray stops at the first
    occupied cell (or at the edge of the world).

    Returns:
        tuple of three (k, 2) integer arrays of global cells: free cells seen within r_sense,
        blocking cells within r_sense, and free cells seen beyond r_sense up to long_range
    """
    step = env.resolution / 4
    distances = np.arange(0.0, sensor.long_range + step / 2, step)
    angles = np.linspace(0.0, 2 * math.pi, sensor.rays_per_scan, endpoint=False)

    xs = position[0] + np.outer(np.cos(angles), distances)
    ys = position[1] + np.outer(np.sin(angles), distances)
    rows = np.floor(ys / env.resolution).astype(int)
    cols = np.floor(xs / env.resolution).astype(int)

    inside = (rows >= 0) & (rows < env.shape[0]) & (cols >= 0) & (cols < env.shape[1])
    blocked = np.ones(rows.shape, dtype=bool)
    blocked[inside] = env.occupancy[rows[inside], cols[inside]] != Occupancy.FREE

    first_block = np.where(blocked.any(axis=1), blocked.argmax(axis=1), len(distances))
    sample = np.arange(len(distances))
    before_block = sample[None, :] < first_block[:, None]
    near = distances[None, :] <= sensor.r_sense

    hit_rows = np.arange(len(angles))[first_block < len(distances)]
    hit_samples = first_block[first_block < len(distances)]
    hit_near = distances[hit_samples] <= sensor.r_sense
    hits = np.stack([rows[hit_rows, hit_samples], cols[hit_rows, hit_samples]], axis=1)[hit_near]
    hits = hits[(hits[:, 0] >= 0) & (hits[:, 0] < env.shape[0]) & (hits[:, 1] >= 0) & (hits[:, 1] < env.shape[1])]

    def unique_cells(mask: np.ndarray) -> np.ndarray:
        cells = np.stack([rows[mask], cols[mask]], axis=1)
        return np.unique(cells, axis=0) if len(cells) else cells.reshape(0, 2)

    hits = np.unique(hits, axis=0) if len(hits) else hits
    return unique_cells(before_block & near), hits, unique_cells(before_block & ~near)


def sense(env: Environment, robot: RobotState, sensor: SensorModel, world: WorldModel) -> WorldModel:
    """
    Take one scan from the robot's position and fold it into the world model: re-centre the
    window, mark what the rays saw, drop a breadcrumb if due, and replace the frontier nodes
    inside the window with freshly detected ones.

    Args:
        env: the ground truth
        robot: the robot, which must stand in a free cell
        sensor: the sensor model
        world: the robot's world model, updated in place

    Returns:
        WorldModel: the same world model
    """
    world.metric = update_metric_window(world.metric, robot.position)
    metric = world.metric

    free, occupied, distant = cast_rays(env=env, position=robot.position, sensor=sensor)
    world.observed[free[:, 0], free[:, 1]] = True
    world.observed[occupied[:, 0], occupied[:, 1]] = True
    world.covered[free[:, 0], free[:, 1]] = True

    _mark(metric, free, env, Occupancy.FREE)
    _mark(metric, occupied, env, Occupancy.OCCUPIED)
    _mark_long_range(metric, distant)

    _drop_breadcrumb(world, robot.position)
    _refresh_frontiers(world, sensor)
    return world


def _window_cells(metric: MetricMap, global_cells: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rows = global_cells[:, 0] - metric.offset[0]
    cols = global_cells[:, 1] - metric.offset[1]
    inside = (rows >= 0) & (rows < metric.size) & (cols >= 0) & (cols < metric.size)
    return rows[inside], cols[inside]


def _mark(metric: MetricMap, global_cells: np.ndarray, env: Environment, state: Occupancy) -> None:
    rows, cols = _window_cells(metric, global_cells)
    if state == Occupancy.FREE:
        nominal = env.risk[rows + metric.offset[0], cols + metric.offset[1]]
        newly_free = metric.occupancy[rows, cols] != Occupancy.FREE
        metric.nominal_risk[rows, cols] = nominal
        metric.risk[rows, cols] = np.where(newly_free, nominal, metric.risk[rows, cols])

    metric.occupancy[rows, cols] = state
    metric.long_range[rows, cols] = False


def _mark_long_range(metric: MetricMap, global_cells: np.ndarray) -> None:
    rows, cols = _window_cells(metric, global_cells)
    unknown = metric.occupancy[rows, cols] == Occupancy.UNKNOWN
    metric.long_range[rows[unknown], cols[unknown]] = True


def _drop_breadcrumb(world: WorldModel, position: Point) -> None:
    if world.last_breadcrumb is not None:
        last = world.topo.node(world.last_breadcrumb)
        if math.dist(last.position, position) < config.breadcrumb_spacing:
            return

    metric = world.metric
    cell = metric.world_to_cell(position)
    crumb = world.topo.add_node(position=metric.cell_to_world(cell), kind=NodeKind.BREADCRUMB)

    field = metric_cost_field(metric_map=metric, sources=[cell])[0]
    for other in world.topo.breadcrumbs():
        if other.id == crumb.id or math.dist(other.position, crumb.position) > config.breadcrumb_link_radius:
            continue

        other_cell = metric.world_to_cell(other.position)
        if other_cell is None:
            continue

        weight = float(field[other_cell])
        if math.isfinite(weight) and weight > 0:
            world.topo.add_edge(crumb.id, other.id, weight)

    if world.last_breadcrumb is not None and not world.topo.graph.has_edge(crumb.id, world.last_breadcrumb):
        # Keep the stretch just travelled connected
        previous = world.topo.node(world.last_breadcrumb)
        world.topo.add_edge(crumb.id, previous.id, max(math.dist(previous.position, crumb.position), metric.resolution))

    world.last_breadcrumb = crumb.id


def _refresh_frontiers(world: WorldModel, sensor: SensorModel) -> None:
    metric = world.metric
    for node in world.topo.frontiers():
        if metric.world_to_cell(node.position) is not None:
            world.topo.remove_node(node.id)

    # Frontiers facing cells that were seen before but have since left the window are stale
    unknown = metric.occupancy == Occupancy.UNKNOWN
    never_observed = unknown & ~world.window_memory(world.observed, outside=True)
    mask = ndimage.binary_dilation(never_observed, structure=EIGHT_CONNECTED)

    segments = detect_frontiers(metric, mask=mask)
    if not segments:
        return

    association = associate_long_range(metric)
    anchors = [frontier_anchor(segment) for segment in segments]
    fields = metric_cost_field(metric_map=metric, sources=sorted(set(anchors)))
    field_of = {cell: index for index, cell in enumerate(sorted(set(anchors)))}

    crumbs = [
        (crumb, metric.world_to_cell(crumb.position))
        for crumb in world.topo.breadcrumbs()
        if metric.world_to_cell(crumb.position) is not None
    ]

    for segment, anchor in zip(segments, anchors):
        field = fields[field_of[anchor]]
        reachable = sorted(
            (float(field[cell]), crumb.id) for crumb, cell in crumbs if math.isfinite(field[cell])
        )[:world.frontier_links]

        if not reachable:
            logger.debug(f"Skipping a frontier at {anchor} with no breadcrumb in reach")
            continue

        info_gain = estimate_info_gain(segment, metric, sensor, depth_boost=world.depth_boost, association=association)
        node = world.topo.add_node(position=metric.cell_to_world(anchor), kind=NodeKind.FRONTIER, info_gain=info_gain)
        for weight, crumb_id in reachable:
            world.topo.add_edge(node.id, crumb_id, max(weight, metric.resolution / 2))
