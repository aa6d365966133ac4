"""
Ground-truth worlds for the simulator: randomized depth-first-search mazes, subway-like layouts
of rooms joined by corridors, a cross-shaped corridor junction, a single open room, and grids
loaded from text files.

Environment grids use the world frame directly: cell (row, col) covers
x in [col, col + 1) * resolution and y in [row, row + 1) * resolution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
from loguru import logger
from scipy import ndimage
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial.distance import pdist, squareform

from src.setup.config import config
from src.setup.exceptions import ParameterError, ScenarioError
from src.world_model.grid_io import read_grid
from src.world_model.metric_map import Cell, Occupancy, Point


@dataclass(frozen=True)
class Rect:
    """A block of cells, end-exclusive."""
    row0: int
    col0: int
    row1: int
    col1: int

    @property
    def cells(self) -> int:
        return max(self.row1 - self.row0, 0) * max(self.col1 - self.col0, 0)

    @property
    def center(self) -> Cell:
        return (self.row0 + self.row1) // 2, (self.col0 + self.col1) // 2

    def carve(self, grid: np.ndarray) -> None:
        grid[self.row0:self.row1, self.col0:self.col1] = Occupancy.FREE


@dataclass
class Environment:
    occupancy: np.ndarray
    risk: np.ndarray
    start: Cell
    resolution: float
    descriptor: dict[str, Any]
    rooms: list[Rect] = field(default_factory=list)
    corridors: list[list[Rect]] = field(default_factory=list)
    lattice: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.occupancy[self.start] != Occupancy.FREE:
            raise ParameterError(f"The start cell {self.start} is not free")

        free = self.occupancy == Occupancy.FREE
        labels, count = ndimage.label(free, structure=np.ones((3, 3), dtype=bool))
        if count != 1:
            raise ParameterError(f"The free cells of an environment must be connected, found {count} components")

    @property
    def shape(self) -> tuple[int, int]:
        return self.occupancy.shape

    @property
    def free_area(self) -> float:
        return float(np.count_nonzero(self.occupancy == Occupancy.FREE)) * self.resolution ** 2

    @property
    def start_position(self) -> Point:
        return (self.start[1] + 0.5) * self.resolution, (self.start[0] + 0.5) * self.resolution

    def is_free(self, cell: Cell) -> bool:
        rows, cols = self.shape
        return 0 <= cell[0] < rows and 0 <= cell[1] < cols and self.occupancy[cell] == Occupancy.FREE

    def cell_of(self, point: Point) -> Cell:
        return math.floor(point[1] / self.resolution), math.floor(point[0] / self.resolution)


def _meters_to_cells(meters: float, resolution: float) -> int:
    return max(int(round(meters / resolution)), 1)


def _risk_field(occupancy: np.ndarray, rng: np.random.Generator, resolution: float, patches: int) -> np.ndarray:
    """
    Nominal risk is 1 everywhere, raised inside a few square patches of rough ground.
    """
    risk = np.ones(occupancy.shape, dtype=float)
    rows, cols = occupancy.shape

    for _ in range(patches):
        side = _meters_to_cells(rng.uniform(2.0, 6.0), resolution)
        row = int(rng.integers(0, max(rows - side, 1)))
        col = int(rng.integers(0, max(cols - side, 1)))
        risk[row:row + side, col:col + side] = rng.uniform(2.0, 6.0)

    return np.clip(risk, config.min_risk, config.max_risk)


def generate_maze(
    seed: int,
    width: int,
    height: int,
    corridor_width: float = 2.5,
    loop_fraction: float = 0.0,
    resolution: float = config.resolution
) -> Environment:
    """
    Carve a maze over a width x height lattice with randomized depth-first search, then widen
    each lattice cell to corridor_width meters. Walls stay one grid cell thick.

    Args:
        seed: the generator seed
        width: lattice columns
        height: lattice rows
        corridor_width: passage width in meters
        loop_fraction: the share of the remaining interior walls to knock out, creating loops
        resolution: meters per grid cell

    Returns:
        Environment: the maze, starting in the lattice cell at the origin
    """
    if width < 1 or height < 1 or corridor_width <= 0 or not 0 <= loop_fraction <= 1:
        raise ParameterError(f"Invalid maze dimensions {width}x{height}, corridor {corridor_width}, loops {loop_fraction}")

    rng = np.random.default_rng(seed)
    lattice = np.full((2 * height + 1, 2 * width + 1), Occupancy.OCCUPIED, dtype=np.int8)
    directions = [(-1, 0), (1, 0), (0, -1), (0, 1)]

    stack = [(0, 0)]
    visited = {(0, 0)}
    lattice[1, 1] = Occupancy.FREE

    while stack:
        row, col = stack[-1]
        options = [
            (row + d_row, col + d_col)
            for d_row, d_col in directions
            if 0 <= row + d_row < height and 0 <= col + d_col < width and (row + d_row, col + d_col) not in visited
        ]

        if options:
            next_row, next_col = options[int(rng.integers(len(options)))]
            lattice[row + next_row + 1, col + next_col + 1] = Occupancy.FREE
            lattice[2 * next_row + 1, 2 * next_col + 1] = Occupancy.FREE
            visited.add((next_row, next_col))
            stack.append((next_row, next_col))
        else:
            stack.pop()

    if loop_fraction > 0:
        interior_walls = [
            (row, col)
            for row in range(1, 2 * height)
            for col in range(1, 2 * width)
            if (row + col) % 2 == 1 and lattice[row, col] == Occupancy.OCCUPIED
        ]
        knocked = rng.choice(len(interior_walls), size=int(loop_fraction * len(interior_walls)), replace=False)
        for index in sorted(knocked):
            lattice[interior_walls[index]] = Occupancy.FREE

    passage = _meters_to_cells(corridor_width, resolution)
    row_repeats = [passage if index % 2 else 1 for index in range(lattice.shape[0])]
    col_repeats = [passage if index % 2 else 1 for index in range(lattice.shape[1])]
    occupancy = np.repeat(np.repeat(lattice, row_repeats, axis=0), col_repeats, axis=1)

    start = (1 + passage // 2, 1 + passage // 2)
    logger.debug(f"Generated a {width}x{height} maze with seed {seed}")

    return Environment(
        occupancy=occupancy,
        risk=_risk_field(occupancy, rng, resolution, patches=width * height // 20),
        start=start,
        resolution=resolution,
        descriptor={"kind": "maze", "seed": seed, "width": width, "height": height,
                    "corridor_width": corridor_width, "loop_fraction": loop_fraction},
        lattice=lattice
    )


def lattice_degrees(lattice: np.ndarray) -> np.ndarray:
    """
    Count the open passages of every maze lattice cell.

    Returns:
        np.ndarray: a (height, width) array of degrees
    """
    height, width = (lattice.shape[0] - 1) // 2, (lattice.shape[1] - 1) // 2
    degrees = np.zeros((height, width), dtype=int)
    for row in range(height):
        for col in range(width):
            r, c = 2 * row + 1, 2 * col + 1
            degrees[row, col] = sum(
                lattice[r + d_row, c + d_col] == Occupancy.FREE
                for d_row, d_col in ((-1, 0), (1, 0), (0, -1), (0, 1))
            )
    return degrees


SLOT_SIZE = 36.0


def _l_corridor(a: Cell, b: Cell, half_width: int, rows: int, cols: int) -> list[Rect]:
    """An L-shaped corridor: along a's row to b's column, then along b's column to b."""
    (row_a, col_a), (row_b, col_b) = a, b
    horizontal = Rect(
        row0=max(row_a - half_width, 1), col0=max(min(col_a, col_b) - half_width, 1),
        row1=min(row_a + half_width + 1, rows - 1), col1=min(max(col_a, col_b) + half_width + 1, cols - 1)
    )
    vertical = Rect(
        row0=max(min(row_a, row_b) - half_width, 1), col0=max(col_b - half_width, 1),
        row1=min(max(row_a, row_b) + half_width + 1, rows - 1), col1=min(col_b + half_width + 1, cols - 1)
    )
    return [horizontal, vertical]


def generate_subway(
    seed: int,
    room_count: int,
    extra_corridors: int = 0,
    resolution: float = config.resolution
) -> Environment:
    """
    Scatter axis-aligned rooms with sides of 8 to 30 meters over a grid of slots, one room per
    slot, and join them with L-shaped corridors 2 to 4 meters wide along a minimum spanning tree
    of the room centres. Extra corridors, if requested, follow the shortest non-tree pairs.

    Returns:
        Environment: the layout, starting at the centre of the first room
    """
    if room_count < 2 or extra_corridors < 0:
        raise ParameterError(f"Need at least two rooms and no negative corridor count, got {room_count}, {extra_corridors}")

    rng = np.random.default_rng(seed)
    slots_per_side = math.ceil(math.sqrt(room_count))
    slot = _meters_to_cells(SLOT_SIZE, resolution)
    side_cells = slots_per_side * slot + 2
    occupancy = np.full((side_cells, side_cells), Occupancy.OCCUPIED, dtype=np.int8)

    rooms = []
    for index in sorted(rng.choice(slots_per_side ** 2, size=room_count, replace=False)):
        slot_row, slot_col = divmod(int(index), slots_per_side)
        height = _meters_to_cells(rng.uniform(8.0, 30.0), resolution)
        width = _meters_to_cells(rng.uniform(8.0, 30.0), resolution)
        row0 = 1 + slot_row * slot + int(rng.integers(1, slot - height))
        col0 = 1 + slot_col * slot + int(rng.integers(1, slot - width))
        rooms.append(Rect(row0=row0, col0=col0, row1=row0 + height, col1=col0 + width))

    centers = np.array([room.center for room in rooms], dtype=float)
    distances = squareform(pdist(centers))
    tree = minimum_spanning_tree(distances).tocoo()
    links = sorted(zip(tree.row.tolist(), tree.col.tolist()))

    if extra_corridors:
        tree_pairs = {tuple(sorted(pair)) for pair in links}
        others = sorted(
            ((distances[i, j], i, j) for i in range(room_count) for j in range(i + 1, room_count) if (i, j) not in tree_pairs)
        )
        links += [(i, j) for _, i, j in others[:extra_corridors]]

    corridors = []
    for a, b in links:
        half_width = _meters_to_cells(rng.uniform(2.0, 4.0), resolution) // 2
        corridors.append(_l_corridor(rooms[a].center, rooms[b].center, half_width, side_cells, side_cells))

    for room in rooms:
        room.carve(occupancy)
    for corridor in corridors:
        for rect in corridor:
            rect.carve(occupancy)

    logger.debug(f"Generated a subway layout with {room_count} rooms and {len(corridors)} corridors, seed {seed}")

    return Environment(
        occupancy=occupancy,
        risk=_risk_field(occupancy, rng, resolution, patches=room_count),
        start=rooms[0].center,
        resolution=resolution,
        descriptor={"kind": "subway", "seed": seed, "room_count": room_count, "extra_corridors": extra_corridors},
        rooms=rooms,
        corridors=corridors
    )


def generate_junction(
    seed: int = 0,
    arm_length: float = 30.0,
    corridor_width: float = 3.0,
    resolution: float = config.resolution
) -> Environment:
    """
    Two corridors crossing at right angles with four arms of equal length, the robot starting at
    the crossing. The seed only drives the risk field.
    """
    if arm_length <= 0 or corridor_width <= 0:
        raise ParameterError(f"Invalid junction arm length {arm_length} or width {corridor_width}")

    rng = np.random.default_rng(seed)
    arm = _meters_to_cells(arm_length, resolution)
    half_width = _meters_to_cells(corridor_width, resolution) // 2
    side = 2 * arm + 2 * half_width + 3
    middle = side // 2
    occupancy = np.full((side, side), Occupancy.OCCUPIED, dtype=np.int8)

    corridors = [[Rect(middle - half_width, 1, middle + half_width + 1, side - 1)],
                 [Rect(1, middle - half_width, side - 1, middle + half_width + 1)]]
    for corridor in corridors:
        corridor[0].carve(occupancy)

    return Environment(
        occupancy=occupancy,
        risk=np.where(occupancy == Occupancy.FREE, 1.0 + rng.uniform(0.0, 0.5, occupancy.shape), 1.0),
        start=(middle, middle),
        resolution=resolution,
        descriptor={"kind": "junction", "seed": seed, "arm_length": arm_length, "corridor_width": corridor_width},
        corridors=corridors
    )


def generate_room(side: float = 8.0, resolution: float = config.resolution, seed: int = 0) -> Environment:
    if side <= 0:
        raise ParameterError(f"The room side must be positive, got {side}")

    cells = _meters_to_cells(side, resolution)
    occupancy = np.full((cells + 2, cells + 2), Occupancy.OCCUPIED, dtype=np.int8)
    room = Rect(1, 1, cells + 1, cells + 1)
    room.carve(occupancy)

    return Environment(
        occupancy=occupancy,
        risk=np.ones(occupancy.shape, dtype=float),
        start=room.center,
        resolution=resolution,
        descriptor={"kind": "room", "seed": seed, "side": side},
        rooms=[room]
    )


def load_environment(path: Path, seed: int = 0) -> Environment:
    """
    Load a ground-truth grid from a text file. The robot starts on the free cell nearest the grid
    centre.
    """
    occupancy, resolution = read_grid(path)
    if np.any(occupancy == Occupancy.UNKNOWN):
        raise ScenarioError(f"Ground-truth grid {path} contains unknown cells")

    free_cells = np.argwhere(occupancy == Occupancy.FREE)
    if len(free_cells) == 0:
        raise ScenarioError(f"Ground-truth grid {path} has no free cell")

    middle = np.array(occupancy.shape) / 2
    start = free_cells[int(np.argmin(((free_cells - middle) ** 2).sum(axis=1)))]

    return Environment(
        occupancy=occupancy,
        risk=np.ones(occupancy.shape, dtype=float),
        start=(int(start[0]), int(start[1])),
        resolution=resolution,
        descriptor={"kind": "file", "path": str(path), "seed": seed}
    )


GENERATORS: dict[str, Callable[..., Environment]] = {
    "maze": generate_maze,
    "subway": generate_subway,
    "junction": generate_junction,
    "room": generate_room,
    "file": load_environment
}


def build_environment(descriptor: dict[str, Any]) -> Environment:
    """
    Make an environment from a descriptor such as {"kind": "maze", "seed": 3, "width": 20, "height": 20}.
    """
    parameters = dict(descriptor)
    kind = parameters.pop("kind", None)
    if kind not in GENERATORS:
        raise ScenarioError(f"Unknown environment kind {kind!r}; choose from {sorted(GENERATORS)}")

    try:
        return GENERATORS[kind](**parameters)
    except TypeError as error:
        raise ScenarioError(f"Invalid parameters for a {kind} environment: {error}") from error
