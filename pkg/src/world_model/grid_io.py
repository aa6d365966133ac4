"""
Plain-text occupancy grids: a header line "width height resolution" followed by one line per
row (row 0 first), one character per cell: '#' occupied, '.' free, '?' unknown.
"""
from pathlib import Path

import numpy as np

from src.setup.exceptions import InstanceParseError
from src.world_model.metric_map import Occupancy


CHARACTERS = {Occupancy.OCCUPIED: "#", Occupancy.FREE: ".", Occupancy.UNKNOWN: "?"}
SYMBOLS = {symbol: int(state) for state, symbol in CHARACTERS.items()}


def grid_to_text(occupancy: np.ndarray, resolution: float) -> str:
    height, width = occupancy.shape
    lookup = {int(state): symbol for state, symbol in CHARACTERS.items()}
    rows = ["".join(lookup[int(value)] for value in row) for row in occupancy]
    return "\n".join([f"{width} {height} {resolution:g}", *rows]) + "\n"


def text_to_grid(text: str) -> tuple[np.ndarray, float]:
    """
    Returns:
        tuple[np.ndarray, float]: the int8 occupancy grid and its resolution in meters
    """
    lines = text.splitlines()
    if not lines:
        raise InstanceParseError("empty grid file", line=1)

    header = lines[0].split()
    if len(header) != 3:
        raise InstanceParseError("expected header 'width height resolution'", line=1)

    try:
        width, height, resolution = int(header[0]), int(header[1]), float(header[2])
    except ValueError as error:
        raise InstanceParseError(f"malformed header ({error})", line=1) from error

    if width <= 0 or height <= 0 or resolution <= 0:
        raise InstanceParseError("width, height and resolution must be positive", line=1)

    rows = lines[1:1 + height]
    if len(rows) != height:
        raise InstanceParseError(f"expected {height} rows, found {len(rows)}", line=len(lines) + 1)

    grid = np.empty((height, width), dtype=np.int8)
    for row_number, row in enumerate(rows):
        line_number = row_number + 2
        if len(row) != width:
            raise InstanceParseError(f"expected {width} cells, found {len(row)}", line=line_number, column=len(row) + 1)

        for column_number, symbol in enumerate(row):
            if symbol not in SYMBOLS:
                raise InstanceParseError(f"unknown cell symbol {symbol!r}", line=line_number, column=column_number + 1)
            grid[row_number, column_number] = SYMBOLS[symbol]

    return grid, resolution


def write_grid(path: Path, occupancy: np.ndarray, resolution: float) -> None:
    Path(path).write_text(grid_to_text(occupancy=occupancy, resolution=resolution))


def read_grid(path: Path) -> tuple[np.ndarray, float]:
    return text_to_grid(Path(path).read_text())
