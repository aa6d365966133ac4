import math

import networkx as nx
import numpy as np
import pytest

from src.setup.exceptions import DomainError, InstanceParseError, ParameterError
from src.world_model.grid_io import read_grid, text_to_grid, write_grid
from src.world_model.metric_map import (
    MetricMap, Occupancy, metric_cost, metric_cost_field, metric_route, update_metric_window
)


def random_map(rng: np.random.Generator, size: int = 15, wall_share: float = 0.25) -> MetricMap:
    occupancy = np.where(rng.random((size, size)) < wall_share, Occupancy.OCCUPIED, Occupancy.FREE)
    risk = rng.uniform(1.0, 10.0, size=(size, size))
    return MetricMap.from_arrays(occupancy, risk=risk, resolution=0.5)


def networkx_oracle(metric_map: MetricMap) -> nx.Graph:
    graph = nx.Graph()
    size = metric_map.size
    for row in range(size):
        for col in range(size):
            if not metric_map.is_free((row, col)):
                continue
            graph.add_node((row, col))
            for d_row, d_col in ((0, 1), (1, -1), (1, 0), (1, 1)):
                other = (row + d_row, col + d_col)
                if metric_map.is_free(other):
                    mean_risk = (metric_map.risk[row, col] + metric_map.risk[other]) / 2
                    graph.add_edge((row, col), other, weight=metric_map.resolution * math.hypot(d_row, d_col) * mean_risk)
    return graph


def test_window_update_keeps_the_grid_size():
    metric_map = MetricMap.empty(center=(10.0, 10.0), half_extent=5.0, resolution=1.0)
    assert metric_map.size == 10
    for center in [(10.0, 10.0), (13.2, 8.7), (100.0, -40.0)]:
        assert update_metric_window(metric_map, center).occupancy.shape == (10, 10)


def test_window_update_on_the_same_center_changes_nothing():
    metric_map = MetricMap.empty(center=(10.0, 10.0), half_extent=5.0, resolution=1.0)
    metric_map.occupancy[3:6, 2:8] = Occupancy.FREE
    metric_map.occupancy[4, 4] = Occupancy.OCCUPIED

    moved = update_metric_window(metric_map, (10.0, 10.0))
    assert moved.offset == metric_map.offset
    np.testing.assert_array_equal(moved.occupancy, metric_map.occupancy)


def test_one_cell_shift_preserves_the_overlap():
    metric_map = MetricMap.empty(center=(10.0, 10.0), half_extent=5.0, resolution=1.0)
    metric_map.occupancy[:] = Occupancy.FREE
    metric_map.occupancy[2, 3] = Occupancy.OCCUPIED
    metric_map.risk[2, 4] = 7.0
    occupied_global = metric_map.to_global((2, 3))
    risky_global = metric_map.to_global((2, 4))

    moved = update_metric_window(metric_map, (11.0, 10.0))
    assert moved.offset == (metric_map.offset[0], metric_map.offset[1] + 1)
    assert moved.occupancy[moved.to_window(occupied_global)] == Occupancy.OCCUPIED
    assert moved.risk[moved.to_window(risky_global)] == 7.0

    # The column entering on the right is unknown, everything else was seen before
    assert np.all(moved.occupancy[:, -1] == Occupancy.UNKNOWN)
    assert np.all(moved.occupancy[:, :-1] != Occupancy.UNKNOWN)


def test_disjoint_window_is_entirely_unknown():
    metric_map = MetricMap.empty(center=(10.0, 10.0), half_extent=5.0, resolution=1.0)
    metric_map.occupancy[:] = Occupancy.FREE
    moved = update_metric_window(metric_map, (60.0, 60.0))
    assert np.all(moved.occupancy == Occupancy.UNKNOWN)


def test_world_and_cell_coordinates_agree():
    metric_map = MetricMap.empty(center=(3.3, 7.9), half_extent=4.0, resolution=0.5)
    cell = metric_map.world_to_cell((3.3, 7.9))
    assert cell is not None
    x, y = metric_map.cell_to_world(cell)
    assert abs(x - 3.3) <= 0.25 and abs(y - 7.9) <= 0.25
    assert metric_map.world_to_cell((50.0, 50.0)) is None


def test_cells_are_read_through_the_layers(open_map):
    metric_map = open_map()
    metric_map.occupancy[0, 1] = Occupancy.OCCUPIED

    assert not hasattr(metric_map, "cell")
    assert metric_map.is_free((0, 0)) and metric_map.risk[0, 0] == 1.0
    assert not metric_map.is_free((0, 1))
    assert not metric_map.is_free((-1, 0))


def test_cost_between_adjacent_cells(open_map):
    assert metric_cost(open_map(), (4, 4), (4, 5)) == pytest.approx(1.0)
    assert metric_cost(open_map(), (4, 4), (4, 4)) == 0.0


def test_cost_along_a_corridor():
    occupancy = np.full((5, 5), Occupancy.OCCUPIED)
    occupancy[2, :] = Occupancy.FREE
    corridor = MetricMap.from_arrays(occupancy, resolution=1.0)
    assert metric_cost(corridor, (2, 0), (2, 4)) == pytest.approx(4.0)


def test_cost_corner_to_corner(open_map):
    assert metric_cost(open_map(10), (0, 0), (9, 9)) == pytest.approx(9 * math.sqrt(2), abs=1e-9)


def test_cost_scales_with_risk(open_map):
    metric_map = open_map(5)
    metric_map.risk[:] = 3.0
    assert metric_cost(metric_map, (0, 0), (0, 4)) == pytest.approx(12.0)


def test_unreachable_goal_costs_infinity():
    occupancy = np.full((5, 5), Occupancy.FREE)
    occupancy[:, 2] = Occupancy.OCCUPIED
    walled = MetricMap.from_arrays(occupancy, resolution=1.0)
    assert metric_cost(walled, (0, 0), (0, 4)) == math.inf
    assert metric_route(walled, (0, 0), (0, 4)) == []


def test_unknown_cells_are_not_traversable():
    occupancy = np.full((5, 5), Occupancy.FREE)
    occupancy[:, 2] = Occupancy.UNKNOWN
    metric_map = MetricMap.from_arrays(occupancy, resolution=1.0)
    assert metric_cost(metric_map, (2, 0), (2, 4)) == math.inf


@pytest.mark.parametrize("state", [Occupancy.OCCUPIED, Occupancy.UNKNOWN])
def test_endpoints_must_be_free(open_map, state):
    metric_map = open_map(5)
    metric_map.occupancy[1, 1] = state
    with pytest.raises(DomainError):
        metric_cost(metric_map, (1, 1), (3, 3))
    with pytest.raises(DomainError):
        metric_cost(metric_map, (3, 3), (1, 1))
    with pytest.raises(DomainError):
        metric_cost(metric_map, (0, 0), (9, 9))


@pytest.mark.parametrize("maps", [5, pytest.param(100, marks=pytest.mark.slow)])
def test_costs_match_a_reference_dijkstra(rng, maps):
    for _ in range(maps):
        metric_map = random_map(rng)
        oracle = networkx_oracle(metric_map)
        free = [tuple(int(v) for v in cell) for cell in np.argwhere(metric_map.occupancy == Occupancy.FREE)]
        start = free[int(rng.integers(len(free)))]
        field = metric_cost_field(metric_map, [start])[0]
        lengths = nx.single_source_dijkstra_path_length(oracle, start, weight="weight")

        for cell in free:
            expected = lengths.get(cell, math.inf)
            if math.isinf(expected):
                assert math.isinf(field[cell])
            else:
                assert field[cell] == pytest.approx(expected, rel=1e-12)


def test_costs_are_symmetric_and_satisfy_the_triangle_inequality(rng):
    metric_map = random_map(rng, wall_share=0.15)
    free = [tuple(int(v) for v in cell) for cell in np.argwhere(metric_map.occupancy == Occupancy.FREE)]
    picks = [free[int(i)] for i in rng.choice(len(free), size=6, replace=False)]
    field = metric_cost_field(metric_map, picks)

    for i, a in enumerate(picks):
        for j, b in enumerate(picks):
            assert field[i][b] == pytest.approx(field[j][a], rel=1e-12) or math.isinf(field[i][b])
            for k, c in enumerate(picks):
                if math.isfinite(field[i][b]) and math.isfinite(field[j][c]):
                    assert field[i][c] <= field[i][b] + field[j][c] + 1e-9


def test_route_realizes_the_cost(rng):
    metric_map = random_map(rng, wall_share=0.1)
    free = [tuple(int(v) for v in cell) for cell in np.argwhere(metric_map.occupancy == Occupancy.FREE)]
    start, goal = free[0], free[-1]
    route = metric_route(metric_map, start, goal)
    cost = metric_cost(metric_map, start, goal)

    if math.isinf(cost):
        assert route == []
        return

    assert route[0] == start and route[-1] == goal
    total = 0.0
    for a, b in zip(route, route[1:]):
        assert max(abs(a[0] - b[0]), abs(a[1] - b[1])) == 1
        assert metric_map.is_free(b)
        total += metric_map.resolution * math.hypot(a[0] - b[0], a[1] - b[1]) * (metric_map.risk[a] + metric_map.risk[b]) / 2
    assert total == pytest.approx(cost, rel=1e-9)


def test_map_shape_validation():
    with pytest.raises(ParameterError):
        MetricMap.from_arrays(np.zeros((3, 4)))
    with pytest.raises(ParameterError):
        MetricMap.empty(center=(0.0, 0.0), half_extent=0.0)


def test_grid_text_is_read_back(tmp_path):
    occupancy = np.array([[1, 1, 1], [1, 0, -1], [1, 1, 1]], dtype=np.int8)
    path = tmp_path / "grid.txt"
    write_grid(path, occupancy=occupancy, resolution=0.5)

    assert path.read_text().splitlines() == ["3 3 0.5", "###", "#.?", "###"]
    grid, resolution = read_grid(path)
    np.testing.assert_array_equal(grid, occupancy)
    assert resolution == 0.5


@pytest.mark.parametrize(
    "text, line, column",
    [
        ("", 1, 1),
        ("3 3\n...\n", 1, 1),
        ("3 x 0.5\n", 1, 1),
        ("3 2 0.5\n...\n", 3, 1),
        ("3 2 0.5\n...\n..\n", 3, 3),
        ("3 2 0.5\n...\n.X.\n", 3, 2),
    ]
)
def test_grid_parse_errors_name_the_location(text, line, column):
    with pytest.raises(InstanceParseError) as caught:
        text_to_grid(text)
    assert caught.value.line == line
    assert caught.value.column == column
