import numpy as np
import pytest

from src.simulation.environments import Environment
from src.world_model.figop_graph import FigOpGraph
from src.world_model.metric_map import MetricMap, Occupancy


def random_graph(rng: np.random.Generator, nodes: int, low: float = 10.0, high: float = 100.0,
                 max_gain: float = 50.0) -> FigOpGraph:
    """A complete graph over a root and `nodes` clusters with uniform random costs and gains."""
    size = nodes + 1
    upper = np.triu(rng.uniform(low, high, size=(size, size)), k=1)
    gains = np.concatenate([[0.0], rng.uniform(1.0, max_gain, size=nodes)])
    return FigOpGraph.from_matrix(cost=upper + upper.T, info_gain=gains)


def grid_environment(rows: list[str], start: tuple[int, int], resolution: float = 0.5) -> Environment:
    """An environment drawn with '#' for walls and '.' for free cells, row 0 first."""
    occupancy = np.array([[Occupancy.OCCUPIED if c == "#" else Occupancy.FREE for c in row] for row in rows], dtype=np.int8)
    return Environment(
        occupancy=occupancy,
        risk=np.ones(occupancy.shape),
        start=start,
        resolution=resolution,
        descriptor={"kind": "test"}
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def hand_graph() -> FigOpGraph:
    """root -> A -> B with a(root, A) = a(A, B) = 50, a(root, B) = 100, IG(A) = 10, IG(B) = 20."""
    cost = [[0.0, 50.0, 100.0], [50.0, 0.0, 50.0], [100.0, 50.0, 0.0]]
    return FigOpGraph.from_matrix(cost=cost, info_gain=[0.0, 10.0, 20.0])


@pytest.fixture
def open_map():
    def make(size: int = 10, resolution: float = 1.0) -> MetricMap:
        return MetricMap.from_arrays(np.full((size, size), Occupancy.FREE), resolution=resolution)
    return make
