import math
from itertools import combinations

import networkx as nx
import numpy as np
import pytest

from src.setup.exceptions import ContractError, ParameterError
from src.world_model.topo_map import NodeKind, TopoMap, topo_cost


def chain(weights: list[float]) -> TopoMap:
    topo = TopoMap()
    nodes = [topo.add_node((float(i), 0.0), NodeKind.BREADCRUMB) for i in range(len(weights) + 1)]
    for (a, b), weight in zip(zip(nodes, nodes[1:]), weights):
        topo.add_edge(a.id, b.id, weight)
    return topo


def test_cost_to_itself_is_zero():
    topo = chain([1.0])
    assert topo_cost(topo, 0, 0) == 0.0


def test_chain_costs_sum_the_edges():
    topo = chain([1.0, 2.0])
    assert topo_cost(topo, 0, 2) == 3.0
    assert topo_cost(topo, 2, 0) == 3.0


def test_unknown_nodes_break_the_contract():
    topo = chain([1.0])
    with pytest.raises(ContractError):
        topo_cost(topo, 0, 42)


def test_disconnected_nodes_cost_infinity():
    topo = chain([1.0])
    lonely = topo.add_node((10.0, 10.0), NodeKind.FRONTIER)
    assert topo_cost(topo, 0, lonely.id) == math.inf
    assert topo.route(0, lonely.id) == []


def test_edge_weights_are_frozen():
    topo = chain([4.0])
    topo.add_edge(0, 1, 1.0)
    assert topo_cost(topo, 0, 1) == 4.0
    assert topo.edges == [(0, 1, 4.0)]


@pytest.mark.parametrize("weight", [0.0, -1.0, math.inf, math.nan])
def test_edge_weights_must_be_positive_and_finite(weight):
    topo = chain([1.0])
    with pytest.raises(ParameterError):
        topo.add_edge(0, 1, weight)


def test_removed_nodes_are_gone():
    topo = chain([1.0, 1.0])
    topo.remove_node(1)
    assert topo_cost(topo, 0, 2) == math.inf
    with pytest.raises(ContractError):
        topo.node(1)


def test_nearest_filters_by_kind():
    topo = TopoMap()
    topo.add_node((0.0, 0.0), NodeKind.BREADCRUMB)
    frontier = topo.add_node((1.0, 0.0), NodeKind.FRONTIER)
    assert topo.nearest((0.9, 0.0)).id == frontier.id
    assert topo.nearest((0.9, 0.0), kind=NodeKind.BREADCRUMB).id == 0
    assert TopoMap().nearest((0.0, 0.0)) is None
    assert [node.id for node in topo.frontiers()] == [frontier.id]


def test_costs_are_minimal_over_all_simple_paths(rng):
    topo = TopoMap()
    for _ in range(12):
        topo.add_node(tuple(rng.uniform(0, 10, size=2)), NodeKind.BREADCRUMB)
    for a, b in combinations(range(12), 2):
        if rng.random() < 0.3:
            topo.add_edge(a, b, float(rng.uniform(1.0, 10.0)))

    for start, goal in [(0, 11), (3, 7), (5, 9)]:
        paths = list(nx.all_simple_paths(topo.graph, start, goal))
        expected = min(
            (sum(topo.graph.edges[a, b]["weight"] for a, b in zip(path, path[1:])) for path in paths),
            default=math.inf
        )
        assert topo_cost(topo, start, goal) == pytest.approx(expected, rel=1e-12)


def test_route_follows_the_shortest_path():
    topo = chain([1.0, 1.0, 1.0])
    topo.add_edge(0, 3, 10.0)
    assert topo.route(0, 3) == [0, 1, 2, 3]
    assert np.isclose(topo.distances_from(0)[3], 3.0)
