from dataclasses import replace

import numpy as np
import pytest

from src.benchmarking.scenario import load_scenario
from src.benchmarking.expected_ig import COLUMNS, cumulative_ig_curve, expected_ig_table, plan_on_snapshot
from src.setup.exceptions import ParameterError
from src.solver.baselines import make_solution
from src.objective.frontloading import ObjectiveKind
from src.simulation.mission import collect_snapshots
from src.world_model.figop_graph import FigOpGraph


def near_small_far_large() -> FigOpGraph:
    cost = [[0.0, 10.0, 60.0], [10.0, 0.0, 55.0], [60.0, 55.0, 0.0]]
    return FigOpGraph.from_matrix(cost=cost, info_gain=[0.0, 5.0, 100.0])


def curve(table, planner: str):
    return table[table["planner"] == planner].set_index("cost_m")["cumulative_ig"]


def test_one_frontier_gives_identical_curves():
    graph = FigOpGraph.from_matrix(cost=[[0.0, 30.0], [30.0, 0.0]], info_gain=[0.0, 12.0])
    table = expected_ig_table(graph, planners=["figop", "op", "greedy"], horizon=100.0, step=5.0)

    assert list(table.columns) == COLUMNS
    reference = curve(table, "figop")
    for planner in ("op", "greedy"):
        assert curve(table, planner).equals(reference)
    assert reference.loc[25.0] == 0.0
    assert reference.loc[30.0] == 12.0


def test_zero_horizon():
    table = expected_ig_table(near_small_far_large(), horizon=0.0)
    assert len(table) == 3
    assert (table["cost_m"] == 0.0).all()
    assert (table["cumulative_ig"] == 0.0).all()


def test_greedy_rises_first_but_ends_lower():
    table = expected_ig_table(near_small_far_large(), planners=["op", "greedy"], horizon=60.0, step=5.0)
    op, greedy = curve(table, "op"), curve(table, "greedy")

    assert greedy.loc[10.0] > op.loc[10.0]
    assert op.iloc[-1] >= greedy.iloc[-1]
    assert op.iloc[-1] == 100.0


def test_no_frontiers_gives_an_empty_table():
    graph = FigOpGraph.from_matrix(cost=[[0.0]], info_gain=[0.0])
    table = expected_ig_table(graph)
    assert table.empty
    assert list(table.columns) == COLUMNS


def test_curves_never_decrease(rng):
    size = 9
    upper = np.triu(rng.uniform(10.0, 60.0, size=(size, size)), k=1)
    graph = FigOpGraph.from_matrix(cost=upper + upper.T, info_gain=[0.0, *rng.uniform(1.0, 30.0, size=size - 1)])
    table = expected_ig_table(graph, planners=["figop", "exp"], horizon=150.0, step=5.0)

    for planner in ("figop", "exp"):
        values = curve(table, planner).to_numpy()
        assert np.all(np.diff(values) >= 0)
        assert values[-1] <= graph.info_gain.sum() + 1e-9


def test_curve_steps_at_each_visit():
    graph = near_small_far_large()
    solution = make_solution([0, 1, 2], graph, ObjectiveKind.op(), budget=100.0, solver="greedy")
    sampled = cumulative_ig_curve(graph, solution, horizon=70.0, step=5.0).set_index("cost_m")["cumulative_ig"]
    assert sampled.loc[5.0] == 0.0
    assert sampled.loc[10.0] == 5.0
    assert sampled.loc[60.0] == 5.0
    assert sampled.loc[65.0] == 105.0


def test_invalid_requests():
    with pytest.raises(ParameterError):
        expected_ig_table(near_small_far_large(), horizon=-1.0)
    with pytest.raises(ParameterError):
        plan_on_snapshot(near_small_far_large(), planner="astar", budget=10.0)


@pytest.mark.slow
def test_curve_shapes_over_twenty_mission_snapshots():
    scenario = load_scenario("subway-small")
    snapshots = []
    for seed in scenario.seeds:
        mission = replace(scenario.mission_for("figop", seed), mission_time=630.0)
        times = [60.0 * (index + 1) for index in range(10)]
        snapshots += collect_snapshots(env=scenario.environment_for(seed), cfg=mission, times=times)
        if len(snapshots) >= 20:
            break

    assert len(snapshots) >= 20
    greedy_leads, endpoints_ordered = 0, 0
    for _, graph in snapshots[:20]:
        table = expected_ig_table(graph, planners=["figop", "op", "greedy"], horizon=200.0, step=5.0)
        figop, op, greedy = curve(table, "figop"), curve(table, "op"), curve(table, "greedy")

        early = op.index <= 50.0
        greedy_leads += bool((greedy[early] >= op[early] - 1e-9).all())
        endpoints_ordered += op.iloc[-1] >= figop.iloc[-1] - 1e-9 and figop.iloc[-1] >= greedy.iloc[-1] - 1e-9

    assert greedy_leads > 10
    assert endpoints_ordered > 10
