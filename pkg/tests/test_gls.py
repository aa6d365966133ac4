import numpy as np
import pytest

from src.objective.frontloading import FrontloadParams, ObjectiveKind
from src.setup.exceptions import ParameterError
from src.solver.baselines import brute_force_solve, solve_greedy
from src.solver.gls import SolveRequest, solve_gls
from src.solver.moves import MoveStats
from src.world_model.figop_graph import FigOpGraph
from tests.conftest import random_graph


def solve(graph: FigOpGraph, budget: float, objective: ObjectiveKind | None = None, seed: int = 0, **kwargs):
    request = SolveRequest(
        graph=graph, objective=objective or ObjectiveKind.fig(), budget=budget, rng_seed=seed, **kwargs
    )
    return solve_gls(request)


def agreement_with_brute_force(
    rng: np.random.Generator, instances: int, nodes: int | None = None
) -> tuple[float, list[float]]:
    """Share of instances solved to the optimum, and the found-to-optimal ratio of each."""
    exact, ratios = 0, []
    for index in range(instances):
        graph = random_graph(rng, nodes=nodes or 1 + index % 7)
        optimum = brute_force_solve(graph, ObjectiveKind.fig(), budget=150.0).objective_value
        found = solve(graph, budget=150.0, seed=index).objective_value

        assert found <= optimum + 1e-9
        ratios.append(found / optimum if optimum > 0 else 1.0)
        exact += found >= optimum * (1 - 1e-9)

    return exact / instances, ratios


def test_hand_instance(hand_graph):
    solution = solve(hand_graph, budget=200.0)
    assert solution.path == (0, 1, 2)
    assert solution.objective_value == pytest.approx(35.133858, abs=2e-6)
    assert solution.solver == "gls"


def test_single_cluster():
    graph = FigOpGraph.from_matrix(cost=[[0.0, 10.0], [10.0, 0.0]], info_gain=[0.0, 3.0])
    assert solve(graph, budget=20.0).path == (0, 1)


def test_root_only_graph():
    graph = FigOpGraph.from_matrix(cost=[[0.0]], info_gain=[0.0])
    solution = solve(graph, budget=20.0)
    assert solution.path == (0,)
    assert solution.objective_value == 0.0


def test_nothing_within_budget(rng):
    graph = random_graph(rng, nodes=6, low=50.0, high=100.0)
    solution = solve(graph, budget=40.0)
    assert solution.path == (0,)
    assert solution.objective_value == 0.0


@pytest.mark.parametrize("budget, time_limit", [(0.0, 1.0), (-5.0, 1.0), (100.0, 0.0), (100.0, -1.0)])
def test_request_validation(hand_graph, budget, time_limit):
    with pytest.raises(ParameterError):
        SolveRequest(graph=hand_graph, objective=ObjectiveKind.fig(), budget=budget, time_limit=time_limit)


def test_solutions_are_feasible_and_never_worse_than_greedy(rng):
    for index in range(20):
        graph = random_graph(rng, nodes=10)
        budget = float(rng.uniform(50.0, 400.0))
        solution = solve(graph, budget=budget, seed=index)
        greedy = solve_greedy(graph, budget=budget)

        assert solution.evaluation.feasible
        assert solution.path[0] == 0
        assert len(set(solution.path)) == len(solution.path)
        assert solution.objective_value >= greedy.objective_value - 1e-9


def test_same_seed_same_answer(rng):
    graph = random_graph(rng, nodes=10)
    first = solve(graph, budget=250.0, seed=7)
    second = solve(graph, budget=250.0, seed=7)
    assert first.path == second.path
    assert first.objective_value == second.objective_value


def test_zero_amplitude_agrees_with_the_orienteering_objective(rng):
    graph = random_graph(rng, nodes=9)
    flat = solve(graph, budget=200.0, objective=ObjectiveKind.fig(FrontloadParams(k1=0.0)), seed=3)
    op = solve(graph, budget=200.0, objective=ObjectiveKind.op(), seed=3)
    assert flat.path == op.path
    assert flat.objective_value == op.objective_value


def test_incumbent_history_never_decreases(rng):
    solution = solve(random_graph(rng, nodes=12), budget=300.0)
    history = np.array(solution.history)
    assert len(history) >= 1
    assert np.all(np.diff(history) >= -1e-9)
    assert history[-1] == pytest.approx(solution.objective_value, rel=1e-12)


def test_tiny_time_limit_still_returns_a_feasible_path(rng):
    graph = random_graph(rng, nodes=15)
    request = SolveRequest(graph=graph, objective=ObjectiveKind.fig(), budget=200.0, time_limit=1e-6)
    solution = solve_gls(request)
    assert solution.evaluation.feasible
    assert solution.objective_value >= solve_greedy(graph, budget=200.0).objective_value - 1e-9


def test_warm_start_from_a_previous_solution(rng):
    graph = random_graph(rng, nodes=10)
    previous = solve(graph, budget=200.0)
    warm = solve(graph, budget=200.0, seed_path=previous)
    assert warm.objective_value >= previous.objective_value - 1e-9


def test_invalid_seed_paths_are_ignored(hand_graph):
    solution = solve(hand_graph, budget=200.0, seed_path=[1, 2])
    assert solution.path == (0, 1, 2)


def test_move_statistics_are_collected(rng):
    stats = MoveStats()
    request = SolveRequest(graph=random_graph(rng, nodes=8), objective=ObjectiveKind.fig(), budget=200.0)
    solve_gls(request, stats=stats)
    assert stats.total_evaluations > 0
    assert set(stats.evaluations) <= {"insert", "replace", "swap", "backward_swap", "relocate", "two_opt", "drop", "perturb"}


def test_the_work_done_is_reproducible(rng):
    graph = random_graph(rng, nodes=12)
    runs = []
    for _ in range(2):
        stats = MoveStats()
        request = SolveRequest(graph=graph, objective=ObjectiveKind.fig(), budget=250.0, time_limit=0.05, rng_seed=2)
        solution = solve_gls(request, stats=stats)
        runs.append((solution.path, solution.iterations, solution.history, dict(stats.evaluations)))

    assert runs[0] == runs[1]


def test_a_longer_time_limit_buys_more_evaluations(rng):
    graph = random_graph(rng, nodes=15)
    counts = []
    for time_limit in (0.001, 0.5):
        stats = MoveStats()
        solve_gls(SolveRequest(graph=graph, objective=ObjectiveKind.fig(), budget=300.0, time_limit=time_limit), stats=stats)
        counts.append(stats.total_evaluations)

    assert SolveRequest(graph=graph, objective=ObjectiveKind.fig(), budget=300.0, time_limit=0.5).evaluation_limit == 25_000
    assert counts[0] < counts[1]


def test_agrees_with_brute_force_on_small_instances(rng):
    exact_share, ratios = agreement_with_brute_force(rng, instances=42)
    assert exact_share >= 0.9
    assert min(ratios) >= 0.95


@pytest.mark.parametrize("seed", range(10))
def test_zero_amplitude_matches_the_orienteering_objective_across_instances(seed):
    graph = random_graph(np.random.default_rng(seed), nodes=8)
    flat = solve(graph, budget=180.0, objective=ObjectiveKind.fig(FrontloadParams(k1=0.0)), seed=seed)
    op = solve(graph, budget=180.0, objective=ObjectiveKind.op(), seed=seed)
    assert flat.objective_value == op.objective_value


@pytest.mark.slow
def test_zero_amplitude_matches_the_orienteering_objective_on_a_hundred_instances(rng):
    for index in range(100):
        graph = random_graph(rng, nodes=int(rng.integers(3, 10)))
        budget = float(rng.uniform(80.0, 300.0))
        flat = solve(graph, budget=budget, objective=ObjectiveKind.fig(FrontloadParams(k1=0.0)), seed=index)
        op = solve(graph, budget=budget, objective=ObjectiveKind.op(), seed=index)
        assert flat.objective_value == op.objective_value


@pytest.mark.slow
def test_agrees_with_brute_force_on_five_hundred_instances(rng):
    exact_share, ratios = agreement_with_brute_force(rng, instances=500)
    assert exact_share >= 0.9
    assert all(ratio >= 0.98 for ratio in ratios)


@pytest.mark.slow
def test_seven_node_instances_stay_close_to_the_optimum(rng):
    _, ratios = agreement_with_brute_force(rng, instances=200, nodes=7)
    assert np.mean([ratio >= 0.98 for ratio in ratios]) >= 0.95


@pytest.mark.slow
def test_greedy_is_never_better_on_the_benchmark_instances(rng):
    for index in range(500):
        graph = random_graph(rng, nodes=1 + index % 7)
        solution = solve(graph, budget=150.0, seed=index)
        assert solution.evaluation.feasible and solution.path[0] == 0
        assert solution.objective_value >= solve_greedy(graph, budget=150.0).objective_value - 1e-9
