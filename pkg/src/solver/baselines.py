"""
Solutions, the nearest-frontier greedy baseline, the exhaustive oracle for small instances, and
warm-start seeding between planning episodes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from loguru import logger

from src.objective.frontloading import ObjectiveKind, PathEvaluation, PathScorer, evaluate_path
from src.setup.config import config
from src.setup.exceptions import ContractError, SizeError
from src.world_model.figop_graph import FigOpGraph


@dataclass(frozen=True)
class Solution:
    path: tuple[int, ...]
    evaluation: PathEvaluation
    iterations: int
    solver: Literal["gls", "greedy", "brute_force"]
    keys: tuple[int, ...] = ()
    history: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.evaluation.feasible:
            raise ContractError(f"Solutions must respect the budget, got path {self.path}")
        if len(set(self.path)) != len(self.path) or self.path[0] != 0:
            raise ContractError(f"A solution path starts at the root and never repeats, got {self.path}")

    @property
    def objective_value(self) -> float:
        return self.evaluation.objective_value

    @property
    def path_keys(self) -> tuple[int, ...]:
        return tuple(self.keys[node] for node in self.path)


def make_solution(
    path: list[int],
    graph: FigOpGraph,
    objective: ObjectiveKind,
    budget: float,
    solver: Literal["gls", "greedy", "brute_force"],
    iterations: int = 0,
    history: tuple[float, ...] = ()
) -> Solution:
    return Solution(
        path=tuple(path),
        evaluation=evaluate_path(path=path, graph=graph, objective=objective, budget=budget),
        iterations=iterations,
        solver=solver,
        keys=tuple(graph.keys),
        history=history
    )


def solve_greedy(graph: FigOpGraph, budget: float, objective: ObjectiveKind | None = None) -> Solution:
    """
    Keep moving to the unvisited node that is cheapest to reach from the current one, preferring
    larger information gain and then the lower node index on ties, until the cheapest move no
    longer fits in the remaining budget.

    Args:
        graph: the instance
        budget: the action cost budget in meters
        objective: only used to score the resulting path; FIG by default

    Returns:
        Solution: the greedy path
    """
    objective = objective or ObjectiveKind.fig()
    path = [graph.root]
    spent = 0.0
    unvisited = set(range(graph.size)) - {graph.root}

    while unvisited:
        current = path[-1]
        nearest = min(unvisited, key=lambda node: (graph.cost[current, node], -graph.info_gain[node], node))
        if spent + graph.cost[current, nearest] > budget:
            break

        spent += float(graph.cost[current, nearest])
        path.append(nearest)
        unvisited.remove(nearest)

    return make_solution(path=path, graph=graph, objective=objective, budget=budget, solver="greedy")


def brute_force_solve(graph: FigOpGraph, objective: ObjectiveKind, budget: float) -> Solution:
    """
    Enumerate every ordered subset of the non-root nodes and return the best feasible path,
    preferring lower total cost and then the lexicographically smaller path on ties.

    Raises:
        SizeError: when the graph has more non-root nodes than config.brute_force_limit
    """
    n = graph.size - 1
    if n > config.brute_force_limit:
        raise SizeError(f"Exhaustive search is limited to {config.brute_force_limit} nodes, got {n}")

    scorer = PathScorer(cost=graph.cost, info_gain=graph.info_gain, objective=objective)
    best = {"path": [graph.root], "value": 0.0, "cost": 0.0}
    evaluated = 0

    def extend(path: list[int], value: float, spent: float) -> None:
        nonlocal evaluated
        evaluated += 1

        if value > best["value"] or (value == best["value"] and spent < best["cost"]):
            best.update(path=list(path), value=value, cost=spent)

        for node in range(1, graph.size):
            if node in path:
                continue

            step = scorer.cost[path[-1]][node]
            if spent + step > budget:
                continue

            path.append(node)
            extend(path, value + scorer.factor(spent + step) * scorer.info_gain[node], spent + step)
            path.pop()

    extend([graph.root], 0.0, 0.0)
    logger.debug(f"Exhaustive search evaluated {evaluated} paths")

    return make_solution(path=best["path"], graph=graph, objective=objective, budget=budget, solver="brute_force", iterations=evaluated)


def seed_from_previous(prev: Solution, new_graph: FigOpGraph, budget: float) -> list[int]:
    """
    Turn the previous episode's solution into a starting path on the new graph. Nodes are matched
    by key. Visited nodes that survive keep their order; clusters the previous graph never had
    go in front of them, chained nearest-first from the root. The tail is cut until the path fits
    the budget.

    Args:
        prev: the previous solution
        new_graph: the graph of the current episode
        budget: the current budget

    Returns:
        list[int]: a feasible seed path over new_graph's node indices
    """
    index_of = {key: index for index, key in enumerate(new_graph.keys)}
    known = set(prev.keys)

    retained = [index_of[key] for key in prev.path_keys[1:] if key in index_of]
    fresh = [index for index, key in enumerate(new_graph.keys) if index != new_graph.root and key not in known]

    chain = [new_graph.root]
    while fresh:
        nearest = min(fresh, key=lambda node: (new_graph.cost[chain[-1], node], node))
        chain.append(nearest)
        fresh.remove(nearest)

    seed = chain + [node for node in retained if node not in chain]
    scorer = PathScorer(cost=new_graph.cost, info_gain=new_graph.info_gain, objective=ObjectiveKind.op())
    while len(seed) > 1 and scorer.path_cost(seed) > budget:
        seed.pop()

    return seed
