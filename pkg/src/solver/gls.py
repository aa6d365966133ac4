"""
Guided local search for the frontloaded orienteering problem.

The search starts from the best of the root-only path, the greedy path and the warm-start seed,
runs local search on it, and then alternates edge penalization with local search on the
augmented objective. The incumbent is tracked on the true objective only. After a number of
rounds without improving the incumbent, the search restarts from a perturbed copy of the
incumbent with its penalties kept. It stops after several such restarts in a row, after
config.max_gls_rounds rounds, or when its evaluation budget runs out.

The time limit is spent as a budget of move evaluations at config.gls_evaluations_per_second,
so a request gives the same answer however loaded the machine is.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from loguru import logger

from src.objective.frontloading import ObjectiveKind
from src.setup.config import config
from src.setup.exceptions import ParameterError
from src.solver.baselines import Solution, make_solution, seed_from_previous, solve_greedy
from src.solver.moves import MoveStats, SearchContext, local_search, perturb
from src.world_model.figop_graph import FigOpGraph


@dataclass(frozen=True)
class SolveRequest:
    graph: FigOpGraph
    objective: ObjectiveKind
    budget: float
    seed_path: Solution | list[int] | None = None
    time_limit: float = config.solver_time_limit
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not self.budget > 0:
            raise ParameterError(f"The budget must be positive, got {self.budget}")
        if not self.time_limit > 0:
            raise ParameterError(f"The time limit must be positive, got {self.time_limit}")

    @property
    def evaluation_limit(self) -> int:
        return max(1, math.ceil(self.time_limit * config.gls_evaluations_per_second))


def _regularization_weight(graph: FigOpGraph, best_value: float, best_cost: float) -> float:
    if best_value > 0 and best_cost > 0:
        return config.penalty_factor * best_value / best_cost

    off_diagonal = graph.cost[~np.eye(graph.size, dtype=bool)]
    mean_cost = float(off_diagonal.mean()) if off_diagonal.size else 0.0
    mean_gain = float(np.mean(graph.info_gain[1:])) if graph.size > 1 else 0.0
    return config.penalty_factor * mean_gain / mean_cost if mean_cost > 0 else 0.0


def _seed_candidate(req: SolveRequest) -> list[int] | None:
    if req.seed_path is None:
        return None

    if isinstance(req.seed_path, Solution):
        return seed_from_previous(prev=req.seed_path, new_graph=req.graph, budget=req.budget)

    seed = [int(node) for node in req.seed_path]
    valid = (
        len(seed) > 0 and seed[0] == req.graph.root and len(set(seed)) == len(seed)
        and all(0 <= node < req.graph.size for node in seed)
    )
    if not valid:
        logger.warning(f"Ignoring an invalid seed path {seed}")
        return None
    return seed


def solve_gls(req: SolveRequest, stats: MoveStats | None = None) -> Solution:
    """
    Solve one instance with guided local search.

    Args:
        req: the instance, objective, budget, optional warm start, time limit and rng seed
        stats: optional counters that collect move evaluations across the solve

    Returns:
        Solution: the best feasible path found; never worse than the greedy path
    """
    graph = req.graph
    if graph.size == 1:
        return make_solution(path=[graph.root], graph=graph, objective=req.objective, budget=req.budget, solver="gls")

    rng = np.random.default_rng(req.rng_seed)
    context = SearchContext(
        graph=graph,
        objective=req.objective,
        budget=req.budget,
        stats=stats or MoveStats(),
        evaluation_limit=req.evaluation_limit
    )

    greedy = solve_greedy(graph=graph, budget=req.budget, objective=req.objective)
    candidates = [[graph.root], list(greedy.path)]
    seed = _seed_candidate(req)
    if seed is not None:
        candidates.append(seed)

    def rank(path: list[int]) -> tuple[float, float]:
        value, cost = context.scorer.score(path)
        return (value, -cost) if cost <= req.budget else (-np.inf, 0.0)

    best = current = local_search(max(candidates, key=rank), context)
    best_value, best_cost = context.scorer.score(best)
    history = [best_value]

    penalties = context.penalties
    stall_rounds = restarts = rounds = 0

    while rounds < config.max_gls_rounds and not context.exhausted():
        rounds += 1
        penalties.lam = _regularization_weight(graph=graph, best_value=best_value, best_cost=best_cost)

        if penalties.penalize(current, context.cost, rng) is None and len(best) == 1:
            break  # Nothing fits in the budget

        current = local_search(current, context)
        value, cost = context.scorer.score(current)

        if cost <= req.budget and context.is_better_order(value, cost, best_value, best_cost):
            best, best_value, best_cost = current, value, cost
            stall_rounds = restarts = 0
        else:
            stall_rounds += 1

        history.append(best_value)

        if stall_rounds >= config.stall_rounds_before_restart:
            restarts += 1
            if restarts >= config.restarts_without_improvement:
                break
            current, stall_rounds = perturb(best, context, rng), 0

    logger.debug(
        f"GLS finished after {rounds} rounds and {context.evaluations} evaluations with objective "
        f"{best_value:.6f} and cost {best_cost:.3f}"
    )

    return make_solution(
        path=best,
        graph=graph,
        objective=req.objective,
        budget=req.budget,
        solver="gls",
        iterations=rounds,
        history=tuple(history)
    )
