"""
Expected accumulated information gain along planned paths: for a frozen graph, solve once per
planner and tabulate the information gain collected against the distance spent.
"""
from __future__ import annotations

import numpy as np
import pandas as pd
from loguru import logger

from src.objective.frontloading import ExpDiscountParams, FrontloadParams, ObjectiveKind
from src.setup.config import config
from src.setup.exceptions import ParameterError
from src.solver.baselines import Solution, solve_greedy
from src.solver.gls import SolveRequest, solve_gls
from src.world_model.figop_graph import FigOpGraph


COLUMNS = ["planner", "cost_m", "cumulative_ig"]


def plan_on_snapshot(
    graph: FigOpGraph,
    planner: str,
    budget: float,
    frontload: FrontloadParams | None = None,
    discount: ExpDiscountParams | None = None,
    rng_seed: int = 0
) -> Solution:
    """
    Solve a frozen graph the way the given planner would. On a frozen graph the multi-fidelity
    wiring makes no difference, so figlf plans like figop.
    """
    if planner == "greedy":
        return solve_greedy(graph=graph, budget=budget, objective=ObjectiveKind.fig(frontload))

    objectives = {
        "figop": ObjectiveKind.fig(frontload),
        "figlf": ObjectiveKind.fig(frontload),
        "op": ObjectiveKind.op(),
        "exp": ObjectiveKind.exp(discount)
    }
    if planner not in objectives:
        raise ParameterError(f"Unknown planner {planner!r}")

    return solve_gls(SolveRequest(graph=graph, objective=objectives[planner], budget=budget, rng_seed=rng_seed))


def cumulative_ig_curve(graph: FigOpGraph, solution: Solution, horizon: float, step: float) -> pd.DataFrame:
    """
    Sample the information gain collected by a path (unweighted by any objective factor) on a
    regular grid of path distances from 0 to the horizon.

    Returns:
        pd.DataFrame: columns cost_m and cumulative_ig
    """
    reached = np.array(solution.evaluation.per_node_cumulative_cost[1:])
    gains = np.cumsum([graph.info_gain[node] for node in solution.path[1:]])

    grid = np.arange(0.0, horizon + step / 2, step)
    collected = np.searchsorted(reached, grid, side="right")
    values = np.concatenate([[0.0], gains])[collected]
    return pd.DataFrame({"cost_m": grid, "cumulative_ig": values})


def expected_ig_table(
    graph: FigOpGraph,
    planners: list[str] | tuple[str, ...] = ("figop", "op", "greedy"),
    horizon: float = config.expected_ig_horizon,
    step: float = config.expected_ig_step,
    frontload: FrontloadParams | None = None,
    discount: ExpDiscountParams | None = None,
    rng_seed: int = 0
) -> pd.DataFrame:
    """
    Tabulate the expected accumulated information gain of every planner on one snapshot.

    Args:
        graph: the frozen graph
        planners: which planners to compare
        horizon: the planning horizon in meters, also the budget
        step: the spacing of the distance grid in meters
        frontload: FIG shaping parameters
        discount: EXP discount parameters
        rng_seed: the solver seed

    Returns:
        pd.DataFrame: columns planner, cost_m, cumulative_ig; empty when the snapshot holds no
        frontier cluster
    """
    if horizon < 0 or step <= 0:
        raise ParameterError(f"Need horizon >= 0 and step > 0, got {horizon}, {step}")

    if graph.size == 1:
        logger.warning("The snapshot holds no frontier cluster, so there is nothing to tabulate")
        return pd.DataFrame(columns=COLUMNS)

    frames = []
    for planner in planners:
        if horizon == 0:
            frames.append(pd.DataFrame({"planner": [planner], "cost_m": [0.0], "cumulative_ig": [0.0]}))
            continue

        solution = plan_on_snapshot(
            graph=graph, planner=planner, budget=horizon, frontload=frontload, discount=discount, rng_seed=rng_seed
        )
        curve = cumulative_ig_curve(graph=graph, solution=solution, horizon=horizon, step=step)
        frames.append(curve.assign(planner=planner)[COLUMNS])

    return pd.concat(frames, ignore_index=True)
