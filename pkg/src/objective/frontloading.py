"""
The frontloading function, the exponential discount it is compared against, and the exact
evaluation of a path's objective.

A path collects the information gain of every node it visits, multiplied by a factor that
depends on the cumulative action cost spent before reaching that node. The factor is
1 + k1 * S((a - k2) / k3) for FIG, where S is the reversed logistic function, identically 1
for the plain orienteering objective, and gamma^(a / k) for the exponential baseline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Literal, Sequence

import numpy as np
import pandas as pd
from scipy.special import expit

from src.setup.config import config
from src.setup.exceptions import ContractError, ParameterError

if TYPE_CHECKING:
    from src.world_model.figop_graph import FigOpGraph


@dataclass(frozen=True)
class FrontloadParams:
    k1: float = config.k1
    k2: float = config.k2
    k3: float = config.k3

    def __post_init__(self) -> None:
        values = (self.k1, self.k2, self.k3)
        if not all(math.isfinite(value) for value in values):
            raise ParameterError(f"Frontloading parameters must be finite, got {values}")
        if self.k1 < 0:
            raise ParameterError(f"k1 must be non-negative, got {self.k1}")
        if self.k2 <= 0 or self.k3 <= 0:
            raise ParameterError(f"k2 and k3 must be positive, got k2={self.k2}, k3={self.k3}")


@dataclass(frozen=True)
class ExpDiscountParams:
    gamma: float = config.exp_gamma
    k: float = config.exp_k

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gamma) and math.isfinite(self.k)):
            raise ParameterError(f"Discount parameters must be finite, got gamma={self.gamma}, k={self.k}")
        if not 0 < self.gamma <= 1:
            raise ParameterError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.k <= 0:
            raise ParameterError(f"k must be positive, got {self.k}")


def frontload_factor(a: float, p: FrontloadParams) -> float:
    """
    Evaluate F(a) = 1 + k1 / (1 + exp((a - k2) / k3)). Very large costs converge to 1.

    Args:
        a: the cumulative action cost in meters
        p: the shaping parameters

    Returns:
        float: a factor in (1, 1 + k1) when k1 > 0
    """
    return 1.0 + p.k1 * float(expit((p.k2 - a) / p.k3))


def exp_factor(a: float, p: ExpDiscountParams) -> float:
    return p.gamma ** (a / p.k)


@dataclass(frozen=True)
class ObjectiveKind:
    kind: Literal["FIG", "OP", "EXP"]
    frontload: FrontloadParams | None = None
    discount: ExpDiscountParams | None = None

    def __post_init__(self) -> None:
        if self.kind == "FIG" and (self.frontload is None or self.discount is not None):
            raise ParameterError("The FIG objective carries FrontloadParams and nothing else")
        elif self.kind == "EXP" and (self.discount is None or self.frontload is not None):
            raise ParameterError("The EXP objective carries ExpDiscountParams and nothing else")
        elif self.kind == "OP" and (self.frontload is not None or self.discount is not None):
            raise ParameterError("The OP objective carries no parameters")
        elif self.kind not in ("FIG", "OP", "EXP"):
            raise ParameterError(f"Unknown objective kind {self.kind}")

    @classmethod
    def fig(cls, params: FrontloadParams | None = None) -> ObjectiveKind:
        return cls(kind="FIG", frontload=params or FrontloadParams())

    @classmethod
    def op(cls) -> ObjectiveKind:
        return cls(kind="OP")

    @classmethod
    def exp(cls, params: ExpDiscountParams | None = None) -> ObjectiveKind:
        return cls(kind="EXP", discount=params or ExpDiscountParams())

    def factor_function(self) -> Callable[[float], float]:
        if self.kind == "FIG":
            params = self.frontload
            return lambda a: frontload_factor(a, params)
        elif self.kind == "EXP":
            params = self.discount
            return lambda a: exp_factor(a, params)
        else:
            return lambda a: 1.0

    def factor(self, a: float) -> float:
        return self.factor_function()(a)


@dataclass(frozen=True)
class PathEvaluation:
    objective_value: float
    total_cost: float
    feasible: bool
    per_node_cumulative_cost: tuple[float, ...]


class PathScorer:
    """
    Evaluates paths over a fixed graph and objective without the validation performed by
    evaluate_path. The solver calls this in its inner loops, so the cost matrix is held as
    nested lists and the factor function is resolved once.
    """
    def __init__(self, cost: np.ndarray, info_gain: Sequence[float], objective: ObjectiveKind):
        self.cost: list[list[float]] = np.asarray(cost, dtype=float).tolist()
        self.info_gain: list[float] = [float(value) for value in info_gain]
        self.factor = objective.factor_function()

    def score(self, path: Sequence[int]) -> tuple[float, float]:
        """
        Returns:
            tuple[float, float]: the objective value and the total cost of the path
        """
        value = 0.0
        spent = 0.0
        cost = self.cost
        for previous, node in zip(path, path[1:]):
            spent += cost[previous][node]
            value += self.factor(spent) * self.info_gain[node]
        return value, spent

    def path_cost(self, path: Sequence[int]) -> float:
        spent = 0.0
        for previous, node in zip(path, path[1:]):
            spent += self.cost[previous][node]
        return spent


def evaluate_path(path: Sequence[int], graph: FigOpGraph, objective: ObjectiveKind, budget: float) -> PathEvaluation:
    """
    Evaluate the objective of a path that starts at the root (node 0) of the graph.

    Infeasible paths still report their objective value; only the feasibility flag tells them
    apart, because local search has to compare infeasible intermediates.

    Args:
        path: node indices, root first
        graph: the graph supplying edge costs and information gain
        objective: the objective shape
        budget: the action cost budget in meters

    Returns:
        PathEvaluation: the objective value, total cost, feasibility and cumulative costs
    """
    if len(path) == 0 or path[0] != graph.root:
        raise ContractError(f"A path must start at the root node {graph.root}, got {list(path)}")
    if len(set(path)) != len(path):
        raise ContractError(f"A path may visit each node at most once, got {list(path)}")
    if any(node < 0 or node >= graph.size for node in path):
        raise ContractError(f"The path {list(path)} refers to nodes outside the graph")

    factor = objective.factor_function()
    value = 0.0
    spent = 0.0
    cumulative = [0.0]
    for previous, node in zip(path, path[1:]):
        spent += float(graph.cost[previous, node])
        value += factor(spent) * float(graph.info_gain[node])
        cumulative.append(spent)

    return PathEvaluation(
        objective_value=value,
        total_cost=spent,
        feasible=spent <= budget,
        per_node_cumulative_cost=tuple(cumulative)
    )


def objective_shapes(
    max_cost: float = 200.0,
    step: float = 1.0,
    frontload: FrontloadParams | None = None,
    discount: ExpDiscountParams | None = None
) -> pd.DataFrame:
    """
    Tabulate the FIG, OP and EXP factors against cumulative action cost.

    Returns:
        pd.DataFrame: columns cost_m, fig, op, exp
    """
    if step <= 0 or max_cost < 0:
        raise ParameterError(f"Need step > 0 and max_cost >= 0, got step={step}, max_cost={max_cost}")

    frontload = frontload or FrontloadParams()
    discount = discount or ExpDiscountParams()
    costs = np.arange(0.0, max_cost + step / 2, step)

    return pd.DataFrame(
        data={
            "cost_m": costs,
            "fig": 1.0 + frontload.k1 * expit((frontload.k2 - costs) / frontload.k3),
            "op": np.ones_like(costs),
            "exp": discount.gamma ** (costs / discount.k)
        }
    )
