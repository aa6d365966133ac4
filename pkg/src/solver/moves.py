"""
Local search machinery for the guided local search: edge penalties, move counters, and the
neighbourhood moves.

Paths are lists of graph node indices starting with the root. A move takes a feasible path and
returns either an improved feasible path or the very same list. Moves that add or remove nodes
compare paths on the augmented objective (true objective minus the weighted edge penalties);
moves that only reorder visited nodes compare on the true objective, with lower total cost
breaking ties.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from src.objective.frontloading import ObjectiveKind, PathScorer
from src.setup.config import config
from src.world_model.figop_graph import FigOpGraph


Edge = tuple[int, int]


def edge_of(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


@dataclass
class PenaltyState:
    counts: dict[Edge, int] = field(default_factory=dict)
    lam: float = 0.0

    def penalty(self, a: int, b: int) -> int:
        return self.counts.get(edge_of(a, b), 0)

    def penalty_term(self, path: list[int], cost: list[list[float]]) -> float:
        if not self.counts:
            return 0.0
        return sum(self.penalty(a, b) * cost[a][b] for a, b in zip(path, path[1:]))

    def penalize(self, path: list[int], cost: list[list[float]], rng: np.random.Generator) -> Edge | None:
        """
        Penalize the edge of the path with the highest utility a(e) / (1 + penalty(e)).

        Returns:
            Edge | None: the penalized edge, or None for a path without edges
        """
        edges = [edge_of(a, b) for a, b in zip(path, path[1:])]
        if not edges:
            return None

        utilities = np.array([cost[a][b] / (1 + self.counts.get((a, b), 0)) for a, b in edges])
        best = np.flatnonzero(utilities == utilities.max())
        chosen = edges[int(rng.choice(best))] if len(best) > 1 else edges[int(best[0])]

        self.counts[chosen] = self.counts.get(chosen, 0) + 1
        return chosen


@dataclass
class MoveStats:
    evaluations: Counter = field(default_factory=Counter)
    accepted: Counter = field(default_factory=Counter)

    @property
    def total_evaluations(self) -> int:
        return sum(self.evaluations.values())

    def reset(self) -> None:
        self.evaluations.clear()
        self.accepted.clear()


class SearchContext:
    """
    Everything a move needs to score candidate paths on one instance.
    """
    def __init__(
        self,
        graph: FigOpGraph,
        objective: ObjectiveKind,
        budget: float,
        penalties: PenaltyState | None = None,
        stats: MoveStats | None = None,
        tolerance: float = config.swap_tolerance,
        evaluation_limit: int | None = None
    ):
        self.graph = graph
        self.budget = budget
        self.scorer = PathScorer(cost=graph.cost, info_gain=graph.info_gain, objective=objective)
        self.cost = self.scorer.cost
        self.penalties = penalties or PenaltyState()
        self.stats = stats or MoveStats()
        self.tolerance = tolerance
        self.evaluation_limit = evaluation_limit
        self.evaluations = 0

    def evaluate(self, path: list[int], move: str) -> tuple[float, float]:
        self.stats.evaluations[move] += 1
        self.evaluations += 1
        return self.scorer.score(path)

    def exhausted(self) -> bool:
        return self.evaluation_limit is not None and self.evaluations >= self.evaluation_limit

    def augmented(self, path: list[int], value: float) -> float:
        return value - self.penalties.lam * self.penalties.penalty_term(path, self.cost)

    def unvisited(self, path: list[int]) -> list[int]:
        visited = set(path)
        return [node for node in range(self.graph.size) if node not in visited]

    def is_better_order(self, value: float, cost: float, current_value: float, current_cost: float) -> bool:
        if value > current_value + self.tolerance:
            return True
        return abs(value - current_value) <= self.tolerance and cost < current_cost


def _best_augmented(
    path: list[int],
    candidates: list[list[int]],
    context: SearchContext,
    move: str
) -> list[int]:
    current_value, _ = context.scorer.score(path)
    best_path, best_score = path, context.augmented(path, current_value)

    for candidate in candidates:
        value, cost = context.evaluate(candidate, move)
        if cost > context.budget:
            continue

        score = context.augmented(candidate, value)
        if score > best_score + context.tolerance:
            best_path, best_score = candidate, score

    if best_path is not path:
        context.stats.accepted[move] += 1
    return best_path


def local_move_insert(path: list[int], context: SearchContext) -> list[int]:
    """
    Insert the single unvisited node, at the single position, that best improves the augmented
    objective while keeping the path within budget.
    """
    candidates = [
        path[:position] + [node] + path[position:]
        for node in context.unvisited(path)
        for position in range(1, len(path) + 1)
    ]
    return _best_augmented(path=path, candidates=candidates, context=context, move="insert")


def local_move_drop(path: list[int], context: SearchContext) -> list[int]:
    candidates = [path[:position] + path[position + 1:] for position in range(1, len(path))]
    return _best_augmented(path=path, candidates=candidates, context=context, move="drop")


def local_move_replace(path: list[int], context: SearchContext) -> list[int]:
    """
    Exchange one visited node for one unvisited node in the same position.
    """
    candidates = [
        path[:position] + [node] + path[position + 1:]
        for position in range(1, len(path))
        for node in context.unvisited(path)
    ]
    return _best_augmented(path=path, candidates=candidates, context=context, move="replace")


def exchange_pairs(length: int) -> list[tuple[int, int]]:
    """
    Every pair of visited positions i < j of a path with `length` nodes, in forward order.
    """
    return [(i, j) for i in range(1, length - 1) for j in range(i + 1, length)]


def _scan_exchanges(path: list[int], context: SearchContext, move: str, pairs: list[tuple[int, int]]) -> list[int]:
    current = list(path)
    current_value, current_cost = context.scorer.score(current)
    changed = False

    for i, j in pairs:
        candidate = list(current)
        candidate[i], candidate[j] = candidate[j], candidate[i]
        value, cost = context.evaluate(candidate, move)

        if cost <= context.budget and context.is_better_order(value, cost, current_value, current_cost):
            current, current_value, current_cost = candidate, value, cost
            context.stats.accepted[move] += 1
            changed = True

    return current if changed else path


def local_move_swap(path: list[int], context: SearchContext) -> list[int]:
    """
    Scan every pair of visited positions from the root toward the end of the path, exchanging
    the two nodes whenever that raises the objective, or keeps it equal while shortening the path.
    Each accepted exchange becomes the path the rest of the scan works on.
    """
    return _scan_exchanges(path=path, context=context, move="swap", pairs=exchange_pairs(len(path)))


def local_move_backward_swap(path: list[int], context: SearchContext) -> list[int]:
    """
    The same exchanges as local_move_swap, scanned from the end of the path toward the root, so
    late nodes get the first chance to move forward.
    """
    pairs = exchange_pairs(len(path))[::-1]
    return _scan_exchanges(path=path, context=context, move="backward_swap", pairs=pairs)


def local_move_relocate(path: list[int], context: SearchContext, max_segment: int = 3) -> list[int]:
    """
    Move a run of up to `max_segment` consecutive visited nodes to the best other position, keeping
    their order. Compared on the true objective with cost breaking ties.
    """
    best_path = path
    best_value, best_cost = context.scorer.score(path)

    for start in range(1, len(path)):
        for length in range(1, min(max_segment, len(path) - start) + 1):
            segment = path[start:start + length]
            rest = path[:start] + path[start + length:]

            for position in range(1, len(rest) + 1):
                if position == start:
                    continue

                candidate = rest[:position] + segment + rest[position:]
                value, cost = context.evaluate(candidate, "relocate")
                if cost <= context.budget and context.is_better_order(value, cost, best_value, best_cost):
                    best_path, best_value, best_cost = candidate, value, cost

    if best_path is not path:
        context.stats.accepted["relocate"] += 1
    return best_path


def local_move_two_opt(path: list[int], context: SearchContext) -> list[int]:
    """
    Reverse a segment of at least three visited nodes. Shorter reversals are plain swaps.
    """
    current = list(path)
    current_value, current_cost = context.scorer.score(current)
    changed = False

    for i in range(1, len(path)):
        for j in range(i + 2, len(path)):
            candidate = current[:i] + current[i:j + 1][::-1] + current[j + 1:]
            value, cost = context.evaluate(candidate, "two_opt")

            if cost <= context.budget and context.is_better_order(value, cost, current_value, current_cost):
                current, current_value, current_cost = candidate, value, cost
                context.stats.accepted["two_opt"] += 1
                changed = True

    return current if changed else path


def perturb(path: list[int], context: SearchContext, rng: np.random.Generator) -> list[int]:
    """
    Drop a random number of visited nodes, then try one random unvisited node at a random
    position. Costs need not obey the triangle inequality, so the tail is cut until the
    shortened path fits the budget again.
    """
    visited = path[1:]
    kept = list(path)
    if visited:
        count = int(rng.integers(1, len(visited) + 1))
        removed = {int(node) for node in rng.choice(visited, size=count, replace=False)}
        kept = [node for node in path if node not in removed]
        while len(kept) > 1 and context.evaluate(kept, "perturb")[1] > context.budget:
            kept.pop()
    else:
        removed = set()

    outside = [node for node in context.unvisited(kept) if node not in removed]
    if outside:
        node = outside[int(rng.integers(len(outside)))]
        position = int(rng.integers(1, len(kept) + 1))
        candidate = kept[:position] + [node] + kept[position:]
        if context.evaluate(candidate, "perturb")[1] <= context.budget:
            kept = candidate

    return kept


MOVES: dict[str, Callable[[list[int], SearchContext], list[int]]] = {
    "insert": local_move_insert,
    "replace": local_move_replace,
    "swap": local_move_swap,
    "backward_swap": local_move_backward_swap,
    "relocate": local_move_relocate,
    "two_opt": local_move_two_opt,
    "drop": local_move_drop
}


def local_search_sweep(path: list[int], context: SearchContext) -> tuple[list[int], bool]:
    """
    Apply every move of the repertoire once, in order.

    Returns:
        tuple[list[int], bool]: the resulting path, and whether any move changed it
    """
    improved = False
    for move in MOVES.values():
        result = move(path, context)
        if result is not path:
            path, improved = result, True

    return path, improved


def local_search(path: list[int], context: SearchContext, max_sweeps: int = 50) -> list[int]:
    for _ in range(max_sweeps):
        path, improved = local_search_sweep(path, context)
        if not improved or context.exhausted():
            break
    return path
