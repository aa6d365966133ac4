"""
The receding-horizon exploration loop: sense, cluster the frontiers, build the graph, solve,
follow the route toward the first planned cluster, and repeat until the mission time runs out.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Literal

import numpy as np
import pandas as pd
from loguru import logger

from src.objective.frontloading import ExpDiscountParams, FrontloadParams, ObjectiveKind
from src.setup.config import config, planners
from src.setup.exceptions import ParameterError
from src.simulation.environments import Environment
from src.simulation.sensing import RobotState, WorldModel, sense
from src.solver.baselines import Solution, solve_greedy
from src.solver.gls import SolveRequest, solve_gls
from src.world_model.figop_graph import FigOpGraph, build_figop_graph
from src.world_model.frontiers import FrontierCluster, SensorModel, cluster_frontiers
from src.world_model.metric_map import MetricMap, Occupancy, Point, metric_cost_field, trace_route
from src.world_model.topo_map import NodeKind


COLUMNS = ["t_s", "coverage_m2", "odometer_m", "heading_rad", "episode"]
EPSILON = 1e-9


@dataclass(frozen=True)
class RiskNoise:
    sigma: float = 0.0
    period: float = config.replan_period

    def __post_init__(self) -> None:
        if self.sigma < 0 or self.period <= 0:
            raise ParameterError(f"Need sigma >= 0 and period > 0, got sigma={self.sigma}, period={self.period}")


@dataclass(frozen=True)
class MissionConfig:
    planner: str = "figop"
    mission_time: float = config.mission_time
    replan_period: float = config.replan_period
    sense_period: float = config.sense_period
    speed: float = config.speed
    frontload: FrontloadParams = field(default_factory=FrontloadParams)
    discount: ExpDiscountParams = field(default_factory=ExpDiscountParams)
    sensor: SensorModel = field(default_factory=SensorModel)
    risk_noise: RiskNoise | None = None
    rng_seed: int = 0
    solver_time_limit: float = config.solver_time_limit
    max_stationary_replans: int = config.max_stationary_replans

    def __post_init__(self) -> None:
        if self.planner not in planners:
            raise ParameterError(f"Unknown planner {self.planner!r}; choose from {planners}")
        if self.mission_time < 0:
            raise ParameterError(f"The mission time cannot be negative, got {self.mission_time}")
        if self.replan_period <= 0 or self.sense_period <= 0 or self.speed <= 0:
            raise ParameterError("Replan period, sense period and speed must be positive")
        if self.max_stationary_replans < 1:
            raise ParameterError(f"Need at least one stationary replan, got {self.max_stationary_replans}")


@dataclass(frozen=True)
class PlannerWiring:
    objective: Callable[[MissionConfig], ObjectiveKind]
    solver: Literal["gls", "greedy"]
    force_topological: bool = False


PLANNERS: dict[str, PlannerWiring] = {
    "figop": PlannerWiring(objective=lambda cfg: ObjectiveKind.fig(cfg.frontload), solver="gls"),
    "op": PlannerWiring(objective=lambda cfg: ObjectiveKind.op(), solver="gls"),
    "greedy": PlannerWiring(objective=lambda cfg: ObjectiveKind.fig(cfg.frontload), solver="greedy"),
    "figlf": PlannerWiring(objective=lambda cfg: ObjectiveKind.fig(cfg.frontload), solver="gls", force_topological=True),
    "exp": PlannerWiring(objective=lambda cfg: ObjectiveKind.exp(cfg.discount), solver="gls")
}


@dataclass
class CoverageLog:
    planner: str = "figop"
    rows: list[tuple[float, float, float, float, int]] = field(default_factory=list)
    solver_times: list[float] = field(default_factory=list)
    end_reason: str = "mission time elapsed"
    free_area: float = math.inf

    def append(self, elapsed: float, coverage: float, odometer: float, heading: float, episode: int) -> None:
        self.rows.append((float(elapsed), float(coverage), float(odometer), float(heading), int(episode)))

    @property
    def episodes(self) -> int:
        return len({row[4] for row in self.rows if row[4] >= 0})

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=COLUMNS).astype({"episode": int})

    def write_csv(self, path: Path) -> None:
        self.to_frame().to_csv(path, index=False)

    @classmethod
    def read_csv(cls, path: Path, planner: str = "figop") -> CoverageLog:
        frame = pd.read_csv(path)
        return cls(planner=planner, rows=[tuple(row) for row in frame[COLUMNS].itertuples(index=False)])


def inject_risk_noise(metric_map: MetricMap, noise: RiskNoise, rng: np.random.Generator) -> MetricMap:
    """
    Redraw the risk of every free cell as its nominal risk times exp(g), g ~ Normal(0, sigma^2),
    clamped to the risk range.

    Returns:
        MetricMap: a perturbed copy of the map
    """
    perturbed = metric_map.copy()
    draws = rng.normal(0.0, noise.sigma, size=perturbed.occupancy.shape)
    free = perturbed.occupancy == Occupancy.FREE
    perturbed.risk[free] = np.clip(perturbed.nominal_risk[free] * np.exp(draws[free]), config.min_risk, config.max_risk)
    return perturbed


def heading_sensitivity(log: CoverageLog, window: float | None = None) -> list[float]:
    """
    Measure how much the heading toward the first planned cluster changes from one planning
    episode to the next.

    Args:
        log: a mission log
        window: only consider episodes starting within this many seconds of the first one;
                None considers them all

    Returns:
        list[float]: absolute heading changes, wrapped to [0, pi]
    """
    frame = log.to_frame()
    planned = frame[frame["episode"] >= 0]
    if planned.empty:
        return []

    starts = planned.groupby("episode", sort=True).first()
    if window is not None:
        starts = starts[starts["t_s"] <= starts["t_s"].iloc[0] + window]

    headings = starts["heading_rad"].dropna().to_numpy()
    if len(headings) < 2:
        return []

    return np.abs(np.angle(np.exp(1j * np.diff(headings)))).tolist()


class ClusterKeys:
    """
    Keeps cluster keys stable across episodes by matching every new centroid to the closest
    previous one within eps.
    """
    def __init__(self, eps: float = config.dbscan_eps):
        self.eps = eps
        self.previous: dict[int, Point] = {}
        self.next_key = 0

    def assign(self, clusters: list[FrontierCluster]) -> list[FrontierCluster]:
        pairs = sorted(
            (math.dist(cluster.centroid, centroid), index, key)
            for index, cluster in enumerate(clusters)
            for key, centroid in self.previous.items()
            if math.dist(cluster.centroid, centroid) <= self.eps
        )

        matched: dict[int, int] = {}
        for _, index, key in pairs:
            if index not in matched and key not in matched.values():
                matched[index] = key

        keyed = []
        for index, cluster in enumerate(clusters):
            if index not in matched:
                matched[index] = self.next_key
                self.next_key += 1
            keyed.append(replace(cluster, id=matched[index]))

        self.previous = {cluster.id: cluster.centroid for cluster in keyed}
        return keyed


@dataclass
class Plan:
    solution: Solution
    graph: FigOpGraph
    route: list[Point]
    heading: float


def _route_to(world: WorldModel, position: Point, cluster: FrontierCluster) -> list[Point]:
    """
    Risk-minimised waypoints toward a cluster: straight to its metric image when there is one,
    otherwise to the furthest node of its topological route that the metric window can reach.
    """
    metric = world.metric
    start = metric.world_to_cell(position)
    distances, predecessors = metric_cost_field(metric_map=metric, sources=[start], return_predecessors=True)

    goals = [cluster.metric_cell] if cluster.metric_cell is not None else []
    crumb = world.topo.nearest(position, kind=NodeKind.BREADCRUMB)
    for node_id in reversed(world.topo.route(crumb.id, cluster.topo_node)):
        cell = metric.world_to_cell(world.topo.node(node_id).position)
        if cell is not None and cell != start:
            goals.append(cell)

    for goal in goals:
        cells = trace_route(distances=distances[0], predecessors=predecessors[0], start=start, goal=goal)
        if cells:
            return [metric.cell_to_world(cell) for cell in cells]

    return []


def _advance(robot: RobotState, route: list[Point], duration: float) -> None:
    remaining = robot.speed * duration
    while remaining > EPSILON and route:
        target = route[0]
        gap = math.dist(robot.position, target)

        if gap > EPSILON:
            robot.heading = math.atan2(target[1] - robot.position[1], target[0] - robot.position[0])

        if gap <= remaining:
            robot.position = target
            robot.odometer += gap
            remaining -= gap
            route.pop(0)
        else:
            fraction = remaining / gap
            robot.position = (
                robot.position[0] + fraction * (target[0] - robot.position[0]),
                robot.position[1] + fraction * (target[1] - robot.position[1])
            )
            robot.odometer += remaining
            remaining = 0.0

    robot.elapsed += duration


def run_mission(
    env: Environment,
    cfg: MissionConfig,
    on_episode: Callable[[float, FigOpGraph], None] | None = None
) -> CoverageLog:
    """
    Explore an environment for cfg.mission_time simulated seconds.

    A new plan is made every replan_period seconds, and as soon as the robot reaches the end of
    its current route. The solver's budget is the distance the robot can still travel. One log
    row is written per sensing step. The mission ends early when no frontier can be planned for,
    or after cfg.max_stationary_replans consecutive replans without the robot moving.

    Args:
        env: the ground truth
        cfg: the mission configuration
        on_episode: called with the elapsed time and the graph of every planning episode

    Returns:
        CoverageLog: the time series of coverage, odometry and plan headings
    """
    rng = np.random.default_rng(cfg.rng_seed)
    wiring = PLANNERS[cfg.planner]
    objective = wiring.objective(cfg)

    robot = RobotState(position=env.start_position, speed=cfg.speed)
    world = WorldModel.start(env=env, position=robot.position)
    log = CoverageLog(planner=cfg.planner, free_area=env.free_area)
    keys = ClusterKeys()

    plan: Plan | None = None
    previous: Solution | None = None
    episode = -1
    last_replan = -math.inf
    next_noise = 0.0
    stationary_replans = 0
    odometer_at_replan = 0.0

    sense(env=env, robot=robot, sensor=cfg.sensor, world=world)

    while True:
        if cfg.risk_noise is not None and robot.elapsed >= next_noise - EPSILON:
            world.metric = inject_risk_noise(world.metric, cfg.risk_noise, rng)
            next_noise += cfg.risk_noise.period

        remaining = cfg.mission_time - robot.elapsed
        replan_due = plan is None or not plan.route or robot.elapsed - last_replan >= cfg.replan_period - EPSILON

        if remaining > EPSILON and replan_due:
            if robot.odometer - odometer_at_replan > EPSILON:
                stationary_replans = 0
            elif episode >= 0:
                stationary_replans += 1
            odometer_at_replan = robot.odometer

            episode += 1
            last_replan = robot.elapsed
            plan, reason = _replan(
                world=world, robot=robot, cfg=cfg, wiring=wiring, objective=objective, keys=keys,
                previous=previous, episode=episode, log=log, on_episode=on_episode
            )

            if plan is None or stationary_replans >= cfg.max_stationary_replans:
                log.end_reason = reason or "no progress"
                log.append(robot.elapsed, world.coverage, robot.odometer, math.nan, episode)
                logger.info(f"Mission ended early at {robot.elapsed:.0f}s: {log.end_reason}")
                break

            previous = plan.solution

        log.append(robot.elapsed, world.coverage, robot.odometer, plan.heading if plan else math.nan, episode)
        if remaining <= EPSILON:
            break

        _advance(robot, plan.route if plan else [], min(cfg.sense_period, remaining))
        sense(env=env, robot=robot, sensor=cfg.sensor, world=world)

    logger.debug(
        f"{cfg.planner} mission over: {world.coverage:.1f} m² covered, {robot.odometer:.1f} m travelled, "
        f"{log.episodes} plans"
    )
    return log


def _replan(
    world: WorldModel,
    robot: RobotState,
    cfg: MissionConfig,
    wiring: PlannerWiring,
    objective: ObjectiveKind,
    keys: ClusterKeys,
    previous: Solution | None,
    episode: int,
    log: CoverageLog,
    on_episode: Callable[[float, FigOpGraph], None] | None
) -> tuple[Plan | None, str | None]:

    clusters = cluster_frontiers(world.topo.frontiers(), eps=config.dbscan_eps, min_pts=config.dbscan_min_pts)
    if not clusters:
        return None, "no frontiers left"

    graph = build_figop_graph(
        robot=robot.position,
        clusters=keys.assign(clusters),
        metric_map=world.metric,
        topo=world.topo,
        force_topological=wiring.force_topological
    )

    if on_episode is not None:
        on_episode(robot.elapsed, graph)

    if graph.size == 1:
        return None, "no reachable frontier"

    budget = (cfg.mission_time - robot.elapsed) * cfg.speed
    started = time.perf_counter()
    if wiring.solver == "greedy":
        solution = solve_greedy(graph=graph, budget=budget, objective=objective)
    else:
        request = SolveRequest(
            graph=graph,
            objective=objective,
            budget=budget,
            seed_path=previous,
            time_limit=cfg.solver_time_limit,
            rng_seed=cfg.rng_seed + episode
        )
        solution = solve_gls(request)
    log.solver_times.append(time.perf_counter() - started)

    if len(solution.path) == 1:
        return None, "no frontier within budget"

    first = graph.clusters[solution.path[1] - 1]
    heading = math.atan2(first.centroid[1] - robot.position[1], first.centroid[0] - robot.position[0])
    route = _route_to(world=world, position=robot.position, cluster=first)
    return Plan(solution=solution, graph=graph, route=route, heading=heading), None


def collect_snapshots(env: Environment, cfg: MissionConfig, times: list[float]) -> list[tuple[float, FigOpGraph]]:
    """
    Run a mission and keep the graph of the first planning episode at or after each of the
    given times.
    """
    pending = sorted(times)
    snapshots = []

    def keep(elapsed: float, graph: FigOpGraph) -> None:
        while pending and elapsed >= pending[0] - EPSILON:
            pending.pop(0)
            if graph.size > 1:
                snapshots.append((elapsed, graph))

    run_mission(env=env, cfg=cfg, on_episode=keep)
    return snapshots
