"""
The figop command line.

    figop solve <instance> [--objective fig|op|exp] [--solver gls|greedy|brute] [--format csv|pretty]
    figop explore --scenario <file> [--out <dir>] [--workers N] [--planner NAME] [--seed N]
    figop expected-ig [<instance>] [--scenario <file>] [--out <dir>] [--horizon M]
    figop sensitivity --scenario <file> [--out <dir>] [--workers N]
    figop gen-env --kind maze|subway|junction|room [--out <file>] [--seed N]
    figop shapes --out <file>

Exit codes: 0 on success, 1 for usage, parse and scenario errors, 2 for anything else.
"""
from __future__ import annotations

import sys
from argparse import ArgumentParser, Namespace
from pathlib import Path

import pandas as pd
from loguru import logger

from src.benchmarking.expected_ig import expected_ig_table
from src.benchmarking.scenario import load_scenario
from src.benchmarking.sensitivity import run_sensitivity
from src.benchmarking.suites import SuiteRunner, prepare_output_dir
from src.objective.frontloading import ExpDiscountParams, FrontloadParams, ObjectiveKind, objective_shapes
from src.setup.config import config, planners
from src.setup.exceptions import InstanceParseError, ParameterError, ScenarioError
from src.setup.paths import ENVIRONMENTS_DIR, RESULTS_DIR, make_needed_directories
from src.simulation.environments import build_environment
from src.simulation.mission import collect_snapshots
from src.solver.baselines import brute_force_solve, solve_greedy
from src.solver.gls import SolveRequest, solve_gls
from src.solver.instance_io import read_instance, write_instance
from src.world_model.grid_io import write_grid


class UsageError(Exception):
    pass


class FigOpArgumentParser(ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> ArgumentParser:
    parser = FigOpArgumentParser(prog="figop", description="Frontloaded information gain exploration planning")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=FigOpArgumentParser)

    solve = subparsers.add_parser("solve", help="Solve a standalone instance file")
    _ = solve.add_argument("instance", type=Path)
    _ = solve.add_argument("--objective", choices=["fig", "op", "exp"], default="fig")
    _ = solve.add_argument("--solver", choices=["gls", "greedy", "brute"], default="gls")
    _ = solve.add_argument("--k1", type=float, default=config.k1)
    _ = solve.add_argument("--k2", type=float, default=config.k2)
    _ = solve.add_argument("--k3", type=float, default=config.k3)
    _ = solve.add_argument("--gamma", type=float, default=config.exp_gamma)
    _ = solve.add_argument("--k", type=float, default=config.exp_k)
    _ = solve.add_argument("--time-limit", type=float, default=config.solver_time_limit)
    _ = solve.add_argument("--seed", type=int, default=0)
    _ = solve.add_argument("--format", choices=["csv", "pretty"], default="pretty")

    explore = subparsers.add_parser("explore", help="Run an exploration suite")
    _ = explore.add_argument("--scenario", required=True)
    _ = explore.add_argument("--out", type=Path, default=RESULTS_DIR)
    _ = explore.add_argument("--workers", type=int, default=config.workers)
    _ = explore.add_argument("--planner", choices=planners, nargs="+")
    _ = explore.add_argument("--seed", type=int, help="Run a single repetition with this seed")

    expected = subparsers.add_parser("expected-ig", help="Expected accumulated information gain per planner")
    _ = expected.add_argument("instance", type=Path, nargs="?", help="A frozen graph in the instance format")
    _ = expected.add_argument("--scenario", help="Collect snapshots from a mission of this scenario instead")
    _ = expected.add_argument("--out", type=Path, default=RESULTS_DIR)
    _ = expected.add_argument("--planner", choices=planners, nargs="+", default=["figop", "op", "greedy"])
    _ = expected.add_argument("--horizon", type=float, default=config.expected_ig_horizon)
    _ = expected.add_argument("--snapshots", type=int, default=5)
    _ = expected.add_argument("--seed", type=int, default=0)

    sensitivity = subparsers.add_parser("sensitivity", help="Heading changes under fluctuating risk")
    _ = sensitivity.add_argument("--scenario", required=True)
    _ = sensitivity.add_argument("--out", type=Path, default=RESULTS_DIR)
    _ = sensitivity.add_argument("--workers", type=int, default=config.workers)

    gen_env = subparsers.add_parser("gen-env", help="Write a generated environment as a text grid")
    _ = gen_env.add_argument("--kind", choices=["maze", "subway", "junction", "room"], required=True)
    _ = gen_env.add_argument("--out", type=Path, help="Defaults to the environments directory")
    _ = gen_env.add_argument("--seed", type=int, default=0)
    _ = gen_env.add_argument("--width", type=int, default=20)
    _ = gen_env.add_argument("--height", type=int, default=20)
    _ = gen_env.add_argument("--rooms", type=int, default=8)

    shapes = subparsers.add_parser("shapes", help="Tabulate the objective factors against action cost")
    _ = shapes.add_argument("--out", type=Path, required=True)
    _ = shapes.add_argument("--max-cost", type=float, default=200.0)
    _ = shapes.add_argument("--step", type=float, default=1.0)

    return parser


def solve_command(args: Namespace) -> None:
    graph, budget = read_instance(args.instance)

    if args.objective == "fig":
        objective = ObjectiveKind.fig(FrontloadParams(k1=args.k1, k2=args.k2, k3=args.k3))
    elif args.objective == "exp":
        objective = ObjectiveKind.exp(ExpDiscountParams(gamma=args.gamma, k=args.k))
    else:
        objective = ObjectiveKind.op()

    if args.solver == "greedy":
        solution = solve_greedy(graph=graph, budget=budget, objective=objective)
    elif args.solver == "brute":
        solution = brute_force_solve(graph=graph, objective=objective, budget=budget)
    else:
        request = SolveRequest(graph=graph, objective=objective, budget=budget, time_limit=args.time_limit, rng_seed=args.seed)
        solution = solve_gls(request)

    path = list(solution.path)
    fidelity = [str(graph.fidelity[a, b]) for a, b in zip(path, path[1:])]

    if args.format == "csv":
        row = pd.DataFrame([{
            "path": " ".join(map(str, path)),
            "objective": f"{solution.objective_value:.6f}",
            "total_cost": f"{solution.evaluation.total_cost:.6f}",
            "fidelity": " ".join(fidelity)
        }])
        print(row.to_csv(index=False), end="")
    else:
        print(f"path: {' -> '.join(map(str, path))}")
        print(f"objective: {solution.objective_value:.6f}")
        print(f"total cost: {solution.evaluation.total_cost:.6f}")
        print(f"fidelity: {' '.join(fidelity) if fidelity else '-'}")


def explore_command(args: Namespace) -> None:
    scenario = load_scenario(args.scenario)
    updates = {}
    if args.planner:
        updates["planners"] = args.planner
    if args.seed is not None:
        updates.update(seed_base=args.seed, repetitions=1)
    if updates:
        scenario = scenario.model_copy(update=updates)

    runner = SuiteRunner(scenario=scenario, out_dir=args.out, workers=args.workers)
    _ = runner.run()
    _ = runner.write()
    runner.report()


def expected_ig_command(args: Namespace) -> None:
    out_dir = prepare_output_dir(args.out)

    if args.instance is not None:
        graph, _ = read_instance(args.instance)
        table = expected_ig_table(graph=graph, planners=args.planner, horizon=args.horizon, rng_seed=args.seed)
        path = out_dir / f"{args.instance.stem}_expected_ig.csv"
    elif args.scenario is not None:
        scenario = load_scenario(args.scenario)
        mission = scenario.mission_for("figop", scenario.seed_base + args.seed)
        times = [mission.mission_time * (index + 1) / (args.snapshots + 1) for index in range(args.snapshots)]
        snapshots = collect_snapshots(env=scenario.environment_for(scenario.seed_base + args.seed), cfg=mission, times=times)

        frames = []
        for index, (elapsed, graph) in enumerate(snapshots):
            write_instance(out_dir / f"{scenario.name}_snapshot{index}.figop", graph=graph, budget=args.horizon)
            table = expected_ig_table(graph=graph, planners=args.planner, horizon=args.horizon, rng_seed=args.seed)
            frames.append(table.assign(snapshot=index, t_s=elapsed))

        table = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
        path = out_dir / f"{scenario.name}_expected_ig.csv"
    else:
        raise UsageError("expected-ig needs an instance file or --scenario")

    table.to_csv(path, index=False)
    logger.success(f"Wrote the expected information gain table to {path}")


def sensitivity_command(args: Namespace) -> None:
    scenario = load_scenario(args.scenario)
    _ = run_sensitivity(scenario=scenario, out_dir=args.out, workers=args.workers)


def gen_env_command(args: Namespace) -> None:
    descriptors = {
        "maze": {"kind": "maze", "seed": args.seed, "width": args.width, "height": args.height},
        "subway": {"kind": "subway", "seed": args.seed, "room_count": args.rooms},
        "junction": {"kind": "junction", "seed": args.seed},
        "room": {"kind": "room", "seed": args.seed}
    }
    env = build_environment(descriptors[args.kind])
    out = args.out or ENVIRONMENTS_DIR / f"{args.kind}_seed{args.seed}.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_grid(out, occupancy=env.occupancy, resolution=env.resolution)
    logger.success(f"Wrote a {args.kind} environment ({env.free_area:.0f} m² free) to {out}")


def shapes_command(args: Namespace) -> None:
    args.out.parent.mkdir(parents=True, exist_ok=True)
    objective_shapes(max_cost=args.max_cost, step=args.step).to_csv(args.out, index=False)
    logger.success(f"Wrote the objective shapes to {args.out}")


DEFAULT_OUTPUTS = ["explore", "expected-ig", "sensitivity", "gen-env"]

COMMANDS = {
    "solve": solve_command,
    "explore": explore_command,
    "expected-ig": expected_ig_command,
    "sensitivity": sensitivity_command,
    "gen-env": gen_env_command,
    "shapes": shapes_command
}


def main(argv: list[str] | None = None) -> int:
    logger.remove()
    _ = logger.add(sys.stderr, level=config.log_level)

    try:
        args = build_parser().parse_args(argv)
        if args.command in DEFAULT_OUTPUTS and getattr(args, "out", None) in (None, RESULTS_DIR):
            make_needed_directories()
        COMMANDS[args.command](args)
    except (UsageError, ParameterError, InstanceParseError, ScenarioError) as error:
        logger.error(str(error))
        return 1
    except Exception as error:
        logger.error(f"{type(error).__name__}: {error}")
        return 2

    return 0


if __name__ == "__main__":
    sys.exit(main())
