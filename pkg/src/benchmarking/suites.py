"""
Runs the missions of a scenario, computes per-run metrics and per-planner aggregates, and writes
the run logs, the summary table and the mean coverage curves as CSV files.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger
from scipy.stats import binomtest
from tqdm import tqdm

from src.setup.config import config, proper_planner_name
from src.benchmarking.scenario import Scenario
from src.simulation.mission import CoverageLog, heading_sensitivity, run_mission


METRICS = [
    "coverage_rate_m2_min",
    "coverage_at_horizon_m2",
    "time_to_95_min",
    "mean_heading_delta_rad",
    "median_heading_delta_rad",
    "mean_solver_time_s"
]


@dataclass(frozen=True)
class RunResult:
    planner: str
    seed: int
    log: CoverageLog


def run_one(scenario: Scenario, planner: str, seed: int) -> RunResult:
    env = scenario.environment_for(seed)
    log = run_mission(env=env, cfg=scenario.mission_for(planner, seed))
    return RunResult(planner=planner, seed=seed, log=log)


def run_suite(scenario: Scenario, workers: int = config.workers) -> list[RunResult]:
    """
    Run every (planner, seed) pair of the scenario, in parallel when workers > 1.

    Returns:
        list[RunResult]: sorted by planner and seed whatever order the runs finished in
    """
    tasks = scenario.runs()
    description = f"Running the {scenario.name} suite..."

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(run_one, scenario, planner, seed) for planner, seed in tasks]
            results = [future.result() for future in tqdm(futures, desc=description)]
    else:
        results = [run_one(scenario, planner, seed) for planner, seed in tqdm(tasks, desc=description)]

    return sorted(results, key=lambda result: (result.planner, result.seed))


def coverage_at(log: CoverageLog, times: np.ndarray) -> np.ndarray:
    """
    Coverage at the given times, interpolated linearly between log samples and held at the last
    value once the log ends.
    """
    frame = log.to_frame()
    if frame.empty:
        return np.zeros(len(times))
    return np.interp(times, frame["t_s"].to_numpy(), frame["coverage_m2"].to_numpy())


def time_to_fraction(log: CoverageLog, fraction: float = 0.95) -> float:
    """
    Returns:
        float: the first time, in minutes, at which coverage reaches the fraction of the free
        area, interpolated linearly between samples; NaN if it never does
    """
    frame = log.to_frame()
    target = fraction * log.free_area
    reached = np.flatnonzero(frame["coverage_m2"].to_numpy() >= target)
    if len(reached) == 0:
        return math.nan

    index = int(reached[0])
    t, coverage = frame["t_s"].to_numpy(), frame["coverage_m2"].to_numpy()
    if index == 0:
        return float(t[0]) / 60

    t0, t1, c0, c1 = t[index - 1], t[index], coverage[index - 1], coverage[index]
    seconds = t1 if c1 == c0 else t0 + (target - c0) * (t1 - t0) / (c1 - c0)
    return float(seconds) / 60


def run_metrics(log: CoverageLog, mission_time: float, horizon: float) -> dict[str, float]:
    deltas = heading_sensitivity(log)
    minutes = mission_time / 60
    final_coverage = float(coverage_at(log, np.array([mission_time]))[0])

    return {
        "coverage_rate_m2_min": final_coverage / minutes if minutes > 0 else math.nan,
        "coverage_at_horizon_m2": float(coverage_at(log, np.array([horizon]))[0]),
        "time_to_95_min": time_to_fraction(log),
        "mean_heading_delta_rad": float(np.mean(deltas)) if deltas else math.nan,
        "median_heading_delta_rad": float(np.median(deltas)) if deltas else math.nan,
        "mean_solver_time_s": (
            float(np.mean(log.solver_times)) if config.record_solver_time and log.solver_times else math.nan
        )
    }


def paired_sign_test(first: list[float], second: list[float]) -> float:
    """
    One-sided sign test on paired samples.

    Returns:
        float: the p-value for the hypothesis that first tends to be smaller than second; ties
        are dropped, and 1.0 is returned when every pair is tied
    """
    if len(first) != len(second):
        raise ValueError(f"Paired samples must have equal lengths, got {len(first)} and {len(second)}")

    differences = [a - b for a, b in zip(first, second) if not (math.isnan(a) or math.isnan(b)) and a != b]
    if not differences:
        return 1.0

    smaller = sum(difference < 0 for difference in differences)
    return float(binomtest(k=smaller, n=len(differences), p=0.5, alternative="greater").pvalue)


class SuiteRunner:
    def __init__(self, scenario: Scenario, out_dir: Path, workers: int = config.workers):
        """
        Args:
            scenario: the scenario to run
            out_dir: where the CSV files go; it is created if needed and must be writable
            workers: how many missions to run at once
        """
        self.scenario = scenario
        self.out_dir = prepare_output_dir(out_dir)
        self.workers = workers
        self.results: list[RunResult] = []

    def run(self) -> list[RunResult]:
        self.results = run_suite(scenario=self.scenario, workers=self.workers)
        logger.success(f"Finished {len(self.results)} runs of {self.scenario.name}")
        return self.results

    def summary(self) -> pd.DataFrame:
        """
        One row per run, followed by the mean and the sample standard deviation of every metric
        for each planner.
        """
        rows = [
            {
                "scenario": self.scenario.name,
                "planner": result.planner,
                "seed": result.seed,
                "row": "run",
                **run_metrics(
                    log=result.log,
                    mission_time=self.scenario.settings_for(result.planner).mission_time,
                    horizon=self.scenario.horizon
                )
            }
            for result in self.results
        ]
        runs = pd.DataFrame(rows, columns=["scenario", "planner", "seed", "row", *METRICS])

        aggregates = []
        for planner, group in runs.groupby("planner", sort=True):
            for statistic in ("mean", "std"):
                values = group[METRICS].agg(statistic) if statistic == "mean" else group[METRICS].std(ddof=1)
                aggregates.append({"scenario": self.scenario.name, "planner": planner, "seed": pd.NA, "row": statistic, **values.to_dict()})

        return pd.concat([runs, pd.DataFrame(aggregates, columns=runs.columns)], ignore_index=True)

    def coverage_curves(self, step: float = config.coverage_curve_step) -> pd.DataFrame:
        mission_time = self.scenario.mission.mission_time
        times = np.arange(0.0, mission_time + step / 2, step)
        frames = []

        for planner in sorted({result.planner for result in self.results}):
            curves = np.array([coverage_at(result.log, times) for result in self.results if result.planner == planner])
            frames.append(
                pd.DataFrame({
                    "planner": planner,
                    "t_s": times,
                    "mean": curves.mean(axis=0),
                    "std": curves.std(axis=0, ddof=1) if len(curves) > 1 else np.full(len(times), np.nan)
                })
            )

        return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=["planner", "t_s", "mean", "std"])

    def write(self) -> list[Path]:
        name = self.scenario.name
        written = []

        for result in self.results:
            path = self.out_dir / f"{name}_{result.planner}_seed{result.seed}.csv"
            result.log.write_csv(path)
            written.append(path)

        summary_path = self.out_dir / f"{name}_summary.csv"
        self.summary().to_csv(summary_path, index=False)
        curves_path = self.out_dir / f"{name}_coverage_curves.csv"
        self.coverage_curves().to_csv(curves_path, index=False)

        written += [summary_path, curves_path]
        logger.success(f"Wrote {len(written)} files to {self.out_dir}")
        return written

    def report(self) -> None:
        summary = self.summary()
        for _, row in summary[summary["row"] == "mean"].iterrows():
            logger.info(
                f"{proper_planner_name(row['planner'])}: {row['coverage_rate_m2_min']:.1f} m²/min, "
                f"95% coverage after {row['time_to_95_min']:.1f} min"
            )


def prepare_output_dir(out_dir: Path) -> Path:
    """
    Raises:
        OSError: when the directory cannot be created or written to
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise PermissionError(f"The output directory {out_dir} is not writable")
    return out_dir
