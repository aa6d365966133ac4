"""
Plan stability under fluctuating risk: paired-seed missions under the FIG and EXP objectives,
with the heading change toward the first planned cluster collected after every replan.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger

from src.setup.config import config
from src.benchmarking.scenario import Scenario
from src.benchmarking.suites import RunResult, prepare_output_dir, run_suite
from src.setup.exceptions import ScenarioError
from src.simulation.mission import heading_sensitivity


OBJECTIVE_PLANNERS = ["figop", "exp"]


def heading_samples(results: list[RunResult], window: float | None = None) -> pd.DataFrame:
    rows = [
        {"planner": result.planner, "seed": result.seed, "index": index, "delta_rad": delta}
        for result in results
        for index, delta in enumerate(heading_sensitivity(result.log, window=window))
    ]
    return pd.DataFrame(rows, columns=["planner", "seed", "index", "delta_rad"])


def box_statistics(samples: pd.DataFrame) -> pd.DataFrame:
    """
    Returns:
        pd.DataFrame: per planner, the sample count, mean, quartiles, and whisker ends at the
        most extreme samples within 1.5 interquartile ranges of the box
    """
    rows = []
    for planner, group in samples.groupby("planner", sort=True):
        deltas = group["delta_rad"].to_numpy()
        q1, median, q3 = np.quantile(deltas, [0.25, 0.5, 0.75])
        spread = 1.5 * (q3 - q1)
        inside = deltas[(deltas >= q1 - spread) & (deltas <= q3 + spread)]
        rows.append({
            "planner": planner, "count": len(deltas), "mean": float(deltas.mean()),
            "q1": q1, "median": median, "q3": q3,
            "whisker_low": float(inside.min()), "whisker_high": float(inside.max())
        })

    return pd.DataFrame(rows, columns=["planner", "count", "mean", "q1", "median", "q3", "whisker_low", "whisker_high"])


def paired_medians(samples: pd.DataFrame, seeds: list[int], planners: list[str]) -> pd.DataFrame:
    """
    One row per seed with each planner's median heading change, so the runs line up pairwise.
    """
    columns = [f"{planner}_median_rad" for planner in planners]
    paired = pd.DataFrame({"seed": seeds, **{column: np.nan for column in columns}})

    for (seed, planner), median in samples.groupby(["seed", "planner"])["delta_rad"].median().items():
        if seed in seeds and planner in planners:
            paired.loc[paired["seed"] == seed, f"{planner}_median_rad"] = median

    return paired


def run_sensitivity(
    scenario: Scenario,
    out_dir: Path,
    workers: int = config.workers
) -> tuple[pd.DataFrame, pd.DataFrame, pd.DataFrame]:
    """
    Run the scenario's seeds under the FIG and EXP objectives and write the heading-change
    samples, their box statistics, and the per-seed pairing.

    Returns:
        tuple: the samples, the box statistics and the paired medians
    """
    missing = [planner for planner in OBJECTIVE_PLANNERS if planner not in scenario.planners]
    if missing:
        raise ScenarioError(f"The {scenario.name} scenario must list both figop and exp, it lacks {', '.join(missing)}")

    out_dir = prepare_output_dir(out_dir)
    if not scenario.mission.noise_sigma:
        logger.warning(f"The {scenario.name} scenario has no risk noise; heading changes will stay small")

    paired = scenario.model_copy(update={"planners": OBJECTIVE_PLANNERS})
    results = run_suite(scenario=paired, workers=workers)

    samples = heading_samples(results, window=scenario.sensitivity_window)
    statistics = box_statistics(samples)
    pairs = paired_medians(samples, seeds=scenario.seeds, planners=OBJECTIVE_PLANNERS)

    samples.to_csv(out_dir / f"{scenario.name}_heading_deltas.csv", index=False)
    statistics.to_csv(out_dir / f"{scenario.name}_heading_stats.csv", index=False)
    pairs.to_csv(out_dir / f"{scenario.name}_paired.csv", index=False)

    for _, row in statistics.iterrows():
        logger.info(f"{row['planner']}: median heading change {row['median']:.3f} rad over {row['count']} replans")

    return samples, statistics, pairs
