import math

import numpy as np
import pandas as pd
import pytest

from src.benchmarking.scenario import MissionSettings, Scenario, load_scenario
from src.benchmarking.suites import (
    METRICS, SuiteRunner, coverage_at, paired_sign_test, prepare_output_dir, run_metrics, time_to_fraction
)
from src.setup.config import config
from src.simulation.mission import CoverageLog


def small_scenario(name: str = "small", planners=("figop",), repetitions: int = 1, kind: str = "room") -> Scenario:
    environment = {"kind": "room", "side": 8.0} if kind == "room" else {"kind": "junction", "arm_length": 10.0}
    return Scenario(
        name=name,
        environment=environment,
        mission=MissionSettings(mission_time=15.0, rays_per_scan=360, solver_time_limit=0.1),
        planners=list(planners),
        repetitions=repetitions
    )


def ramp_log() -> CoverageLog:
    log = CoverageLog(free_area=100.0)
    for t, coverage in [(0.0, 0.0), (10.0, 50.0), (20.0, 100.0)]:
        log.append(elapsed=t, coverage=coverage, odometer=t, heading=0.0, episode=0)
    return log


def test_a_single_run_writes_three_files(tmp_path):
    runner = SuiteRunner(small_scenario(name="tiny"), out_dir=tmp_path / "out", workers=1)
    runner.run()
    written = runner.write()

    assert sorted(path.name for path in written) == ["tiny_coverage_curves.csv", "tiny_figop_seed0.csv", "tiny_summary.csv"]
    assert sorted(path.name for path in (tmp_path / "out").iterdir()) == sorted(path.name for path in written)


def test_summary_aggregates_match_the_run_rows(tmp_path):
    runner = SuiteRunner(small_scenario(kind="junction", planners=("figop", "greedy"), repetitions=5), out_dir=tmp_path)
    runner.run()
    summary = runner.summary()

    assert list(summary.columns) == ["scenario", "planner", "seed", "row", *METRICS]
    for planner in ("figop", "greedy"):
        rows = summary[summary["planner"] == planner]
        runs = rows[rows["row"] == "run"][METRICS].astype(float)
        mean = rows[rows["row"] == "mean"][METRICS].astype(float).iloc[0]
        std = rows[rows["row"] == "std"][METRICS].astype(float).iloc[0]

        assert len(runs) == 5
        np.testing.assert_allclose(mean.to_numpy(), runs.mean().to_numpy(), rtol=1e-12, equal_nan=True)
        np.testing.assert_allclose(std.to_numpy(), runs.std(ddof=1).to_numpy(), rtol=1e-12, equal_nan=True)


def test_coverage_curves_average_the_runs(tmp_path):
    runner = SuiteRunner(small_scenario(kind="junction", repetitions=2), out_dir=tmp_path)
    results = runner.run()
    curves = runner.coverage_curves(step=5.0)

    assert list(curves.columns) == ["planner", "t_s", "mean", "std"]
    assert list(curves["t_s"]) == [0.0, 5.0, 10.0, 15.0]
    expected = np.mean([coverage_at(result.log, np.array([15.0]))[0] for result in results])
    assert curves["mean"].iloc[-1] == pytest.approx(expected)


def test_solver_time_is_not_recorded_by_default(tmp_path):
    assert config.record_solver_time is False
    runner = SuiteRunner(small_scenario(kind="junction"), out_dir=tmp_path)
    runner.run()
    assert runner.summary()["mean_solver_time_s"].isna().all()


def test_outputs_are_reproducible_across_worker_counts(tmp_path):
    scenario = small_scenario(kind="junction", planners=("figop", "op"), repetitions=2)

    contents = []
    for workers, folder in [(1, "serial"), (2, "parallel"), (1, "again")]:
        runner = SuiteRunner(scenario, out_dir=tmp_path / folder, workers=workers)
        runner.run()
        contents.append({path.name: path.read_bytes() for path in runner.write()})

    assert contents[0] == contents[1] == contents[2]


def test_coverage_is_interpolated_and_held():
    log = ramp_log()
    np.testing.assert_allclose(coverage_at(log, np.array([0.0, 5.0, 15.0, 20.0, 60.0])), [0.0, 25.0, 75.0, 100.0, 100.0])
    assert np.all(coverage_at(CoverageLog(), np.array([1.0, 2.0])) == 0.0)


def test_time_to_fraction_interpolates():
    assert time_to_fraction(ramp_log(), 0.95) == pytest.approx(19.0 / 60)
    assert time_to_fraction(ramp_log(), 0.0) == 0.0

    short = CoverageLog(free_area=1000.0, rows=ramp_log().rows)
    assert math.isnan(time_to_fraction(short))


def test_run_metrics():
    metrics = run_metrics(ramp_log(), mission_time=20.0, horizon=10.0)
    assert set(metrics) == set(METRICS)
    assert metrics["coverage_rate_m2_min"] == pytest.approx(100.0 / (20.0 / 60))
    assert metrics["coverage_at_horizon_m2"] == pytest.approx(50.0)
    assert metrics["mean_heading_delta_rad"] == 0.0 or math.isnan(metrics["mean_heading_delta_rad"])


def test_sign_test():
    assert paired_sign_test(list(range(10)), [value + 1 for value in range(10)]) == pytest.approx(0.5 ** 10)
    assert paired_sign_test([1.0, 2.0], [1.0, 2.0]) == 1.0
    assert paired_sign_test([2.0, 3.0, 4.0], [1.0, 2.0, 3.0]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        paired_sign_test([1.0], [1.0, 2.0])


def test_output_directories_are_created(tmp_path):
    nested = prepare_output_dir(tmp_path / "a" / "b")
    assert nested.is_dir()


def test_summary_reads_back_as_a_table(tmp_path):
    runner = SuiteRunner(small_scenario(name="tiny", repetitions=2), out_dir=tmp_path)
    runner.run()
    runner.write()
    frame = pd.read_csv(tmp_path / "tiny_summary.csv")
    assert list(frame["row"]) == ["run", "run", "mean", "std"]


def paired_runs(scenario: Scenario, planners: list[str], metric: str, tmp_path, fill: float | None = None) -> dict[str, list[float]]:
    """Run ten seeds of a shipped scenario and return one metric per planner, ordered by seed."""
    runner = SuiteRunner(scenario.model_copy(update={"planners": planners, "repetitions": 10}), out_dir=tmp_path)
    runner.run()
    runs = runner.summary().query("row == 'run'").sort_values(["planner", "seed"])
    values = runs[metric].astype(float)
    if fill is not None:
        values = values.fillna(fill)
    return {planner: values[runs["planner"] == planner].tolist() for planner in planners}


@pytest.mark.slow
def test_frontloading_reaches_full_coverage_of_subways_sooner(tmp_path):
    scenario = load_scenario("subway-small")
    unfinished = scenario.mission.mission_time / 60
    minutes = paired_runs(scenario, ["figop", "op", "greedy"], "time_to_95_min", tmp_path, fill=unfinished)

    for baseline in ("op", "greedy"):
        assert np.mean(minutes["figop"]) < np.mean(minutes[baseline])
        assert paired_sign_test(minutes["figop"], minutes[baseline]) < 0.1


@pytest.mark.slow
def test_multi_fidelity_costs_cover_more_of_a_maze(tmp_path):
    coverage = paired_runs(load_scenario("maze-small"), ["figop", "figlf"], "coverage_at_horizon_m2", tmp_path)

    assert np.mean(coverage["figop"]) > np.mean(coverage["figlf"])
    assert paired_sign_test(coverage["figlf"], coverage["figop"]) < 0.1
