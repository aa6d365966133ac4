from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.setup.paths import PARENT_DIR


_ = load_dotenv(PARENT_DIR / ".env")


class GeneralConfig(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=f"{PARENT_DIR}/.env",
        env_file_encoding="utf-8",
        env_prefix="FIGOP_",
        extra="allow"
    )

    log_level: str = "INFO"

    # Objective
    k1: float = 1.0
    k2: float = 50.0
    k3: float = 10.0
    exp_gamma: float = 0.7
    exp_k: float = 50.0

    # Guided local search
    penalty_factor: float = 0.3
    stall_rounds_before_restart: int = 5
    restarts_without_improvement: int = 20
    max_gls_rounds: int = 1000
    solver_time_limit: float = 1.0
    gls_evaluations_per_second: int = 50_000
    swap_tolerance: float = 1e-9
    brute_force_limit: int = 9

    # Metric and topological maps
    resolution: float = 0.5
    metric_half_extent: float = 20.0
    min_risk: float = 1.0
    max_risk: float = 10.0
    dbscan_eps: float = 3.0
    dbscan_min_pts: int = 2
    depth_boost: float = 2.0
    breadcrumb_spacing: float = 2.0
    breadcrumb_link_radius: float = 5.0
    frontier_links: int = 3

    # Sensor
    rays_per_scan: int = 720
    r_sense: float = 10.0
    long_range: float = 25.0

    # Mission
    speed: float = 1.0
    replan_period: float = 5.0
    sense_period: float = 1.0
    mission_time: float = 1800.0
    max_stationary_replans: int = 3

    # Benchmarking
    workers: int = 1
    expected_ig_horizon: float = 200.0
    expected_ig_step: float = 5.0
    coverage_curve_step: float = 10.0
    record_solver_time: bool = False


config = GeneralConfig()
planners = ["figop", "op", "greedy", "figlf", "exp"]


def proper_planner_name(planner: str) -> str:

    assert planner in planners, f"Unknown planner: {planner}"

    if planner == "figop":
        return "FIG-OP"
    elif planner == "figlf":
        return "FIG-LF"
    elif planner == "greedy":
        return "Greedy"
    else:
        return planner.upper()
