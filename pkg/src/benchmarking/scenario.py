"""
Scenario files: TOML documents describing an environment, the mission settings shared by every
planner, optional per-planner overrides in [planner.<name>] sections, and how many seeded
repetitions to run. See scenarios/tiny-room.toml for a commented example.
"""
from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.objective.frontloading import ExpDiscountParams, FrontloadParams
from src.setup.config import config, planners
from src.setup.exceptions import FigOpError, ScenarioError
from src.setup.paths import SCENARIOS_DIR
from src.simulation.environments import GENERATORS, Environment, build_environment
from src.simulation.mission import MissionConfig, RiskNoise
from src.world_model.frontiers import SensorModel


class MissionSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mission_time: float = Field(default=config.mission_time, ge=0)
    replan_period: float = Field(default=config.replan_period, gt=0)
    sense_period: float = Field(default=config.sense_period, gt=0)
    speed: float = Field(default=config.speed, gt=0)
    solver_time_limit: float = Field(default=config.solver_time_limit, gt=0)

    k1: float = config.k1
    k2: float = config.k2
    k3: float = config.k3
    exp_gamma: float = config.exp_gamma
    exp_k: float = config.exp_k

    r_sense: float = config.r_sense
    long_range: float = config.long_range
    rays_per_scan: int = config.rays_per_scan

    noise_sigma: float | None = Field(default=None, ge=0)
    noise_period: float = Field(default=config.replan_period, gt=0)

    def to_mission_config(self, planner: str, seed: int) -> MissionConfig:
        return MissionConfig(
            planner=planner,
            mission_time=self.mission_time,
            replan_period=self.replan_period,
            sense_period=self.sense_period,
            speed=self.speed,
            frontload=FrontloadParams(k1=self.k1, k2=self.k2, k3=self.k3),
            discount=ExpDiscountParams(gamma=self.exp_gamma, k=self.exp_k),
            sensor=SensorModel(r_sense=self.r_sense, long_range=self.long_range, rays_per_scan=self.rays_per_scan),
            risk_noise=None if self.noise_sigma is None else RiskNoise(sigma=self.noise_sigma, period=self.noise_period),
            rng_seed=seed,
            solver_time_limit=self.solver_time_limit
        )


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    environment: dict[str, Any]
    mission: MissionSettings = Field(default_factory=MissionSettings)
    planners: list[str] = Field(default_factory=lambda: ["figop", "op", "greedy", "figlf"])
    planner: dict[str, dict[str, Any]] = Field(default_factory=dict)
    repetitions: int = Field(default=1, ge=1)
    seed_base: int = 0
    horizon_s: float | None = Field(default=None, gt=0)
    sensitivity_window: float | None = Field(default=None, gt=0)

    @field_validator("planners")
    @classmethod
    def known_planners(cls, value: list[str]) -> list[str]:
        unknown = [name for name in value if name not in planners]
        if unknown or not value:
            raise ValueError(f"Unknown or missing planners {unknown}; choose from {planners}")
        return value

    @field_validator("environment")
    @classmethod
    def known_environment(cls, value: dict[str, Any]) -> dict[str, Any]:
        if value.get("kind") not in GENERATORS:
            raise ValueError(f"environment.kind must be one of {sorted(GENERATORS)}")
        return value

    @model_validator(mode="after")
    def overrides_are_valid(self) -> Scenario:
        for name, overrides in self.planner.items():
            if name not in planners:
                raise ValueError(f"Override section for unknown planner {name!r}")
            MissionSettings(**{**self.mission.model_dump(), **overrides})

        for name in self.planners:
            try:
                self.mission_for(name, self.seed_base)
            except FigOpError as error:
                raise ValueError(f"Invalid mission settings for {name}: {error}") from error
        return self

    @property
    def seeds(self) -> list[int]:
        return [self.seed_base + index for index in range(self.repetitions)]

    @property
    def horizon(self) -> float:
        return self.horizon_s if self.horizon_s is not None else self.mission.mission_time

    def runs(self) -> list[tuple[str, int]]:
        return [(planner, seed) for planner in self.planners for seed in self.seeds]

    def settings_for(self, planner: str) -> MissionSettings:
        return MissionSettings(**{**self.mission.model_dump(), **self.planner.get(planner, {})})

    def mission_for(self, planner: str, seed: int) -> MissionConfig:
        return self.settings_for(planner).to_mission_config(planner=planner, seed=seed)

    def environment_for(self, seed: int) -> Environment:
        """
        Build the environment of one run; generators that take a seed receive the run's seed.
        """
        return build_environment({**self.environment, "seed": seed})


def load_scenario(path: Path | str) -> Scenario:
    """
    Read a scenario from a TOML file. A bare name such as "maze-small" refers to a shipped
    scenario in the scenarios directory.

    Raises:
        ScenarioError: when the file is missing, malformed or invalid
    """
    path = Path(path)
    if not path.suffix and not path.exists():
        path = SCENARIOS_DIR / f"{path.name}.toml"

    try:
        with open(path, mode="rb") as file:
            document = tomllib.load(file)
        return Scenario(**document)
    except FileNotFoundError as error:
        raise ScenarioError(f"No scenario file at {path}") from error
    except tomllib.TOMLDecodeError as error:
        raise ScenarioError(f"Malformed scenario file {path}: {error}") from error
    except (ValidationError, FigOpError) as error:
        raise ScenarioError(f"Invalid scenario {path}: {error}") from error
