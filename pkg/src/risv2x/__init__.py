"""RIS-assisted ISAC vehicular network simulator."""

from .config import ChannelParams, ConfigError, ScenarioConfig, load_config
from .connectivity import (
    CCRReport,
    EpisodeStats,
    PayloadTracker,
    WindowTracker,
    ccr_v2i,
    ccr_v2v,
    objective_value,
)
from .env import Action, Observation, SimEnv, StepResult, decode_action
from .harness import ExperimentSpec, emit_metrics_csv, run_eval
from .policies import PolicySpec, greedy_action, random_action, random_ris_overlay
from .scenario import (
    TrajectorySet,
    VehicleState,
    build_grid_scenario,
    load_trajectories,
    sample_trajectories,
    step_mobility,
)

__all__ = [
    "Action",
    "CCRReport",
    "ChannelParams",
    "ConfigError",
    "EpisodeStats",
    "ExperimentSpec",
    "Observation",
    "PayloadTracker",
    "PolicySpec",
    "ScenarioConfig",
    "SimEnv",
    "StepResult",
    "TrajectorySet",
    "VehicleState",
    "WindowTracker",
    "build_grid_scenario",
    "ccr_v2i",
    "ccr_v2v",
    "decode_action",
    "emit_metrics_csv",
    "greedy_action",
    "load_config",
    "load_trajectories",
    "objective_value",
    "random_action",
    "random_ris_overlay",
    "run_eval",
    "sample_trajectories",
    "step_mobility",
]

__version__ = "0.1.0"
