"""Hierarchical shielded microgrid dispatch simulator."""

from .core import (
    BatteryAction,
    ContractViolation,
    GensetAction,
    InvariantFailure,
    MicrogridAction,
    OrchestratorAction,
    ScuNode,
    StatusCommand,
    StepContext,
    WindAction,
    simulate,
    step,
)
from .degradation import DegradationParams, SwitchingBuffer
from .devices import Battery, Genset, GensetStatus, WindTurbine
from .env import (
    EpisodeConfig,
    InitState,
    MetricsRecord,
    MicrogridEnv,
    Observation,
    run_episode,
)
from .exogenous import ExogenousSeries, Forecast, load_series, synth_series
from .policies import make_policy
from .systems import RecoveryScenario, build_microgrid

__version__ = "0.1.0"

__all__ = [
    "Battery",
    "BatteryAction",
    "ContractViolation",
    "DegradationParams",
    "EpisodeConfig",
    "ExogenousSeries",
    "Forecast",
    "Genset",
    "GensetAction",
    "GensetStatus",
    "InitState",
    "InvariantFailure",
    "MetricsRecord",
    "MicrogridAction",
    "MicrogridEnv",
    "Observation",
    "OrchestratorAction",
    "RecoveryScenario",
    "ScuNode",
    "StatusCommand",
    "StepContext",
    "SwitchingBuffer",
    "WindAction",
    "WindTurbine",
    "build_microgrid",
    "load_series",
    "make_policy",
    "run_episode",
    "simulate",
    "step",
    "synth_series",
]
