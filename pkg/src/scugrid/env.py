"""Episode wrapper over the top-level microgrid SCU.

Handles episode setup and validation, reward computation, observation
assembly, per-minute trajectory logging and metrics accounting.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import core, systems
from .core import ContractViolation, MicrogridAction, StatusCommand, StepContext
from .degradation import DegradationParams
from .devices import SOC_MIN, Battery, Genset, GensetStatus
from .exogenous import ExogenousSeries, forecast_at, series_stats
from .systems import RecoveryScenario, build_microgrid, status_during_minute

EPISODE_MINUTES = 1440

TRAJECTORY_HEADER = [
    "minute", "demand", "wind_avail", "p_wind", "p_batt", "soc",
    "p_gen1", "p_gen2", "status1", "status2", "fuel_l", "deg",
    "reward", "balance", "intervention",
]

# intervention column bitmask
FLAG_SHIELD = 1
FLAG_BATTERY_RESERVE = 2
FLAG_GENSET_OVERLOAD = 4


@dataclass
class InitState:
    soc: float = 0.5
    genset_statuses: tuple = ((GensetStatus.ON, 60), (GensetStatus.OFF, 0))


@dataclass
class EpisodeConfig:
    start_minute: int = 0
    length: int = EPISODE_MINUTES
    alpha: float = 1.0
    seed: int = 0
    init: Optional[InitState] = None  # None: sampled from seed
    forecast_noise: float = 0.0
    recovery_shield: bool = True
    device_shields: bool = True
    intervention_penalty: float = 0.0
    degradation: DegradationParams = field(default_factory=DegradationParams)
    scenario: Optional[RecoveryScenario] = None  # None: derived from the series

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("episode length must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")


@dataclass
class MetricsRecord:
    fuel_l: float = 0.0
    degradation: float = 0.0
    neg_balance_steps: int = 0
    neg_balance_kwh: float = 0.0
    pos_balance_kwh: float = 0.0
    shield_interventions: int = 0
    battery_reserve_minutes: int = 0
    genset_overload_minutes: int = 0

    def accumulate(self, other: "MetricsRecord") -> None:
        self.fuel_l += other.fuel_l
        self.degradation += other.degradation
        self.neg_balance_steps += other.neg_balance_steps
        self.neg_balance_kwh += other.neg_balance_kwh
        self.pos_balance_kwh += other.pos_balance_kwh
        self.shield_interventions += other.shield_interventions
        self.battery_reserve_minutes += other.battery_reserve_minutes
        self.genset_overload_minutes += other.genset_overload_minutes

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Observation:
    minute: int
    demand: float
    wind_avail: float
    battery: object
    wind: object
    gensets: tuple
    genset_caps: tuple
    demand_forecast: np.ndarray
    wind_forecast: np.ndarray


class MicrogridEnv:
    """One-day shielded dispatch episodes over an exogenous series."""

    def __init__(self, series: ExogenousSeries, config: EpisodeConfig):
        self.series = series
        self.config = config
        self.stats = series_stats(series)
        self.scenario = config.scenario or RecoveryScenario(
            demand_high=self.stats.demand_high,
            demand_ramp=self.stats.demand_ramp,
            wind_low=self.stats.wind_low,
            wind_ramp=self.stats.wind_ramp,
            demand_low=self.stats.demand_low,
            demand_drop=self.stats.demand_drop,
        )
        self.tree = None
        self.t = 0
        self.steps_done = 0
        self._done = True

    # -- episode setup -----------------------------------------------------

    def _validate_init(self, init: InitState, minute: int) -> bool:
        if not 0.10 <= init.soc <= 0.90:
            return False
        gensets = [Genset(status, counter) for status, counter in init.genset_statuses]
        demand, wind = self.series.at(minute)
        for worst in (True, False):
            if not systems._project_candidate(
                init.soc, gensets, StatusCommand.NOTHING, demand, wind,
                self.scenario, worst,
            ):
                return False
        return systems._project_excess(
            init.soc, gensets, StatusCommand.NOTHING, demand, self.scenario
        )

    def _sample_init(self, rng: np.random.Generator, minute: int) -> InitState:
        for _ in range(200):
            soc = float(rng.uniform(0.12, 0.88))
            n_on = int(rng.integers(0, 3))
            statuses = []
            for i in range(2):
                if i < n_on:
                    statuses.append((GensetStatus.ON, int(rng.integers(0, 600))))
                else:
                    statuses.append((GensetStatus.OFF, 0))
            init = InitState(soc=soc, genset_statuses=tuple(statuses))
            if self._validate_init(init, minute):
                return init
        raise core.InvariantFailure("could not sample a recoverable initial state")

    def reset(self) -> Observation:
        cfg = self.config
        self.t = cfg.start_minute
        rng = np.random.default_rng(cfg.seed)
        if cfg.init is not None:
            init = cfg.init
            if not self._validate_init(init, self.t):
                raise ValueError("initial state rejected: not recoverable")
        else:
            init = self._sample_init(rng, self.t)
        battery = Battery(init.soc, cfg.degradation)
        gensets = [Genset(status, counter) for status, counter in init.genset_statuses]
        self.tree = build_microgrid(battery, gensets, scenario=self.scenario)
        self.steps_done = 0
        self._done = False
        return self._observation()

    # -- stepping ----------------------------------------------------------

    def _observation(self) -> Observation:
        batt, wind, orch = self.tree.controller.dt_state
        genset_twins = [n.device for n in orch.controller.dt_state]
        demand, wind_avail = self.series.at(self.t)
        return Observation(
            minute=self.t,
            demand=demand,
            wind_avail=wind_avail,
            battery=batt.device.snapshot(),
            wind=wind.device.snapshot(),
            gensets=tuple(g.snapshot() for g in genset_twins),
            genset_caps=tuple(g.avg_cap() for g in genset_twins),
            demand_forecast=forecast_at(
                self.series, self.t, "demand", self.config.forecast_noise, self.config.seed
            ).values,
            wind_forecast=forecast_at(
                self.series, self.t, "wind", self.config.forecast_noise, self.config.seed
            ).values,
        )

    def step(self, action: MicrogridAction):
        if self._done:
            raise ContractViolation("step called on a finished episode")
        demand, wind_avail = self.series.at(self.t)
        ctx = StepContext(
            demand=demand,
            wind_avail=wind_avail,
            recovery_enabled=self.config.recovery_shield,
            device_shields_enabled=self.config.device_shields,
        )
        pre_gensets = [
            (g.device.status, g.device.counter)
            for g in self.tree.children[2].children
        ]
        core.step(self.tree, action, ctx)
        metrics = self.tree.controller.sc_state["last_metrics"]
        plan = self.tree.controller.sc_state["plan"]

        balance = metrics["balance"]
        delta = MetricsRecord(
            fuel_l=metrics["fuel_l"],
            degradation=metrics["degradation"],
            neg_balance_steps=1 if balance < -systems.BALANCE_EPS else 0,
            neg_balance_kwh=-balance / 60.0 if balance < -systems.BALANCE_EPS else 0.0,
            pos_balance_kwh=balance / 60.0 if balance > systems.BALANCE_EPS else 0.0,
            shield_interventions=1 if metrics["intervention"] else 0,
            battery_reserve_minutes=1 if metrics["battery_reserve_used"] else 0,
            genset_overload_minutes=1 if metrics["genset_overload_used"] else 0,
        )
        reward = -(metrics["fuel_l"] + self.config.alpha * metrics["degradation"])
        if metrics["intervention"] and self.config.intervention_penalty:
            reward -= self.config.intervention_penalty

        labels = []
        for (status, counter), gd in zip(pre_gensets, plan.genset_deltas):
            g_fake = Genset(status, counter)
            during = status_during_minute(g_fake, gd)
            if during == GensetStatus.OFF:
                labels.append("Off")
            elif during == status:
                labels.append(f"{during}({counter})")
            elif during == GensetStatus.WARMUP:
                labels.append("WarmUp(3)")
            else:
                labels.append("CoolDown(5)")

        batt_obs, wind_obs, orch_obs = (
            self.tree.children[0].device.snapshot(),
            self.tree.children[1].device.snapshot(),
            tuple(c.device.snapshot() for c in self.tree.children[2].children),
        )
        flags = 0
        if metrics["intervention"]:
            flags |= FLAG_SHIELD
        # the reserve flag marks every minute spent below the normal SoC
        # floor, not just the minute the extra discharge was authorized
        if metrics["battery_reserve_used"] or batt_obs.soc < SOC_MIN - 1e-12:
            flags |= FLAG_BATTERY_RESERVE
        if metrics["genset_overload_used"]:
            flags |= FLAG_GENSET_OVERLOAD
        row = [
            self.t, repr(demand), repr(wind_avail), repr(wind_obs.p_out),
            repr(batt_obs.p_out), repr(batt_obs.soc),
            repr(orch_obs[0].p_out), repr(orch_obs[1].p_out),
            labels[0], labels[1],
            repr(metrics["fuel_l"]), repr(metrics["degradation"]),
            repr(reward), repr(balance), flags,
        ]

        self.t += 1
        self.steps_done += 1
        self._done = self.steps_done >= self.config.length
        return self._observation(), reward, self._done, delta, row


def run_episode(policy, env: MicrogridEnv):
    """Full deterministic rollout; returns (MetricsRecord, trajectory rows)."""
    obs = env.reset()
    totals = MetricsRecord()
    rows = []
    done = False
    while not done:
        action = policy.act(obs)
        obs, _reward, done, delta, row = env.step(action)
        totals.accumulate(delta)
        rows.append(row)
    return totals, rows


def write_trajectory(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        writer.writerows(rows)


def write_summary(metrics: MetricsRecord, path, extra: dict | None = None) -> None:
    payload = metrics.as_dict()
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
