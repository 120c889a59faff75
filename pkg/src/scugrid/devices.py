"""Physical models and per-device shields for the leaf subsystems.

All dynamics are per-minute and deterministic.  Shields clip or replace
actions so the post-step state always satisfies the device constraints;
the device step trusts that its action was shielded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    BatteryAction,
    Device,
    GensetAction,
    InvariantFailure,
    StatusCommand,
    StepContext,
    WindAction,
)
from .degradation import (
    DegradationParams,
    SwitchingBuffer,
    cycle_step_cost,
    update_switching_points,
)

WIND_MAX_KW = 400.0

BATTERY_NOMINAL_KW = 600.0
BATTERY_CAPACITY_KWH = 672.0
BATTERY_ETA = 0.95
SOC_MIN = 0.10
SOC_EMERGENCY = 0.05
SOC_MAX = 0.90

GENSET_P_MIN = 120.0
GENSET_P_NOMINAL = 400.0
GENSET_P_MAX = 440.0
GENSET_WARMUP_MIN = 3
GENSET_WARMUP_KW = 100.0
GENSET_COOLDOWN_MIN = 5
GENSET_MIN_RUNTIME = 30
GENSET_FUEL_RATE_L_PER_KWH = 0.25
GENSET_FUEL_IDLE_L_PER_H = 10.0
GENSET_AVG_WINDOW = 2880  # minutes of operation in the rolling-average window
GENSET_AVG_CAP_KW = 0.7 * GENSET_P_NOMINAL


def clip(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


# ---------------------------------------------------------------------------
# Wind turbine


@dataclass
class WindState:
    p_avail: float = 0.0
    p_out: float = 0.0


class WindTurbine(Device):
    """Curtailable wind turbine; no operational constraints."""

    def __init__(self):
        self.p_avail = 0.0
        self.p_out = 0.0

    def shield(self, action: WindAction, ctx: StepContext) -> WindAction:
        return action

    def step(self, action: WindAction, ctx: StepContext) -> WindState:
        self.p_avail = ctx.wind_avail
        self.p_out = clip(action.p_setpoint, 0.0, self.p_avail)
        return self.snapshot()

    def snapshot(self) -> WindState:
        return WindState(p_avail=self.p_avail, p_out=self.p_out)

    def apply_estimate(self, obs: WindState) -> None:
        self.p_avail = obs.p_avail
        self.p_out = obs.p_out

    def clone(self) -> "WindTurbine":
        other = WindTurbine()
        other.p_avail = self.p_avail
        other.p_out = self.p_out
        return other


# ---------------------------------------------------------------------------
# Battery


@dataclass
class BatteryState:
    soc: float
    p_out: float
    last_degradation: float
    rainflow_R: tuple
    rainflow_F: tuple


def battery_discharge_limit(soc: float, allow_reserve: bool) -> float:
    """Max discharge power (kW) sustainable for one minute."""
    floor = SOC_EMERGENCY if allow_reserve else SOC_MIN
    headroom = (soc - floor) * BATTERY_CAPACITY_KWH * BATTERY_ETA * 60.0
    return clip(headroom, 0.0, BATTERY_NOMINAL_KW)


def battery_charge_limit(soc: float) -> float:
    """Max charge power magnitude (kW) sustainable for one minute."""
    headroom = (SOC_MAX - soc) * BATTERY_CAPACITY_KWH / BATTERY_ETA * 60.0
    return clip(headroom, 0.0, BATTERY_NOMINAL_KW)


class Battery(Device):
    """672 kWh / 600 kW battery with one-way efficiency losses and
    online cycle-degradation tracking."""

    def __init__(self, soc: float = 0.5, params: DegradationParams | None = None):
        self.soc = soc
        self.p_out = 0.0
        self.last_degradation = 0.0
        self.params = params or DegradationParams()
        self.rainflow = SwitchingBuffer.seeded(soc, self.params.w)

    def shield(self, action: BatteryAction, ctx: StepContext) -> BatteryAction:
        p = clip(action.p_setpoint, -BATTERY_NOMINAL_KW, BATTERY_NOMINAL_KW)
        p = clip(
            p,
            -battery_charge_limit(self.soc),
            battery_discharge_limit(self.soc, ctx.allow_battery_reserve),
        )
        return BatteryAction(p)

    def step(self, action: BatteryAction, ctx: StepContext) -> BatteryState:
        p = action.p_setpoint
        soc = self.soc
        if p >= 0:
            new_soc = soc - p / 60.0 / (BATTERY_ETA * BATTERY_CAPACITY_KWH)
        else:
            new_soc = soc + (-p) / 60.0 * BATTERY_ETA / BATTERY_CAPACITY_KWH
        if not (0.0 <= new_soc <= 1.0):
            raise InvariantFailure(f"battery SoC left [0,1]: {new_soc}")
        if ctx.track_degradation:
            self.last_degradation = cycle_step_cost(
                soc, new_soc - soc, self.rainflow.R, self.params
            )
            update_switching_points(new_soc, self.rainflow, self.params.w)
        else:
            self.last_degradation = 0.0
        self.soc = new_soc
        self.p_out = p
        return self.snapshot()

    def snapshot(self) -> BatteryState:
        return BatteryState(
            soc=self.soc,
            p_out=self.p_out,
            last_degradation=self.last_degradation,
            rainflow_R=tuple(self.rainflow.R),
            rainflow_F=tuple(self.rainflow.F),
        )

    def apply_estimate(self, obs: BatteryState) -> None:
        self.soc = obs.soc
        self.p_out = obs.p_out
        self.last_degradation = obs.last_degradation
        self.rainflow.R = list(obs.rainflow_R)
        self.rainflow.F = list(obs.rainflow_F)

    def clone(self) -> "Battery":
        other = Battery.__new__(Battery)
        other.soc = self.soc
        other.p_out = self.p_out
        other.last_degradation = self.last_degradation
        other.params = self.params
        other.rainflow = self.rainflow.clone()
        return other


# ---------------------------------------------------------------------------
# Genset


class GensetStatus:
    OFF = "Off"
    WARMUP = "WarmUp"
    ON = "On"
    COOLDOWN = "CoolDown"


@dataclass
class GensetState:
    status: str
    counter: int  # remaining minutes for routines, runtime minutes for On
    p_out: float
    last_fuel: float
    hist_count: int
    hist_sum: float
    hist_head: int
    history: np.ndarray

    def label(self) -> str:
        if self.status == GensetStatus.OFF:
            return "Off"
        return f"{self.status}({self.counter})"


class OperationHistory:
    """Ring buffer over the last 48 hours of operating minutes."""

    __slots__ = ("buf", "head", "count", "total")

    def __init__(self):
        self.buf = np.zeros(GENSET_AVG_WINDOW)
        self.head = 0
        self.count = 0
        self.total = 0.0

    def append(self, p: float) -> None:
        if self.count == GENSET_AVG_WINDOW:
            self.total -= self.buf[self.head]
        else:
            self.count += 1
        self.buf[self.head] = p
        self.total += p
        self.head = (self.head + 1) % GENSET_AVG_WINDOW

    def oldest(self) -> float:
        if self.count < GENSET_AVG_WINDOW:
            return 0.0
        return float(self.buf[self.head])

    def clone(self) -> "OperationHistory":
        other = OperationHistory.__new__(OperationHistory)
        other.buf = self.buf.copy()
        other.head = self.head
        other.count = self.count
        other.total = self.total
        return other


def power_cap_48h(count: int, total: float, oldest: float) -> float:
    """Largest next on-sample keeping the operating average at or below 70%
    of nominal capacity."""
    if count >= GENSET_AVG_WINDOW:
        cap = GENSET_AVG_CAP_KW * GENSET_AVG_WINDOW - (total - oldest)
    else:
        cap = GENSET_AVG_CAP_KW * (count + 1) - total
    return clip(cap, 0.0, GENSET_P_MAX)


class Genset(Device):
    """Fuel generator with warm-up/cool-down routines, minimum runtime,
    power floor/caps and the 48 h operating-average limit."""

    def __init__(self, status: str = GensetStatus.OFF, counter: int = 0):
        self.status = status
        self.counter = counter
        self.p_out = 0.0
        self.last_fuel = 0.0
        self.history = OperationHistory()

    # -- constraint helpers ------------------------------------------------

    def avg_cap(self) -> float:
        return power_cap_48h(self.history.count, self.history.total, self.history.oldest())

    def setpoint_cap(self, allow_overload: bool) -> float:
        nominal = GENSET_P_MAX if allow_overload else GENSET_P_NOMINAL
        return min(nominal, self.avg_cap())

    def shield(self, action: GensetAction, ctx: StepContext) -> GensetAction:
        delta = action.delta
        if delta is StatusCommand.STOP:
            if self.status != GensetStatus.ON or self.counter < GENSET_MIN_RUNTIME:
                delta = StatusCommand.NOTHING
        elif delta is StatusCommand.START:
            if self.status != GensetStatus.OFF:
                delta = StatusCommand.NOTHING
        cap = self.setpoint_cap(ctx.allow_genset_overload)
        setpoint = clip(action.p_setpoint, GENSET_P_MIN, max(GENSET_P_MIN, cap))
        return GensetAction(delta, setpoint)

    def step(self, action: GensetAction, ctx: StepContext) -> GensetState:
        # commands take effect at the start of the minute
        if action.delta is StatusCommand.START and self.status == GensetStatus.OFF:
            self.status = GensetStatus.WARMUP
            self.counter = GENSET_WARMUP_MIN
        elif action.delta is StatusCommand.STOP and self.status == GensetStatus.ON:
            self.status = GensetStatus.COOLDOWN
            self.counter = GENSET_COOLDOWN_MIN

        status_during = self.status
        if status_during == GensetStatus.WARMUP:
            p = GENSET_WARMUP_KW
            self.counter -= 1
            if self.counter == 0:
                self.status = GensetStatus.ON
        elif status_during == GensetStatus.COOLDOWN:
            p = 0.0
            self.counter -= 1
            if self.counter == 0:
                self.status = GensetStatus.OFF
        elif status_during == GensetStatus.ON:
            p = clip(action.p_setpoint, 0.0, GENSET_P_MAX)
            self.counter += 1
        else:
            p = 0.0

        operating = status_during != GensetStatus.OFF
        self.p_out = p
        self.last_fuel = p * GENSET_FUEL_RATE_L_PER_KWH / 60.0 + (
            GENSET_FUEL_IDLE_L_PER_H / 60.0 if operating else 0.0
        )
        if operating:
            self.history.append(p)
        return self.snapshot()

    def snapshot(self) -> GensetState:
        return GensetState(
            status=self.status,
            counter=self.counter,
            p_out=self.p_out,
            last_fuel=self.last_fuel,
            hist_count=self.history.count,
            hist_sum=self.history.total,
            hist_head=self.history.head,
            history=self.history.buf,  # shared read-only view; twins copy on change
        )

    def apply_estimate(self, obs: GensetState) -> None:
        self.status = obs.status
        self.counter = obs.counter
        self.p_out = obs.p_out
        self.last_fuel = obs.last_fuel
        h = self.history
        if obs.hist_count != h.count or obs.hist_head != h.head or obs.hist_sum != h.total:
            h.buf = obs.history.copy()
            h.count = obs.hist_count
            h.total = obs.hist_sum
            h.head = obs.hist_head

    def clone(self) -> "Genset":
        other = Genset.__new__(Genset)
        other.status = self.status
        other.counter = self.counter
        other.p_out = self.p_out
        other.last_fuel = self.last_fuel
        other.history = self.history.clone()
        return other
