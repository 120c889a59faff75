"""Non-learning baseline controllers emitting top-level actions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MicrogridAction, StatusCommand
from .devices import BATTERY_NOMINAL_KW, GENSET_P_NOMINAL, GensetStatus

START_LOAD_FRACTION = 0.9  # strict > of available power, counted per minute
STOP_COVER_FRACTION = 0.7
COUNTER_MINUTES = 5


class RandomPolicy:
    """Uniform status command and battery setpoint."""

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)
        self._commands = (StatusCommand.START, StatusCommand.STOP, StatusCommand.NOTHING)

    def act(self, obs) -> MicrogridAction:
        delta = self._commands[self.rng.integers(0, 3)]
        p = float(self.rng.uniform(-BATTERY_NOMINAL_KW, BATTERY_NOMINAL_KW))
        return MicrogridAction(delta, p)


class BatteryGreedyPolicy:
    """Keep the battery idle; let the shield manage gensets."""

    def act(self, obs) -> MicrogridAction:
        return MicrogridAction(StatusCommand.NOTHING, 0.0)


class FuelGreedyPolicy:
    """Try to stop gensets; charge on wind surplus, discharge otherwise."""

    def act(self, obs) -> MicrogridAction:
        if obs.wind_avail > obs.demand:
            p = -BATTERY_NOMINAL_KW
        else:
            p = BATTERY_NOMINAL_KW
        return MicrogridAction(StatusCommand.STOP, p)


class GreedyPolicy:
    """Try to stop gensets and discharge at full power."""

    def act(self, obs) -> MicrogridAction:
        return MicrogridAction(StatusCommand.STOP, BATTERY_NOMINAL_KW)


@dataclass
class HeuristicState:
    battery_mode: str = "charging"  # or "discharging"
    over90_counter: int = 0
    under70_counter: int = 0


class HeuristicPolicy:
    """Industry-style policy: always keep one genset on, start the second
    under sustained load, stop it when the first could carry the total,
    and cycle the battery slowly between its SoC bounds on wind surplus."""

    def __init__(self):
        self.state = HeuristicState()

    def act(self, obs) -> MicrogridAction:
        st = self.state
        on = [i for i, g in enumerate(obs.gensets) if g.status == GensetStatus.ON]
        engaged = [
            i
            for i, g in enumerate(obs.gensets)
            if g.status in (GensetStatus.ON, GensetStatus.WARMUP)
        ]
        delta = StatusCommand.NOTHING

        if not engaged:
            delta = StatusCommand.START
            st.over90_counter = 0
            st.under70_counter = 0
        elif len(engaged) == 1 and len(on) == 1:
            lead = obs.gensets[on[0]]
            avail = min(GENSET_P_NOMINAL, obs.genset_caps[on[0]])
            if lead.p_out > avail:
                delta = StatusCommand.START
                st.over90_counter = 0
            else:
                if lead.p_out > START_LOAD_FRACTION * avail:
                    st.over90_counter += 1
                else:
                    st.over90_counter = 0
                if st.over90_counter >= COUNTER_MINUTES:
                    delta = StatusCommand.START
                    st.over90_counter = 0
            st.under70_counter = 0
        elif len(on) == 2:
            total = sum(obs.gensets[i].p_out for i in on)
            remaining_avail = min(GENSET_P_NOMINAL, obs.genset_caps[on[0]])
            if total <= STOP_COVER_FRACTION * remaining_avail:
                st.under70_counter += 1
            else:
                st.under70_counter = 0
            if st.under70_counter >= COUNTER_MINUTES:
                delta = StatusCommand.STOP
                st.under70_counter = 0
            st.over90_counter = 0

        if st.battery_mode == "charging":
            if obs.battery.soc >= 0.90:
                st.battery_mode = "discharging"
        else:
            if obs.battery.soc <= 0.10:
                st.battery_mode = "charging"

        if st.battery_mode == "charging":
            surplus = max(0.0, obs.wind_avail - obs.demand)
            p = -min(surplus, BATTERY_NOMINAL_KW)
        else:
            p = BATTERY_NOMINAL_KW
        return MicrogridAction(delta, p)


POLICIES = {
    "random": RandomPolicy,
    "battery-greedy": BatteryGreedyPolicy,
    "fuel-greedy": FuelGreedyPolicy,
    "greedy": GreedyPolicy,
    "heuristic": HeuristicPolicy,
}


def make_policy(name: str, seed: int = 0):
    try:
        cls = POLICIES[name]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}")
    if cls is RandomPolicy:
        return cls(seed)
    return cls()
