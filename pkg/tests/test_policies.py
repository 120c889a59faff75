"""Baseline controllers: command distributions and switching logic."""

from types import SimpleNamespace

import pytest

from scugrid.core import StatusCommand
from scugrid.devices import GensetStatus
from scugrid.policies import (
    HeuristicPolicy,
    POLICIES,
    make_policy,
)


def obs(demand=320.0, wind_avail=200.0, soc=0.5,
        gensets=((GensetStatus.ON, 200.0), (GensetStatus.OFF, 0.0)),
        caps=(400.0, 400.0)):
    return SimpleNamespace(
        demand=demand,
        wind_avail=wind_avail,
        battery=SimpleNamespace(soc=soc),
        gensets=tuple(
            SimpleNamespace(status=s, p_out=p) for s, p in gensets
        ),
        genset_caps=caps,
    )


class TestFactory:
    def test_all_names_construct(self):
        for name in POLICIES:
            policy = make_policy(name, seed=3)
            action = policy.act(obs())
            assert action.delta_orch in StatusCommand
            assert -600.0 <= action.p_batt_setpoint <= 600.0

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown policy"):
            make_policy("oracle")


class TestRandomPolicy:
    def test_deterministic_per_seed(self):
        a = make_policy("random", 5)
        b = make_policy("random", 5)
        for _ in range(50):
            x, y = a.act(obs()), b.act(obs())
            assert x == y

    def test_command_frequencies_uniform(self):
        policy = make_policy("random", 0)
        counts = {c: 0 for c in StatusCommand}
        n = 10_000
        for _ in range(n):
            counts[policy.act(obs()).delta_orch] += 1
        for c in StatusCommand:
            assert abs(counts[c] / n - 1 / 3) < 0.02

    def test_setpoints_within_nominal(self):
        policy = make_policy("random", 1)
        for _ in range(200):
            assert -600.0 <= policy.act(obs()).p_batt_setpoint <= 600.0


class TestFixedPolicies:
    def test_battery_greedy(self):
        action = make_policy("battery-greedy").act(obs())
        assert action.delta_orch is StatusCommand.NOTHING
        assert action.p_batt_setpoint == 0.0

    def test_greedy(self):
        action = make_policy("greedy").act(obs())
        assert action.delta_orch is StatusCommand.STOP
        assert action.p_batt_setpoint == 600.0

    def test_fuel_greedy_discharges_without_surplus(self):
        action = make_policy("fuel-greedy").act(obs(demand=320.0, wind_avail=200.0))
        assert action.delta_orch is StatusCommand.STOP
        assert action.p_batt_setpoint == 600.0

    def test_fuel_greedy_charges_on_surplus(self):
        action = make_policy("fuel-greedy").act(obs(demand=200.0, wind_avail=320.0))
        assert action.p_batt_setpoint == -600.0

    def test_fuel_greedy_tie_discharges(self):
        action = make_policy("fuel-greedy").act(obs(demand=250.0, wind_avail=250.0))
        assert action.p_batt_setpoint == 600.0


class TestHeuristic:
    def test_starts_when_nothing_engaged(self):
        policy = HeuristicPolicy()
        action = policy.act(obs(gensets=((GensetStatus.OFF, 0.0), (GensetStatus.OFF, 0.0))))
        assert action.delta_orch is StatusCommand.START

    def test_sustained_high_load_starts_second(self):
        policy = HeuristicPolicy()
        high = obs(gensets=((GensetStatus.ON, 365.0), (GensetStatus.OFF, 0.0)))
        for _ in range(4):
            assert policy.act(high).delta_orch is StatusCommand.NOTHING
        assert policy.act(high).delta_orch is StatusCommand.START

    def test_load_dip_resets_counter(self):
        policy = HeuristicPolicy()
        high = obs(gensets=((GensetStatus.ON, 365.0), (GensetStatus.OFF, 0.0)))
        low = obs(gensets=((GensetStatus.ON, 300.0), (GensetStatus.OFF, 0.0)))
        for _ in range(4):
            policy.act(high)
        policy.act(low)
        for _ in range(4):
            assert policy.act(high).delta_orch is StatusCommand.NOTHING
        assert policy.act(high).delta_orch is StatusCommand.START

    def test_above_available_starts_immediately(self):
        policy = HeuristicPolicy()
        over = obs(gensets=((GensetStatus.ON, 290.0), (GensetStatus.OFF, 0.0)),
                   caps=(280.0, 280.0))
        assert policy.act(over).delta_orch is StatusCommand.START

    def test_sustained_low_total_stops_second(self):
        policy = HeuristicPolicy()
        low = obs(gensets=((GensetStatus.ON, 130.0), (GensetStatus.ON, 130.0)))
        for _ in range(4):
            assert policy.act(low).delta_orch is StatusCommand.NOTHING
        assert policy.act(low).delta_orch is StatusCommand.STOP

    def test_battery_mode_flips_at_bounds(self):
        policy = HeuristicPolicy()
        surplus = dict(demand=200.0, wind_avail=320.0)
        charging = policy.act(obs(soc=0.5, **surplus))
        assert charging.p_batt_setpoint == pytest.approx(-120.0)
        discharging = policy.act(obs(soc=0.90, **surplus))
        assert discharging.p_batt_setpoint == 600.0
        # stays discharging until the floor is reached
        assert policy.act(obs(soc=0.5, **surplus)).p_batt_setpoint == 600.0
        assert policy.act(obs(soc=0.10, **surplus)).p_batt_setpoint == pytest.approx(-120.0)

    def test_charging_without_surplus_idles(self):
        policy = HeuristicPolicy()
        action = policy.act(obs(demand=320.0, wind_avail=200.0, soc=0.5))
        assert action.p_batt_setpoint == 0.0
