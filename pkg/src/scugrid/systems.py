"""Composite subsystems: genset orchestrator and microgrid dispatch.

The orchestrator turns a single status command and a total power
setpoint into per-genset commands honoring priority order and the equal
power fraction.  The microgrid dispatch resolves the agent action into
child setpoints that keep generation minus demand at exactly zero, and
a predictive recovery shield vets status commands against 9-minute
worst-case and constant-exogenous rollouts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import (
    BatteryAction,
    GensetAction,
    InvariantFailure,
    MicrogridAction,
    OrchestratorAction,
    ScuNode,
    StatusCommand,
    StepContext,
    WindAction,
)
from .devices import (
    BATTERY_CAPACITY_KWH,
    BATTERY_ETA,
    BATTERY_NOMINAL_KW,
    GENSET_MIN_RUNTIME,
    GENSET_P_MAX,
    GENSET_WARMUP_MIN,
    GENSET_P_MIN,
    GENSET_P_NOMINAL,
    GENSET_WARMUP_KW,
    Battery,
    Genset,
    GensetStatus,
    battery_charge_limit,
    battery_discharge_limit,
    clip,
)

F_MIN = GENSET_P_MIN / GENSET_P_NOMINAL  # 0.3
BALANCE_EPS = 1e-6


@dataclass
class RecoveryScenario:
    """Exogenous envelopes used by the recovery rollouts."""

    horizon: int = 9
    demand_high: float = 540.0
    wind_low: float = 0.0
    demand_ramp: float = 10.0  # kW per minute, >= 0
    wind_ramp: float = 10.0  # kW per minute, >= 0
    demand_low: float = 180.0
    demand_drop: float = 10.0  # kW per minute, >= 0

    def __post_init__(self):
        if self.horizon != 9:
            raise ValueError("recovery horizon is fixed at 9 minutes")
        if self.demand_ramp < 0 or self.wind_ramp < 0 or self.demand_drop < 0:
            raise ValueError("ramps must be >= 0")


# ---------------------------------------------------------------------------
# Orchestrator logic (pure functions over genset device states)


def orchestrator_status_dispatch(gensets, delta: StatusCommand):
    """Map one orchestrator command onto per-genset commands.

    Only one genset changes status at a time; genset i may only run if
    genset i-1 runs, so starts go to the first stopped genset with a
    running predecessor and stops to the last running genset.
    Inapplicable commands default to no change.
    """
    n = len(gensets)
    deltas = [StatusCommand.NOTHING] * n
    if delta is StatusCommand.START:
        for i, g in enumerate(gensets):
            if g.status == GensetStatus.OFF:
                if i == 0 or gensets[i - 1].status in (
                    GensetStatus.ON,
                    GensetStatus.WARMUP,
                ):
                    deltas[i] = StatusCommand.START
                break
    elif delta is StatusCommand.STOP:
        for i in range(n - 1, -1, -1):
            g = gensets[i]
            if g.status == GensetStatus.ON:
                if g.counter >= GENSET_MIN_RUNTIME:
                    deltas[i] = StatusCommand.STOP
                break
            if g.status == GensetStatus.WARMUP:
                break  # warming genset cannot stop; nothing applicable below it
    return deltas


def status_during_minute(genset: Genset, delta: StatusCommand) -> str:
    """Status the genset will hold during the coming minute under delta."""
    if delta is StatusCommand.START and genset.status == GensetStatus.OFF:
        return GensetStatus.WARMUP
    if delta is StatusCommand.STOP and genset.status == GensetStatus.ON:
        return GensetStatus.COOLDOWN
    return genset.status


def orchestrator_feasible_range(gensets, deltas, allow_overload: bool):
    """Achievable total genset power this minute, as (lo, hi)."""
    routine = 0.0
    f_cap = None
    running = 0
    for g, d in zip(gensets, deltas):
        status = status_during_minute(g, d)
        if status == GensetStatus.WARMUP:
            routine += GENSET_WARMUP_KW
        elif status == GensetStatus.ON:
            running += 1
            cap = g.setpoint_cap(allow_overload)
            frac = cap / GENSET_P_NOMINAL
            f_cap = frac if f_cap is None else min(f_cap, frac)
    if running == 0:
        return routine, routine
    f_hi = max(F_MIN, f_cap)
    lo = routine + running * GENSET_P_MIN
    hi = routine + running * GENSET_P_NOMINAL * f_hi
    return lo, hi


def equal_power_fraction(gensets, deltas, p_setpoint: float, allow_overload: bool):
    """Split a total setpoint into per-genset setpoints at one common
    fraction of nominal power; routine gensets contribute fixed power."""
    routine = 0.0
    running = []
    f_cap = None
    for i, (g, d) in enumerate(zip(gensets, deltas)):
        status = status_during_minute(g, d)
        if status == GensetStatus.WARMUP:
            routine += GENSET_WARMUP_KW
        elif status == GensetStatus.ON:
            running.append(i)
            frac = g.setpoint_cap(allow_overload) / GENSET_P_NOMINAL
            f_cap = frac if f_cap is None else min(f_cap, frac)
    setpoints = [0.0] * len(gensets)
    if not running:
        return setpoints
    target = p_setpoint - routine
    f = clip(target / (GENSET_P_NOMINAL * len(running)), F_MIN, max(F_MIN, f_cap))
    for i in running:
        setpoints[i] = f * GENSET_P_NOMINAL
    return setpoints


# ---------------------------------------------------------------------------
# Microgrid dispatch plan


@dataclass
class DispatchPlan:
    delta_orch: StatusCommand
    genset_deltas: list
    genset_setpoints: list
    p_batt: float
    p_wind: float
    p_orch: float
    expected_balance: float
    battery_reserve_used: bool = False
    genset_overload_used: bool = False


def plan_minute(
    soc: float,
    gensets,
    action: MicrogridAction,
    demand: float,
    wind_avail: float,
    reserves_permitted: bool = True,
    device_shields: bool = True,
) -> DispatchPlan:
    """Resolve one minute of dispatch to child setpoints with zero balance.

    Resolution order: honor the agent's battery setpoint within shield
    limits, use wind before fuel, absorb any forced genset floor excess
    by charging then curtailment, cover shortfall by extra battery
    discharge, and only then tap emergency reserves.
    """
    deltas = orchestrator_status_dispatch(gensets, action.delta_orch)

    if device_shields:
        dis_max = battery_discharge_limit(soc, allow_reserve=False)
        chg_max = battery_charge_limit(soc)
    else:
        dis_max = clip(soc * BATTERY_CAPACITY_KWH * BATTERY_ETA * 60.0, 0.0, BATTERY_NOMINAL_KW)
        chg_max = clip((1.0 - soc) * BATTERY_CAPACITY_KWH / BATTERY_ETA * 60.0, 0.0, BATTERY_NOMINAL_KW)

    p_batt = clip(action.p_batt_setpoint, -chg_max, dis_max)

    lo, hi = orchestrator_feasible_range(gensets, deltas, allow_overload=False)

    rho = demand - p_batt
    p_wind = clip(rho, 0.0, wind_avail)
    p_orch = clip(rho - p_wind, lo, hi)

    reserve_used = False
    overload_used = False
    balance = p_batt + p_wind + p_orch - demand

    if balance > BALANCE_EPS:
        # forced excess: charge harder, then curtail wind
        absorb = min(balance, p_batt + chg_max)
        p_batt -= absorb
        balance -= absorb
        if balance > BALANCE_EPS:
            cut = min(p_wind, balance)
            p_wind -= cut
            balance -= cut
    elif balance < -BALANCE_EPS:
        shortfall = -balance
        extra = min(shortfall, dis_max - p_batt)
        p_batt += extra
        balance += extra
        if balance < -BALANCE_EPS and reserves_permitted:
            # emergency: genset overload first, then the battery reserve floor
            _, hi_em = orchestrator_feasible_range(gensets, deltas, allow_overload=True)
            boost = min(-balance, hi_em - p_orch)
            if boost > BALANCE_EPS:
                p_orch += boost
                balance += boost
                overload_used = True
            if balance < -BALANCE_EPS and device_shields:
                dis_em = battery_discharge_limit(soc, allow_reserve=True)
                extra = min(-balance, dis_em - p_batt)
                if extra > BALANCE_EPS:
                    p_batt += extra
                    balance += extra
                    reserve_used = True

    overload = overload_used
    setpoints = equal_power_fraction(gensets, deltas, p_orch, allow_overload=overload)
    return DispatchPlan(
        delta_orch=action.delta_orch,
        genset_deltas=deltas,
        genset_setpoints=setpoints,
        p_batt=p_batt,
        p_wind=p_wind,
        p_orch=p_orch,
        expected_balance=balance,
        battery_reserve_used=reserve_used,
        genset_overload_used=overload_used,
    )


# ---------------------------------------------------------------------------
# Recovery shield


def battery_next_soc(soc: float, p: float) -> float:
    if p >= 0:
        return soc - p / 60.0 / (BATTERY_ETA * BATTERY_CAPACITY_KWH)
    return soc + (-p) / 60.0 * BATTERY_ETA / BATTERY_CAPACITY_KWH


def _project_candidate(
    soc: float,
    gensets,
    candidate: StatusCommand,
    demand: float,
    wind_avail: float,
    scenario: RecoveryScenario,
    worst_case: bool,
) -> bool:
    """Roll the candidate plus a start-everything fallback over the horizon;
    True when balance stays non-negative every simulated minute."""
    sim = [g.clone() for g in gensets]
    ctx = StepContext(in_rollout=True, track_degradation=False)
    for tau in range(scenario.horizon):
        if worst_case:
            d = min(demand + tau * scenario.demand_ramp, max(scenario.demand_high, demand))
            w = max(wind_avail - tau * scenario.wind_ramp, min(scenario.wind_low, wind_avail))
            batt_cmd = BATTERY_NOMINAL_KW  # forced max discharge
        else:
            d = demand
            w = wind_avail
            batt_cmd = 0.0
        delta = candidate if tau == 0 else StatusCommand.START
        plan = plan_minute(
            soc,
            sim,
            MicrogridAction(delta, batt_cmd),
            d,
            w,
            reserves_permitted=worst_case,
        )
        if plan.expected_balance < -BALANCE_EPS:
            return False
        for g, gd, sp in zip(sim, plan.genset_deltas, plan.genset_setpoints):
            g.step(GensetAction(gd, sp), ctx)
        soc = battery_next_soc(soc, plan.p_batt)
    return True


EXCESS_HORIZON = 45  # covers warm-up + minimum runtime + staggered stops


def _project_excess(
    soc: float,
    gensets,
    candidate: StatusCommand,
    demand: float,
    scenario: RecoveryScenario,
) -> bool:
    """Check that no forced positive balance can arise from the candidate.

    Worst case for excess: demand dropping at its fastest historical rate
    toward its historical low, wind fully curtailed, battery charging at
    maximum so its absorption headroom vanishes as fast as possible, and
    a stop-everything fallback once minimum runtimes allow.  True when
    the genset power floors never exceed what demand plus the battery
    can absorb over the horizon.
    """
    dl = min(scenario.demand_low, demand)
    engaged = sum(
        1 for g in gensets if g.status in (GensetStatus.ON, GensetStatus.WARMUP)
    )
    if candidate is StatusCommand.START and engaged < len(gensets):
        engaged += 1
    if engaged * GENSET_P_MIN <= dl + BALANCE_EPS:
        return True  # power floors can never exceed the demand floor

    # floors disappear once every genset has been stopped; past the last
    # minimum-runtime lock the stop-everything fallback needs one stop
    # command per genset, so nothing can go wrong beyond that point
    lock = 0
    for g in gensets:
        if g.status == GensetStatus.ON:
            lock = max(lock, GENSET_MIN_RUNTIME - g.counter)
        elif g.status == GensetStatus.WARMUP:
            lock = max(lock, g.counter + GENSET_MIN_RUNTIME)
        elif g.status == GensetStatus.OFF and candidate is StatusCommand.START:
            lock = max(lock, GENSET_WARMUP_MIN + GENSET_MIN_RUNTIME)
    horizon = min(EXCESS_HORIZON, max(lock, 0) + len(gensets) + 1)

    sim = [g.clone() for g in gensets]
    ctx = StepContext(in_rollout=True, track_degradation=False)
    for tau in range(horizon):
        if all(g.status == GensetStatus.OFF for g in sim):
            return True
        d = max(demand - tau * scenario.demand_drop, dl)
        delta = candidate if tau == 0 else StatusCommand.STOP
        plan = plan_minute(
            soc,
            sim,
            MicrogridAction(delta, -BATTERY_NOMINAL_KW),
            d,
            0.0,
        )
        if plan.expected_balance > BALANCE_EPS:
            return False
        for g, gd, sp in zip(sim, plan.genset_deltas, plan.genset_setpoints):
            g.step(GensetAction(gd, sp), ctx)
        soc = battery_next_soc(soc, plan.p_batt)
    return True


def recovery_shield(
    soc: float,
    gensets,
    requested: StatusCommand,
    demand: float,
    wind_avail: float,
    scenario: RecoveryScenario,
):
    """Vet the requested status command; returns (command, failed_info).

    Candidates are tried in least-different order and graded on three
    rollouts: the worst-case shortage scenario with reserves (the hard
    guarantee), the constant/no-reserve scenario (keeps reserve reliance
    down), and the forced-excess scenario (keeps the genset power floors
    absorbable).  The first candidate passing all three wins; failing
    that, the first passing worst-case + constant, then worst-case +
    excess, then worst-case alone.  Only a candidate failing the
    worst-case rollout is hard-rejected, so a compliant start state can
    always produce some command.  failed_info is None when the request is
    returned untouched, otherwise (requested, replacement, scenario_name)
    of the first failing rollout of the request.
    """
    candidates = []
    for c in (requested, StatusCommand.NOTHING, StatusCommand.START, StatusCommand.STOP):
        if c not in candidates:
            candidates.append(c)
    first_failure = None
    graded = []  # (candidate, constant_ok, excess_ok)
    for cand in candidates:
        if not _project_candidate(soc, gensets, cand, demand, wind_avail, scenario, True):
            if cand is requested:
                first_failure = "worst-case"
            continue
        constant_ok = _project_candidate(
            soc, gensets, cand, demand, wind_avail, scenario, False
        )
        excess_ok = _project_excess(soc, gensets, cand, demand, scenario)
        if cand is requested and not constant_ok:
            first_failure = "constant"
        if cand is requested and constant_ok and not excess_ok:
            first_failure = "excess"
        if constant_ok and excess_ok:
            if cand is requested:
                return cand, None
            return cand, (requested, cand, first_failure or "worst-case")
        graded.append((cand, constant_ok, excess_ok))
    for want_constant, want_excess in ((True, False), (False, True), (False, False)):
        for cand, constant_ok, excess_ok in graded:
            if (constant_ok or not want_constant) and (excess_ok or not want_excess):
                if cand is requested:
                    return cand, None
                return cand, (requested, cand, first_failure or "worst-case")
    raise InvariantFailure(
        "recovery shield found no compliant status command; "
        "initial state was not recoverable"
    )


# ---------------------------------------------------------------------------
# SCU dispatchers and node assembly


def orchestrator_dispatcher(node: ScuNode, action: OrchestratorAction, ctx: StepContext):
    twins = [n.device for n in node.controller.dt_state]
    deltas = orchestrator_status_dispatch(twins, action.delta)
    setpoints = equal_power_fraction(
        twins, deltas, action.p_setpoint, ctx.allow_genset_overload
    )
    return [GensetAction(d, sp) for d, sp in zip(deltas, setpoints)]


def microgrid_dispatcher(node: ScuNode, action: MicrogridAction, ctx: StepContext):
    """Top-level shield: recovery vetting plus zero-balance dispatch."""
    twin_batt, _twin_wind, twin_orch = node.controller.dt_state
    genset_twins = [n.device for n in twin_orch.controller.dt_state]
    soc = twin_batt.device.soc

    delta = action.delta_orch
    intervention = None
    if ctx.recovery_enabled:
        scenario = node.controller.sc_state.get("scenario") or RecoveryScenario()
        delta, intervention = recovery_shield(
            soc, genset_twins, delta, ctx.demand, ctx.wind_avail, scenario
        )

    plan = plan_minute(
        soc,
        genset_twins,
        MicrogridAction(delta, action.p_batt_setpoint),
        ctx.demand,
        ctx.wind_avail,
        reserves_permitted=True,
        device_shields=ctx.device_shields_enabled,
    )
    ctx.allow_battery_reserve = plan.battery_reserve_used
    ctx.allow_genset_overload = plan.genset_overload_used
    node.controller.sc_state["plan"] = plan
    node.controller.sc_state["intervention"] = intervention
    return [
        BatteryAction(plan.p_batt),
        WindAction(plan.p_wind),
        OrchestratorAction(delta, plan.p_orch),
    ]


def microgrid_controller_hook(node: ScuNode, sc_state: dict, obs, ctx: StepContext):
    batt_obs, wind_obs, orch_obs = obs
    p_orch = sum(g.p_out for g in orch_obs)
    fuel = sum(g.last_fuel for g in orch_obs)
    balance = batt_obs.p_out + wind_obs.p_out + p_orch - ctx.demand
    sc_state["last_metrics"] = {
        "balance": balance,
        "fuel_l": fuel,
        "degradation": batt_obs.last_degradation,
        "battery_reserve_used": ctx.allow_battery_reserve,
        "genset_overload_used": ctx.allow_genset_overload,
        "intervention": sc_state.get("intervention"),
    }
    return sc_state


def build_microgrid(
    battery: Battery,
    gensets,
    scenario: RecoveryScenario | None = None,
    wind=None,
) -> ScuNode:
    """Assemble the full SCU tree: battery, wind, orchestrator(gensets)."""
    from .devices import WindTurbine

    batt_node = ScuNode("battery", device=battery)
    wind_node = ScuNode("wind", device=wind or WindTurbine())
    genset_nodes = [
        ScuNode(f"genset{i + 1}", device=g) for i, g in enumerate(gensets)
    ]
    orch_node = ScuNode(
        "orchestrator", children=genset_nodes, dispatcher=orchestrator_dispatcher
    )
    grid = ScuNode(
        "microgrid",
        children=[batt_node, wind_node, orch_node],
        dispatcher=microgrid_dispatcher,
        controller_hook=microgrid_controller_hook,
    )
    grid.controller.sc_state["scenario"] = scenario or RecoveryScenario()
    return grid
