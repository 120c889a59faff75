"""Generic hierarchical shielded-controller machinery.

A node couples a shielded controller (dispatcher + digital twin) to a
real subsystem, which is either a single device or an ordered group of
child nodes.  The recursive step function dispatches an action through
the node's shield, advances the subsystem, and refreshes the controller
state including the digital twin.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional, Sequence


class StatusCommand(enum.Enum):
    START = "start"
    STOP = "stop"
    NOTHING = "nothing"


@dataclass(frozen=True)
class MicrogridAction:
    delta_orch: StatusCommand
    p_batt_setpoint: float


@dataclass(frozen=True)
class OrchestratorAction:
    delta: StatusCommand
    p_setpoint: float


@dataclass(frozen=True)
class GensetAction:
    delta: StatusCommand
    p_setpoint: float


@dataclass(frozen=True)
class BatteryAction:
    p_setpoint: float


@dataclass(frozen=True)
class WindAction:
    p_setpoint: float


class ContractViolation(Exception):
    """An operation was invoked outside its contract."""


class InvariantFailure(Exception):
    """An internal safety invariant that shields must uphold was broken."""


@dataclass
class StepContext:
    """Per-minute inputs and authorization flags threaded through a step.

    Reserve authorizations are granted only by the top-level dispatch
    logic, never directly by the caller.
    """

    demand: float = 0.0
    wind_avail: float = 0.0
    allow_battery_reserve: bool = False
    allow_genset_overload: bool = False
    recovery_enabled: bool = True
    device_shields_enabled: bool = True
    in_rollout: bool = False
    track_degradation: bool = True
    events: Optional[list] = None

    def child(self) -> "StepContext":
        return self


class Device:
    """Interface of a leaf subsystem bound to a device node."""

    def shield(self, action, ctx: StepContext):
        raise NotImplementedError

    def step(self, action, ctx: StepContext):
        """Advance one minute; returns the post-step state snapshot."""
        raise NotImplementedError

    def snapshot(self):
        raise NotImplementedError

    def apply_estimate(self, obs) -> None:
        """Exact-sensor state estimation hook: adopt the observed state."""
        raise NotImplementedError

    def clone(self) -> "Device":
        raise NotImplementedError


@dataclass
class ControllerState:
    """Controller-internal record plus the digital twin of the subsystem."""

    sc_state: dict
    dt_state: Any  # Device clone for leaves, list[ScuNode] for systems


class ScuNode:
    """One node of the shielded-controller tree."""

    def __init__(
        self,
        node_id: str,
        device: Optional[Device] = None,
        children: Sequence["ScuNode"] = (),
        dispatcher: Optional[Callable] = None,
        controller_hook: Optional[Callable] = None,
    ):
        if (device is None) == (not children):
            raise ContractViolation(
                f"node {node_id!r}: exactly one of device or children required"
            )
        self.node_id = node_id
        self.device = device
        self.children = list(children)
        self.dispatcher = dispatcher
        self.controller_hook = controller_hook
        self.controller = ControllerState(sc_state={}, dt_state=self._build_twin())

    # -- structure ---------------------------------------------------------

    @property
    def is_device(self) -> bool:
        return self.device is not None

    def _build_twin(self):
        if self.is_device:
            return self.device.clone()
        return [child.clone() for child in self.children]

    def clone(self) -> "ScuNode":
        node = ScuNode.__new__(ScuNode)
        node.node_id = self.node_id
        node.device = self.device.clone() if self.device else None
        node.children = [c.clone() for c in self.children]
        node.dispatcher = self.dispatcher
        node.controller_hook = self.controller_hook
        if self.is_device:
            twin = self.controller.dt_state.clone()
        else:
            twin = [n.clone() for n in self.controller.dt_state]
        node.controller = ControllerState(
            sc_state=dict(self.controller.sc_state), dt_state=twin
        )
        return node

    def iter_nodes(self):
        yield self
        for child in self.children:
            yield from child.iter_nodes()

    # -- observation helpers ----------------------------------------------

    def state_estimate(self):
        """Current digital-twin state, nested per child for systems."""
        if self.is_device:
            return self.controller.dt_state.snapshot()
        return tuple(n.state_estimate() for n in self.controller.dt_state)

    def real_state(self):
        if self.is_device:
            return self.device.snapshot()
        return tuple(c.real_state() for c in self.children)


def dispatch(node: ScuNode, action, ctx: StepContext):
    """Run the node's shield, producing one compliant action per component."""
    if node.dispatcher is not None:
        return node.dispatcher(node, action, ctx)
    if node.is_device:
        return [node.device.shield(action, ctx) if ctx.device_shields_enabled else action]
    raise ContractViolation(f"system node {node.node_id!r} has no dispatcher")


def step(node: ScuNode, action, ctx: StepContext):
    """Recursive shielded step; returns the refreshed digital-twin state."""
    compliant = dispatch(node, action, ctx)
    if node.is_device:
        obs = node.device.step(compliant[0], ctx)
    else:
        if len(compliant) != len(node.children):
            raise ContractViolation(
                f"node {node.node_id!r}: dispatcher produced {len(compliant)} "
                f"actions for {len(node.children)} children"
            )
        states = tuple(
            step(child, act, ctx) for child, act in zip(node.children, compliant)
        )
        obs = states
    node.controller = update_controller(node, node.controller, obs, ctx)
    return node.state_estimate()


def update_controller(
    node: ScuNode, controller: ControllerState, obs, ctx: StepContext
) -> ControllerState:
    """Refresh controller-internal state and the digital twin from obs."""
    sc_state = controller.sc_state
    if node.controller_hook is not None:
        sc_state = node.controller_hook(node, dict(sc_state), obs, ctx)
    update_dt(node, controller.dt_state, obs, ctx)
    return ControllerState(sc_state=sc_state, dt_state=controller.dt_state)


def update_dt(node: ScuNode, dt_state, obs, ctx: StepContext):
    """Digital-twin update: exact estimation for devices, recursion for systems."""
    if node.is_device:
        dt_state.apply_estimate(obs)
        return dt_state
    if len(obs) != len(node.children):
        raise ContractViolation(
            f"node {node.node_id!r}: observation arity {len(obs)} != "
            f"{len(node.children)} children"
        )
    for twin_node, sub_obs in zip(dt_state, obs):
        _sync_twin_node(twin_node, sub_obs, ctx)
    return dt_state


def _sync_twin_node(twin_node: ScuNode, obs, ctx: StepContext) -> None:
    """Update a twinned child SCU: its device twin and its controller twin."""
    if twin_node.is_device:
        twin_node.device.apply_estimate(obs)
        twin_node.controller = update_controller(twin_node, twin_node.controller, obs, ctx)
        return
    for grandchild, sub_obs in zip(twin_node.children, obs):
        _sync_twin_node(grandchild, sub_obs, ctx)
    twin_node.controller = update_controller(twin_node, twin_node.controller, obs, ctx)


def simulate(node: ScuNode, actions: Sequence, exo: Sequence, ctx_template=None):
    """Project future states on a deep copy; the live tree is untouched.

    exo is a sequence of (demand, wind_avail) pairs aligned with actions.
    """
    if len(actions) != len(exo):
        raise ContractViolation("actions and exogenous sequences differ in length")
    ghost = node.clone()
    out = []
    for action, (demand, wind_avail) in zip(actions, exo):
        ctx = replace(
            ctx_template or StepContext(),
            demand=demand,
            wind_avail=wind_avail,
            in_rollout=True,
            track_degradation=False,
        )
        out.append(step(ghost, action, ctx))
    return out
