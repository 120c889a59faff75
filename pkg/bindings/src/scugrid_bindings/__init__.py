"""Flat-vector bindings over the shielded microgrid environment.

External training frameworks need a fixed observation shape and a plain
numeric action interface.  This package wraps the native environment in
an opaque handle with four operations: :func:`make`, :func:`reset`,
:func:`step`, and :func:`close`.

Action layout
-------------
``(delta, setpoint)`` where ``delta`` is an integer in ``{0, 1, 2}``
(0 = no status change, 1 = start a generator, 2 = stop a generator) and
``setpoint`` is the battery power command in kW, clipped to
[-600, 600] (positive = discharge).

Observation layout (version 1.0.0 — field order is frozen)
----------------------------------------------------------
One float64 vector of length 181:

====== ======================================================
index  field
====== ======================================================
0      minute within the series
1      demand [kW]
2      available wind power [kW]
3      battery state of charge [0, 1]
4      battery output power [kW] (negative = charging)
5      battery degradation cost accrued last minute
6      wind available power seen by the turbine [kW]
7      wind output power [kW]
8-12   generator 1: status code, counter, power, fuel, 48 h cap
13-17  generator 2: same five fields
18-47  demand forecast, 30 points 15 minutes apart [kW]
48-77  wind forecast, 30 points 15 minutes apart [kW]
78     number of valid battery switching points that follow
79-180 switching-point buffer, zero-padded to 102 slots
====== ======================================================

Generator status codes: 0 = Off, 1 = WarmUp, 2 = On, 3 = CoolDown.
The switching-point buffer holds at most ceil(1/w) + 2 = 102 entries
for the default discretization w = 0.01, so the padded size is constant.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from scugrid.core import ContractViolation, MicrogridAction, StatusCommand
from scugrid.devices import BATTERY_NOMINAL_KW, GensetStatus
from scugrid.env import EpisodeConfig, MicrogridEnv
from scugrid.exogenous import FORECAST_POINTS, load_series, synth_series

__version__ = "0.1.0"
OBSERVATION_LAYOUT_VERSION = "1.0.0"

_DELTAS = (StatusCommand.NOTHING, StatusCommand.START, StatusCommand.STOP)
_STATUS_CODES = {
    GensetStatus.OFF: 0.0,
    GensetStatus.WARMUP: 1.0,
    GensetStatus.ON: 2.0,
    GensetStatus.COOLDOWN: 3.0,
}

_N_GENSETS = 2
_GENSET_FIELDS = 5
_HEADER_FIELDS = 8

_CONFIG_KEYS = frozenset(
    {
        "data",
        "synth_seed",
        "days",
        "profile",
        "alpha",
        "seed",
        "forecast_noise",
        "recovery_shield",
        "device_shields",
        "unsafe",
        "intervention_penalty",
    }
)

_live_handles: dict[int, "EnvHandle"] = {}
_handle_ids = itertools.count(1)


def buffer_slots(w: float = 0.01) -> int:
    """Padded switching-point buffer size for discretization step w."""
    return math.ceil(1.0 / w) + 2


OBSERVATION_SIZE = (
    _HEADER_FIELDS
    + _N_GENSETS * _GENSET_FIELDS
    + 2 * FORECAST_POINTS
    + 1
    + buffer_slots()
)


class BindingsError(ValueError):
    """Raised for bad configs, bad actions, or use of a closed handle."""


class EnvHandle:
    """Opaque handle pairing one native environment with its layout info."""

    __slots__ = ("_id", "_env", "_closed")

    def __init__(self, env: MicrogridEnv):
        self._id = next(_handle_ids)
        self._env = env
        self._closed = False

    @property
    def closed(self) -> bool:
        return self._closed

    def _native(self) -> MicrogridEnv:
        if self._closed:
            raise BindingsError("operation on a closed environment handle")
        return self._env


def make(config: dict | None = None) -> EnvHandle:
    """Construct a native environment from a flat config mapping.

    Recognized keys: ``data`` (CSV path) or ``synth_seed`` with optional
    ``days``/``profile``; ``alpha``, ``seed``, ``forecast_noise``,
    ``recovery_shield``, ``device_shields`` (False requires
    ``unsafe=True``), ``intervention_penalty``.  Unknown keys are
    rejected.  Episode length is days * 1440 minutes.
    """
    config = dict(config or {})
    unknown = set(config) - _CONFIG_KEYS
    if unknown:
        raise BindingsError(f"unknown config keys: {sorted(unknown)}")
    if not config.get("device_shields", True) and not config.get("unsafe", False):
        raise BindingsError("device_shields=False requires unsafe=True")

    days = int(config.get("days", 1))
    seed = int(config.get("seed", 0))
    if "data" in config:
        series = load_series(config["data"])
    else:
        series = synth_series(
            int(config.get("synth_seed", seed)), days, config.get("profile", "nominal")
        )
    try:
        episode = EpisodeConfig(
            length=days * 1440,
            alpha=float(config.get("alpha", 1.0)),
            seed=seed,
            forecast_noise=float(config.get("forecast_noise", 0.0)),
            recovery_shield=bool(config.get("recovery_shield", True)),
            device_shields=bool(config.get("device_shields", True)),
            intervention_penalty=float(config.get("intervention_penalty", 0.0)),
        )
    except ValueError as exc:
        raise BindingsError(str(exc)) from None
    handle = EnvHandle(MicrogridEnv(series, episode))
    _live_handles[handle._id] = handle
    return handle


def reset(handle: EnvHandle) -> np.ndarray:
    """Start a new episode; returns the initial observation vector."""
    return _encode(handle._native().reset())


def step(handle: EnvHandle, action) -> tuple[np.ndarray, float, bool, dict]:
    """Advance one minute.

    action is ``(delta, setpoint)`` as documented in the module header.
    Returns ``(observation, reward, done, info)``; ``info`` carries the
    per-step metrics delta under ``"metrics"``.
    """
    env = handle._native()
    delta, setpoint = action
    delta = int(delta)
    if delta not in (0, 1, 2):
        raise BindingsError(f"discrete action must be 0, 1 or 2, got {delta}")
    setpoint = float(np.clip(float(setpoint), -BATTERY_NOMINAL_KW, BATTERY_NOMINAL_KW))
    try:
        obs, reward, done, metrics, _row = env.step(
            MicrogridAction(_DELTAS[delta], setpoint)
        )
    except ContractViolation as exc:
        raise BindingsError(str(exc)) from None
    return _encode(obs), float(reward), bool(done), {"metrics": metrics.as_dict()}


def close(handle: EnvHandle) -> None:
    """Release the native environment; the handle becomes unusable."""
    if handle._closed:
        return
    handle._closed = True
    handle._env = None
    _live_handles.pop(handle._id, None)


def live_handle_count() -> int:
    """Number of handles created but not yet closed (leak diagnostics)."""
    return len(_live_handles)


def _encode(obs) -> np.ndarray:
    vec = np.zeros(OBSERVATION_SIZE, dtype=np.float64)
    vec[0] = obs.minute
    vec[1] = obs.demand
    vec[2] = obs.wind_avail
    vec[3] = obs.battery.soc
    vec[4] = obs.battery.p_out
    vec[5] = obs.battery.last_degradation
    vec[6] = obs.wind.p_avail
    vec[7] = obs.wind.p_out
    i = _HEADER_FIELDS
    for g, cap in zip(obs.gensets, obs.genset_caps):
        vec[i] = _STATUS_CODES[g.status]
        vec[i + 1] = g.counter
        vec[i + 2] = g.p_out
        vec[i + 3] = g.last_fuel
        vec[i + 4] = cap
        i += _GENSET_FIELDS
    vec[i : i + FORECAST_POINTS] = obs.demand_forecast
    i += FORECAST_POINTS
    vec[i : i + FORECAST_POINTS] = obs.wind_forecast
    i += FORECAST_POINTS
    points = obs.battery.rainflow_R
    vec[i] = len(points)
    vec[i + 1 : i + 1 + len(points)] = points
    return vec


__all__ = [
    "OBSERVATION_LAYOUT_VERSION",
    "OBSERVATION_SIZE",
    "BindingsError",
    "EnvHandle",
    "buffer_slots",
    "close",
    "live_handle_count",
    "make",
    "reset",
    "step",
]
