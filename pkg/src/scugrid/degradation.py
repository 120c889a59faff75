"""Online cycle-based battery degradation.

Turning points of the SoC trace are tracked online with a discretized
4-point rainflow buffer behind a 3-slot hysteresis window.  The most
recent confirmed turning point anchors an exponential per-step cost, so
that the per-step costs summed over a trajectory track a classical
offline rainflow analysis of the same trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class DegradationParams:
    """Cost-model coefficients.

    alpha_d: degradation rate, beta: sensitivity to SoC excursions,
    w: discretization width of the turning-point buffer (SoC fraction).
    """

    alpha_d: float = 5.0
    beta: float = 1.0
    w: float = 0.01

    def __post_init__(self):
        if self.alpha_d <= 0:
            raise ValueError("alpha_d must be > 0")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if not 0 < self.w < 1:
            raise ValueError("w must be in (0, 1)")


@dataclass
class SwitchingBuffer:
    """Rainflow turning-point buffer R plus 3-slot hysteresis window F."""

    R: list = field(default_factory=list)
    F: list = field(default_factory=lambda: [0.0, 0.0, 0.0])

    @classmethod
    def seeded(cls, soc: float, w: float) -> "SwitchingBuffer":
        """Buffer anchored at the initial SoC so R[-1] is always defined."""
        x = discretize(soc, w)
        return cls(R=[x], F=[x, x, x])

    def clone(self) -> "SwitchingBuffer":
        return SwitchingBuffer(R=list(self.R), F=list(self.F))


def discretize(x: float, w: float) -> float:
    """Round to the nearest multiple of w, halves away from zero."""
    n = math.floor(abs(x) / w + 0.5)
    return math.copysign(n * w, x)


def rainflow_4p(R: list) -> bool:
    """4-point condition: the two inner points lie inside the outer pair."""
    if len(R) < 4:
        raise ValueError("rainflow_4p needs at least 4 points")
    return (
        min(R[-4], R[-1]) <= min(R[-3], R[-2])
        and max(R[-3], R[-2]) <= max(R[-4], R[-1])
    )


def hysteresis_filter(F: list) -> bool:
    """Advance the 3-slot window in place; True when a turning point confirmed.

    Sub-threshold wiggles are skipped; on a confirmed reversal the window
    shifts so F[0] holds the turning point value.
    """
    tp_found = False
    if F[2] < F[1]:
        if F[0] >= F[1]:
            F[1] = F[2]
        else:
            tp_found = True
            F[0] = F[1]
            F[1] = F[2]
    elif F[2] > F[1]:
        if F[0] <= F[1]:
            F[1] = F[2]
        else:
            tp_found = True
            F[0] = F[1]
            F[1] = F[2]
    else:
        if F[0] > F[1]:
            F[1] = min(F[1], F[2])
        else:
            F[1] = max(F[1], F[2])
    return tp_found


def update_switching_points(x: float, buf: SwitchingBuffer, w: float) -> None:
    """Feed one SoC sample into the buffer, closing any completed cycles."""
    F, R = buf.F, buf.R
    F[2] = discretize(x, w)
    tp_found = hysteresis_filter(F)
    if tp_found:
        R.append(discretize(F[0], w))
    R.append(discretize(x, w))
    while len(R) >= 4 and rainflow_4p(R):
        R[-3] = R[-1]
        del R[-2:]
    del R[-1]


def cycle_step_cost(soc: float, b: float, R: list, params: DegradationParams) -> float:
    """Exponential cost of moving from soc to soc+b relative to anchor R[-1].

    Near turning points the raw difference can go negative; it is then
    replaced by a usage-scaled positive fallback.
    """
    if not R:
        raise ValueError("switching-point buffer is empty; seed it first")
    a, beta = params.alpha_d, params.beta
    anchor = R[-1]
    raw = a * math.exp(beta * abs(soc + b - anchor)) - a * math.exp(beta * abs(soc - anchor))
    if raw >= 0:
        return raw
    return abs(b) * a * (math.exp(beta * abs(params.w)) - 1.0) / params.w


def linear_step_cost(b: float, alpha_d: float) -> float:
    """Linear fallback model: cost proportional to |SoC change|."""
    return alpha_d * abs(b)


class OnlineDegradation:
    """Per-step degradation accumulator around one switching buffer."""

    def __init__(self, initial_soc: float, params: DegradationParams | None = None):
        self.params = params or DegradationParams()
        self.buffer = SwitchingBuffer.seeded(initial_soc, self.params.w)
        self._soc = initial_soc

    def step(self, new_soc: float) -> float:
        cost = cycle_step_cost(self._soc, new_soc - self._soc, self.buffer.R, self.params)
        update_switching_points(new_soc, self.buffer, self.params.w)
        self._soc = new_soc
        return cost


def online_trace_costs(trace, params: DegradationParams | None = None) -> list:
    """Per-step costs of a full SoC trace through the online algorithm."""
    params = params or DegradationParams()
    acc = OnlineDegradation(trace[0], params)
    return [acc.step(x) for x in trace[1:]]


def _turning_points(values: list) -> list:
    """Strict local extrema of a sequence, endpoints included."""
    pts = [values[0]]
    for v in values[1:]:
        if v != pts[-1]:
            pts.append(v)
    out = [pts[0]]
    for i in range(1, len(pts) - 1):
        if (pts[i] - pts[i - 1]) * (pts[i + 1] - pts[i]) < 0:
            out.append(pts[i])
    if len(pts) > 1:
        out.append(pts[-1])
    return out


def offline_rainflow_cycles(trace, w: float) -> list:
    """Classical offline rainflow extraction on the discretized trace.

    Returns (range, count) pairs; closed cycles count 1.0, the residue
    contributes half cycles of count 0.5.
    """
    disc = [discretize(x, w) for x in trace]
    tps = _turning_points(disc)
    cycles = []
    stack = []
    for point in tps:
        stack.append(point)
        while len(stack) >= 4:
            r1 = abs(stack[-3] - stack[-2])
            r0 = abs(stack[-4] - stack[-3])
            r2 = abs(stack[-2] - stack[-1])
            if r1 <= r0 and r1 <= r2:
                cycles.append((r1, 1.0))
                del stack[-3:-1]
            else:
                break
    for i in range(len(stack) - 1):
        cycles.append((abs(stack[i] - stack[i + 1]), 0.5))
    return cycles


def offline_rainflow_oracle(
    trace,
    params: DegradationParams | None = None,
    full_cycle_weight: float = 1.0,
    half_cycle_weight: float = 0.5,
) -> float:
    """Offline total degradation used to validate the online sum.

    A cycle of range A contributes weight * alpha_d * (exp(beta * A) - 1).
    With the default weights a closed cycle counts once and a residue
    half-cycle counts half.  The online algorithm accrues cost on both
    legs of every cycle, so it tracks the (2.0, 1.0) weighting; see tests.
    """
    if len(trace) < 2:
        raise ValueError("trace must have at least 2 points")
    params = params or DegradationParams()
    total = 0.0
    for rng, count in offline_rainflow_cycles(trace, params.w):
        weight = full_cycle_weight if count == 1.0 else half_cycle_weight
        total += weight * params.alpha_d * (math.exp(params.beta * rng) - 1.0)
    return total
