"""Continuous-time conductance-based LIF neuron used as an oracle for the SC engine.

C_mem dv/dt = g_mem (v_rest - v) + sum_s g_s (E_s - v), with every g_s
decaying exponentially and jumping by its amplitude on input. Steps use
exponential Euler with the conductances taken at the step midpoint.
"""

import math

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, replace
from types import MappingProxyType

import numpy as np

from loguru import logger

from scneuro.config import NeuronParams
from scneuro.constants import SYNAPSE_KINDS


def _zero_conductances() -> Mapping[str, float]:
    return MappingProxyType(dict.fromkeys(SYNAPSE_KINDS, 0.0))


@dataclass(frozen=True, slots=True)
class OdeState:
    v: float
    g: Mapping[str, float] = field(default_factory=_zero_conductances)
    t: float = 0.0
    refrac_until: float = 0.0
    last_spike: float | None = None

    def __post_init__(self):
        negative = {kind: value for kind, value in self.g.items() if value < 0}
        if negative:
            raise ValueError(f"Conductances must be non-negative, got {negative}")

    def i_syn(self, p: NeuronParams) -> float:
        """Synaptic current (nA) through the rec and bg conductances."""
        return sum(self.g[kind] * (p.E_syn(kind) - self.v) for kind in ("rec", "bg")) * 1e-3

    def i_sfa(self, p: NeuronParams) -> float:
        """Adaptation current (nA); negative above E_sfa."""
        return self.g["sfa"] * (p.E_sfa - self.v) * 1e-3


def _relax_voltage(v: float, g: Mapping[str, float], p: NeuronParams, dt: float) -> float:
    g_total = p.g_mem
    weighted = p.g_mem * p.v_rest
    for kind, value in g.items():
        g_total += value
        weighted += value * p.E_syn(kind)
    v_inf = weighted / g_total
    return v_inf + (v - v_inf) * math.exp(-dt * g_total / (1000.0 * p.C_mem))


def step_ode(
    s: OdeState,
    dt: float,
    p: NeuronParams,
    inputs: Mapping[str, float] | None = None,
) -> OdeState:
    """Advance the oracle by dt (ms).

    ``inputs`` maps a synapse kind to the summed conductance (nS) of the
    spikes arriving in [t, t + dt). A threshold crossing at the end of the
    step resets v, starts the refractory period and steps g_sfa.
    """
    if dt <= 0:
        raise ValueError(f"Step must be positive, got dt={dt}")
    g = dict(s.g)
    for kind, amount in (inputs or {}).items():
        g[kind] += amount

    midpoint = {kind: value * math.exp(-0.5 * dt / p.tau_syn(kind)) for kind, value in g.items()}
    t = s.t + dt
    if s.t < s.refrac_until:
        v = p.v_reset
    else:
        v = _relax_voltage(s.v, midpoint, p, dt)
    g = {kind: value * math.exp(-dt / p.tau_syn(kind)) for kind, value in g.items()}

    if s.t >= s.refrac_until and v >= p.v_thresh:
        g["sfa"] += p.g_sfa
        return OdeState(
            v=p.v_reset,
            g=MappingProxyType(g),
            t=t,
            refrac_until=t + p.T_refrac,
            last_spike=t,
        )
    return replace(s, v=v, g=MappingProxyType(g), t=t)


class ReferenceNeuron:
    """Drive ``step_ode`` with tick-aligned input trains and record the trace."""

    def __init__(self, params: NeuronParams, dt: float = 0.01, tick: float = 0.1):
        ratio = tick / dt
        if not math.isclose(ratio, round(ratio)):
            raise ValueError(f"Step {dt} ms must divide the tick {tick} ms")
        self.params = params
        self.dt = dt
        self.tick = tick
        self.substeps = round(ratio)

    def simulate(
        self,
        n_ticks: int,
        inputs: Mapping[str, Iterable[tuple[int, float]]],
    ) -> tuple[np.ndarray, list[float]]:
        """Run n_ticks ticks; inputs maps kind to (tick, conductance nS) pairs.

        Returns the membrane voltage at the end of every tick and the spike
        times in ms.
        """
        per_tick: dict[int, dict[str, float]] = {}
        for kind, events in inputs.items():
            for tick, amount in events:
                slot = per_tick.setdefault(tick, {})
                slot[kind] = slot.get(kind, 0.0) + amount

        state = OdeState(v=self.params.v_rest)
        trace = np.empty(n_ticks)
        spikes: list[float] = []
        for tick in range(n_ticks):
            arriving = per_tick.get(tick)
            for _ in range(self.substeps):
                state = step_ode(state, self.dt, self.params, arriving)
                arriving = None
                if state.last_spike == state.t:
                    spikes.append(state.t)
            trace[tick] = state.v
        logger.debug(f"Reference run: {n_ticks} ticks, {len(spikes)} spikes")
        return trace, spikes
