"""Scalar, cycle-by-cycle emulation of a single SC neuron.

Slow but transparent: each clock cycle runs ``clock_cycle`` on every
multi-synapse and the membrane switches at NCO overflows. ``NeuronPopulation``
with NCO switch timing must agree with it bit for bit on the registers and
spike times.
"""

from collections.abc import Iterable
from dataclasses import dataclass, replace

import numpy as np

from scneuro.config import NeuronParams
from scneuro.core import RegisterSettings, SpikeEvent
from scneuro.engine.membrane import MembraneState, relax
from scneuro.engine.registers import SynapseRegisterState, accumulate_weight, clock_cycle
from scneuro.engine.stp import StpState, stp_on_spike


@dataclass(frozen=True, slots=True)
class NeuronState:
    membrane: MembraneState
    synapses: tuple[SynapseRegisterState, ...]
    stp: StpState
    source: int = 0

    @classmethod
    def initial(cls, params: NeuronParams, settings: RegisterSettings, source: int = 0):
        """Membrane at rest, all registers cleared."""
        return cls(
            membrane=MembraneState(v=params.v_rest),
            synapses=tuple(
                SynapseRegisterState.for_channel(ch, settings) for ch in settings.channels
            ),
            stp=StpState.from_params(params.stp, settings.hardware.stp_weight_max),
            source=source,
        )


def neuron_tick(
    state: NeuronState,
    t: int,
    params: NeuronParams,
    settings: RegisterSettings,
    inputs: Iterable[tuple[int, int]] = (),
) -> tuple[NeuronState, list[SpikeEvent]]:
    """Advance one neuron through tick ``t``.

    ``inputs`` holds (channel, weight) pairs arriving at the start of the
    tick, with weights already scaled by the sender's STP output.
    """
    h = settings.hardware
    synapses = list(state.synapses)
    for channel, weight in inputs:
        synapses[channel] = accumulate_weight(synapses[channel], weight)

    c0 = t * h.cycles_per_tick
    counts = [0] * len(synapses)
    for cycle in range(c0, c0 + h.cycles_per_tick):
        for index, synapse in enumerate(synapses):
            synapses[index], switched = clock_cycle(synapse, cycle)
            counts[index] += switched

    leak = (c0 + h.cycles_per_tick) // settings.leak_period - c0 // settings.leak_period
    membrane = state.membrane
    if t < membrane.refrac_until:
        membrane = replace(membrane, v=params.v_reset)
        return replace(state, membrane=membrane, synapses=tuple(synapses)), []

    v = relax(np.array([membrane.v]), params.v_rest, h.alpha, leak)
    for channel, count in zip(settings.channels, counts, strict=True):
        v = relax(v, channel.E_syn, h.alpha, np.array([count]))
    v = float(v[0])
    if v < params.v_thresh:
        return replace(state, membrane=replace(membrane, v=v), synapses=tuple(synapses)), []

    refrac_ticks = max(1, round(params.T_refrac / h.tick))
    dt = np.inf if membrane.last_spike is None else (t - membrane.last_spike) * h.tick
    stp, weight = stp_on_spike(state.stp, dt)
    sfa = settings.kind_channel["sfa"]
    synapses[sfa] = replace(
        synapses[sfa], gsyn_reg=min(synapses[sfa].gsyn_reg + settings.increment("sfa"), h.gsyn_max)
    )
    membrane = MembraneState(v=params.v_reset, refrac_until=t + refrac_ticks, last_spike=t)
    new_state = NeuronState(membrane, tuple(synapses), stp, state.source)
    return new_state, [SpikeEvent(t, state.source, weight)]
