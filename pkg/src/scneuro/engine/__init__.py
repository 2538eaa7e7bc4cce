from scneuro.engine.membrane import MembraneState, apply_switch, relax
from scneuro.engine.neuron import NeuronState, neuron_tick
from scneuro.engine.population import NeuronPopulation, tick_segments
from scneuro.engine.registers import (
    SynapseRegisterState,
    accumulate_weight,
    clock_cycle,
    decay_tick,
    nco_tick,
)
from scneuro.engine.stp import StpBank, StpState, stp_on_spike

__all__ = [
    "MembraneState",
    "NeuronPopulation",
    "NeuronState",
    "StpBank",
    "StpState",
    "SynapseRegisterState",
    "accumulate_weight",
    "apply_switch",
    "clock_cycle",
    "decay_tick",
    "nco_tick",
    "neuron_tick",
    "relax",
    "stp_on_spike",
    "tick_segments",
]
