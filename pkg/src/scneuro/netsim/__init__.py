from scneuro.netsim.poisson import generate_poisson, population_schedule
from scneuro.netsim.protocols import (
    BackgroundSchedule,
    ExperimentProtocol,
    ExperimentResult,
    StimulusSweepSchedule,
    run_experiment,
)
from scneuro.netsim.routing import Deliveries, Delivery, fan_out, route_spike
from scneuro.netsim.simulator import NetworkSimulator, SimulationStats, SpikeRecord
from scneuro.netsim.topology import Topology, build_topology

__all__ = [
    "BackgroundSchedule",
    "Deliveries",
    "Delivery",
    "ExperimentProtocol",
    "ExperimentResult",
    "NetworkSimulator",
    "SimulationStats",
    "SpikeRecord",
    "StimulusSweepSchedule",
    "Topology",
    "build_topology",
    "fan_out",
    "generate_poisson",
    "population_schedule",
    "route_spike",
    "run_experiment",
]
