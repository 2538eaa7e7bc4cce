from dataclasses import dataclass

import numpy as np

from scneuro.constants import SYNAPSE_KINDS
from scneuro.core import SpikeEvent
from scneuro.exceptions import RoutingTableError
from scneuro.netsim.topology import Topology


@dataclass(frozen=True, slots=True, order=True)
class Delivery:
    time: int
    target: int
    kind: str
    weight: int


@dataclass(frozen=True, slots=True)
class Deliveries:
    """Column-wise batch of synaptic events."""

    times: np.ndarray
    targets: np.ndarray
    kinds: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return self.times.size


def _check_sources(topo: Topology, sources: np.ndarray) -> None:
    if sources.size and (sources.min() < 0 or sources.max() >= topo.n_sources):
        bad = sources[(sources < 0) | (sources >= topo.n_sources)]
        raise RoutingTableError(f"Unknown source id(s) {bad[:5].tolist()} in routing table")


def fan_out(
    topo: Topology, sources: np.ndarray, times: np.ndarray, weights: np.ndarray | int
) -> Deliveries:
    """Duplicate every spike once per delay and fan each copy out to its targets."""
    sources = np.asarray(sources, dtype=np.int64)
    times = np.asarray(times, dtype=np.int64)
    weights = np.broadcast_to(np.asarray(weights, dtype=np.int64), sources.shape)
    _check_sources(topo, sources)

    starts = topo.indptr[sources]
    counts = topo.indptr[sources + 1] - starts
    spike = np.repeat(np.arange(sources.size), counts)
    offsets = np.arange(spike.size) - np.repeat(np.cumsum(counts) - counts, counts)
    edges = starts[spike] + offsets

    n_delays = topo.delays.shape[1]
    delays = topo.delays[sources[spike]]
    return Deliveries(
        times=(times[spike][:, None] + delays).T.ravel(),
        targets=np.tile(topo.targets[edges], n_delays),
        kinds=np.tile(topo.kinds[edges], n_delays),
        weights=np.tile(weights[spike], n_delays),
    )


def route_spike(e: SpikeEvent, topo: Topology) -> list[Delivery]:
    """Deliveries of one spike, ordered by time and then target.

    Raises:
        RoutingTableError: the spike's source has no entry in the table.
    """
    batch = fan_out(topo, np.array([e.source]), np.array([e.time]), e.weight)
    return sorted(
        Delivery(int(t), int(target), SYNAPSE_KINDS[kind], int(w))
        for t, target, kind, w in zip(
            batch.times, batch.targets, batch.kinds, batch.weights, strict=True
        )
    )
