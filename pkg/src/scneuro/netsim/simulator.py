"""Global tick loop: deliver due events, advance all neurons, route their spikes."""

import time

from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from loguru import logger

from scneuro.config import HardwareConfig, NeuronParams
from scneuro.constants import SYNAPSE_KINDS
from scneuro.core import map_params_to_registers
from scneuro.engine.population import NeuronPopulation
from scneuro.exceptions import PendingBufferOverflowError
from scneuro.netsim.routing import Deliveries, fan_out
from scneuro.netsim.topology import Topology

DEFAULT_PENDING_BUDGET = 50_000_000

TickCallback = Callable[[int, np.ndarray, np.ndarray], None]


@dataclass(frozen=True, eq=False)
class SpikeRecord:
    """Emitted spikes ordered by tick, then neuron id."""

    times: np.ndarray
    neurons: np.ndarray

    def __len__(self) -> int:
        return self.times.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpikeRecord):
            return NotImplemented
        return np.array_equal(self.times, other.times) and np.array_equal(
            self.neurons, other.neurons
        )

    @classmethod
    def empty(cls) -> "SpikeRecord":
        return cls(np.zeros(0, np.int64), np.zeros(0, np.int64))

    def window(self, start: int, stop: int) -> "SpikeRecord":
        lo, hi = np.searchsorted(self.times, [start, stop])
        return SpikeRecord(self.times[lo:hi], self.neurons[lo:hi])

    def counts(self, n_neurons: int) -> np.ndarray:
        return np.bincount(self.neurons, minlength=n_neurons)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"time_tick": self.times, "neuron_id": self.neurons})

    def to_csv(self, path: Path) -> Path:
        self.to_frame().to_csv(path, index=False)
        return path

    @classmethod
    def from_csv(cls, path: Path) -> "SpikeRecord":
        frame = pd.read_csv(path, dtype=np.int64)
        return cls(frame["time_tick"].to_numpy(), frame["neuron_id"].to_numpy())


@dataclass
class SimulationStats:
    ticks: int = 0
    spikes: int = 0
    input_spikes: int = 0
    synaptic_events: int = 0
    wall_clock: float = 0.0
    peak_pending: int = 0

    @property
    def events_per_second(self) -> float:
        return self.synaptic_events / self.wall_clock if self.wall_clock > 0 else 0.0


@dataclass
class _InputQueue:
    ticks: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    sources: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))


class NetworkSimulator:
    """Tick-synchronous network of identical SC neurons.

    Synaptic events wait in a ring buffer of per-channel GSYN increments,
    one slot per tick up to the largest delay. Results do not depend on the
    number of workers.
    """

    def __init__(
        self,
        topology: Topology,
        neuron: NeuronParams,
        hardware: HardwareConfig,
        *,
        workers: int = 1,
        pending_budget: int = DEFAULT_PENDING_BUDGET,
        seed: int = 0,
    ):
        self.topology = topology
        self.neuron = neuron
        self.hardware = hardware
        self.registers = map_params_to_registers(neuron, hardware)
        self.population = NeuronPopulation(
            topology.n_neurons, neuron, self.registers, workers=workers, seed=seed
        )
        self.pending_budget = pending_budget
        self.stats = SimulationStats()

        self._kind_channel = np.array(
            [self.registers.kind_channel[kind] for kind in SYNAPSE_KINDS], dtype=np.int64
        )
        self._kind_weight = np.array(
            [self.registers.weights[kind] * hardware.weight_scale for kind in SYNAPSE_KINDS],
            dtype=np.int64,
        )
        slots = topology.max_delay + 1
        self._ring = np.zeros((slots, len(self.registers.channels), topology.n_neurons), np.int64)
        self._ring_events = np.zeros(slots, dtype=np.int64)
        self._inputs = _InputQueue()
        self._spikes: list[tuple[np.ndarray, np.ndarray]] = []

    @property
    def t(self) -> int:
        return self.population.t

    @property
    def pending(self) -> int:
        return int(self._ring_events.sum())

    def close(self) -> None:
        self.population.close()

    def add_inputs(self, ticks: np.ndarray, sources: np.ndarray, weights: np.ndarray | int = 63):
        """Schedule spikes of non-neuron sources. Ticks before the current one are dropped."""
        ticks = np.asarray(ticks, dtype=np.int64)
        sources = np.asarray(sources, dtype=np.int64)
        weights = np.broadcast_to(np.asarray(weights, dtype=np.int64), ticks.shape)
        keep = ticks >= self.t
        if not keep.all():
            logger.warning(f"Dropped {int((~keep).sum())} input spike(s) scheduled in the past")
        q = self._inputs
        merged_ticks = np.concatenate([q.ticks, ticks[keep]])
        merged_sources = np.concatenate([q.sources, sources[keep]])
        merged_weights = np.concatenate([q.weights, weights[keep]])
        order = np.lexsort((merged_sources, merged_ticks))
        self._inputs = _InputQueue(
            merged_ticks[order], merged_sources[order], merged_weights[order]
        )

    def _take_inputs(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        q = self._inputs
        stop = int(np.searchsorted(q.ticks, t, side="right"))
        if stop == 0:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        sources, weights = q.sources[:stop], q.weights[:stop]
        self._inputs = _InputQueue(q.ticks[stop:], q.sources[stop:], q.weights[stop:])
        return sources, weights

    def _schedule(self, batch: Deliveries) -> None:
        if not len(batch):
            return
        slots = self._ring.shape[0]
        slot = batch.times % slots
        channels = self._kind_channel[batch.kinds]
        increments = (
            self._kind_weight[batch.kinds] * batch.weights // self.hardware.stp_weight_max
        )
        np.add.at(self._ring, (slot, channels, batch.targets), increments)
        np.add.at(self._ring_events, slot, 1)
        self.stats.synaptic_events += len(batch)
        pending = self.pending
        self.stats.peak_pending = max(self.stats.peak_pending, pending)
        if pending > self.pending_budget:
            raise PendingBufferOverflowError(
                f"{pending} pending synaptic events exceed the budget of {self.pending_budget}"
            )

    def step(self) -> tuple[np.ndarray, np.ndarray]:
        """Run one tick; returns the ids and STP weights of the neurons that fired."""
        t = self.t
        sources, weights = self._take_inputs(t)
        if sources.size:
            self.stats.input_spikes += sources.size
            self._schedule(fan_out(self.topology, sources, np.full(sources.size, t), weights))

        slot = t % self._ring.shape[0]
        self.population.incoming += self._ring[slot]
        self._ring[slot] = 0
        self._ring_events[slot] = 0

        ids, stp_weights = self.population.tick()
        if ids.size:
            self._spikes.append((np.full(ids.size, t, dtype=np.int64), ids))
            self.stats.spikes += ids.size
            self._schedule(fan_out(self.topology, ids, np.full(ids.size, t), stp_weights))
        self.stats.ticks += 1
        return ids, stp_weights

    def run(self, n_ticks: int, on_tick: TickCallback | None = None) -> SpikeRecord:
        """Advance n_ticks ticks and return every spike emitted so far."""
        started = time.perf_counter()
        for _ in range(n_ticks):
            ids, weights = self.step()
            if on_tick is not None:
                on_tick(self.t - 1, ids, weights)
        self.stats.wall_clock += time.perf_counter() - started
        logger.info(
            f"Ran {n_ticks} ticks to t={self.t}: {self.stats.spikes} spikes, "
            f"{self.stats.synaptic_events} synaptic events "
            f"({self.stats.events_per_second:.3g} events/s)"
        )
        return self.record()

    def record(self) -> SpikeRecord:
        if not self._spikes:
            return SpikeRecord.empty()
        times, neurons = zip(*self._spikes, strict=True)
        return SpikeRecord(np.concatenate(times), np.concatenate(neurons))
