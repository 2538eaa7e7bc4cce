"""UDP bridge between a running simulation and external spiking systems.

Inbound frames are decoded on the event loop and parked in a bounded queue;
at every tick boundary the queue is drained into the simulator's input
schedule. Outbound spikes are batched per tick and sent to the peer. The
bridge never blocks the tick loop and never raises into it.
"""

import asyncio
import json

from collections import deque
from dataclasses import asdict, dataclass
from typing import TextIO

import numpy as np

from loguru import logger

from scneuro.constants import MAX_EVENTS_PER_FRAME
from scneuro.core import SpikeEvent
from scneuro.exceptions import FrameError
from scneuro.netsim.simulator import NetworkSimulator
from scneuro.pulse_io.frame import MAX_SOURCE, MAX_TIMESTAMP, decode_frame, encode_frame

Address = tuple[str, int]


@dataclass
class BridgeStats:
    frames_received: int = 0
    events_received: int = 0
    events_injected: int = 0
    late_events: int = 0
    unknown_sources: int = 0
    queue_overflows: int = 0
    sequence_gaps: int = 0
    malformed_frames: int = 0
    frames_sent: int = 0
    events_sent: int = 0
    events_unsent: int = 0
    weights_clipped: int = 0

    def to_json(self, t: int) -> str:
        return json.dumps({"tick": t, **asdict(self)})


class _PulseProtocol(asyncio.DatagramProtocol):
    def __init__(self, bridge: "PulseBridge"):
        self.bridge = bridge

    def datagram_received(self, data: bytes, addr: Address) -> None:
        self.bridge.receive(data, addr)

    def error_received(self, exc: Exception) -> None:
        logger.warning(f"Pulse bridge socket error: {exc}")

    def connection_lost(self, exc: Exception | None) -> None:
        if exc is not None:
            logger.error(f"Pulse bridge closed by socket failure: {exc}; simulation continues")
        self.bridge.transport = None


class PulseBridge:
    """Connects external source ids to a simulator and streams its spikes out.

    Inbound event sources are indices into the topology's external sources.
    Replies go to ``peer``, or to whoever sent the first frame.
    """

    def __init__(
        self,
        simulator: NetworkSimulator,
        *,
        peer: Address | None = None,
        queue_size: int = 4096,
    ):
        self.simulator = simulator
        self.peer = peer
        self.stats = BridgeStats()
        self.transport: asyncio.DatagramTransport | None = None
        self._queue: deque[SpikeEvent] = deque(maxlen=queue_size)
        self._last_sequence: int | None = None
        self._sequence_out = 0

    @property
    def address(self) -> Address | None:
        if self.transport is None:
            return None
        return self.transport.get_extra_info("sockname")[:2]

    async def start(self, bind: Address) -> None:
        """Open the UDP endpoint; on failure the simulation runs without a bridge."""
        loop = asyncio.get_running_loop()
        try:
            self.transport, _ = await loop.create_datagram_endpoint(
                lambda: _PulseProtocol(self), local_addr=bind
            )
        except OSError as exc:
            logger.error(f"Pulse bridge could not bind {bind}: {exc}; running without it")
            self.transport = None
            return
        logger.info(f"Pulse bridge listening on {self.address}")

    def close(self) -> None:
        if self.transport is not None:
            self.transport.close()
            self.transport = None

    def receive(self, data: bytes, addr: Address) -> None:
        try:
            frame = decode_frame(data)
        except FrameError as exc:
            self.stats.malformed_frames += 1
            logger.warning(f"Dropped malformed frame from {addr}: {exc}")
            return
        if self._last_sequence is not None:
            expected = (self._last_sequence + 1) & 0xFFFF
            if frame.sequence != expected:
                self.stats.sequence_gaps += 1
                logger.debug(f"Sequence gap: expected {expected}, got {frame.sequence}")
        self._last_sequence = frame.sequence
        if self.peer is None:
            self.peer = addr
        self.stats.frames_received += 1
        self.stats.events_received += len(frame.events)
        for event in frame.events:
            if len(self._queue) == self._queue.maxlen:
                self.stats.queue_overflows += 1
            self._queue.append(event)

    def inject_pending(self, t: int) -> None:
        """Move queued events into the simulator; events before tick t are late."""
        if not self._queue:
            return
        events = list(self._queue)
        self._queue.clear()
        external = self.simulator.topology.external_ids
        weight_max = self.simulator.hardware.stp_weight_max
        ticks, sources, weights = [], [], []
        clipped = 0
        for event in events:
            if event.time < t:
                self.stats.late_events += 1
            elif event.source >= external.size:
                self.stats.unknown_sources += 1
            else:
                ticks.append(event.time)
                sources.append(external[event.source])
                weights.append(min(event.weight, weight_max))
                clipped += event.weight > weight_max
        if clipped:
            self.stats.weights_clipped += clipped
            logger.warning(f"Clipped {clipped} inbound weight(s) to {weight_max} at tick {t}")
        if len(ticks) < len(events):
            logger.warning(f"Dropped {len(events) - len(ticks)} inbound event(s) at tick {t}")
        if ticks:
            self.simulator.add_inputs(np.array(ticks), np.array(sources), np.array(weights))
            self.stats.events_injected += len(ticks)

    def publish(self, t: int, ids: np.ndarray, weights: np.ndarray) -> None:
        """Send this tick's spikes to the peer, one frame per 180 events.

        Spikes the wire format cannot carry are counted and dropped.
        """
        if self.transport is None or self.peer is None or ids.size == 0:
            return
        fits = (ids <= MAX_SOURCE) & (t <= MAX_TIMESTAMP)
        unsent = int(ids.size - np.count_nonzero(fits))
        if unsent:
            self.stats.events_unsent += unsent
            logger.warning(f"Dropped {unsent} outbound spike(s) at tick {t} beyond the wire format")
        events = [
            SpikeEvent(t, int(i), int(w)) for i, w in zip(ids[fits], weights[fits], strict=True)
        ]
        for start in range(0, len(events), MAX_EVENTS_PER_FRAME):
            batch = events[start : start + MAX_EVENTS_PER_FRAME]
            try:
                data = encode_frame(batch, self._sequence_out)
            except ValueError as exc:
                self.stats.events_unsent += len(batch)
                logger.warning(f"Dropped {len(batch)} outbound spike(s) at tick {t}: {exc}")
                continue
            self.transport.sendto(data, self.peer)
            self._sequence_out = (self._sequence_out + 1) & 0xFFFF
            self.stats.frames_sent += 1
            self.stats.events_sent += len(batch)

    async def run(
        self,
        n_ticks: int,
        *,
        paced: bool = False,
        stats_every: int = 0,
        stats_stream: TextIO | None = None,
    ) -> BridgeStats:
        """Drive the simulator for n_ticks ticks, optionally paced to wall-clock time."""
        loop = asyncio.get_running_loop()
        tick_seconds = self.simulator.hardware.tick * 1e-3
        started = loop.time()
        first = self.simulator.t
        for _ in range(n_ticks):
            t = self.simulator.t
            self.inject_pending(t)
            ids, weights = self.simulator.step()
            self.publish(t, ids, weights)
            if paced:
                ahead = started + (t - first + 1) * tick_seconds - loop.time()
                await asyncio.sleep(max(0.0, ahead))
            else:
                await asyncio.sleep(0)
            if stats_every and stats_stream is not None and (t + 1) % stats_every == 0:
                print(self.stats.to_json(t + 1), file=stats_stream, flush=True)
        return self.stats


async def stream_session(
    bind: Address,
    simulator: NetworkSimulator,
    n_ticks: int,
    *,
    peer: Address | None = None,
    paced: bool = True,
    stats_every: int = 10_000,
    stats_stream: TextIO | None = None,
) -> BridgeStats:
    """Run a simulation with a live UDP bridge for n_ticks ticks."""
    bridge = PulseBridge(simulator, peer=peer)
    await bridge.start(bind)
    try:
        stats = await bridge.run(
            n_ticks, paced=paced, stats_every=stats_every, stats_stream=stats_stream
        )
    finally:
        bridge.close()
    logger.info(f"Pulse session finished: {bridge.stats.to_json(simulator.t)}")
    return stats
