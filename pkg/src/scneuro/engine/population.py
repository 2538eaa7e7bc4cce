"""Tick-synchronous emulation of a population of identical SC neurons.

Every tick covers ``cycles_per_tick`` clock cycles. Within a tick the order
is fixed: accumulate incoming weights, run the decay counters and NCOs over
the tick's cycles, apply the resulting membrane switches (leak first, then
each multi-synapse in channel order), then test the threshold.

Between two decay instants GSYN_REG is constant, so n NCO updates advance
the phase by n * GSYN_REG and overflow (phase + n * GSYN_REG) >> width
times. This is exact and matches stepping ``clock_cycle`` cycle by cycle.

With Poisson switch timing the registers evolve exactly as above, but the
membrane receives Poisson(lambda) switches per channel, where lambda is the
expected NCO overflow count of the tick, and Poisson leak switches at f_mem.
The draws come from one stream keyed by the seed, so chunking the
population over workers does not change them.
"""

from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from typing import Any

import numpy as np

from loguru import logger

from scneuro.config import NeuronParams, SwitchTiming
from scneuro.constants import STREAM_SWITCHING
from scneuro.core import RegisterSettings
from scneuro.engine.membrane import relax
from scneuro.engine.stp import StpBank


def tick_segments(c0: int, cycles: int, decay_period: int, delta: int) -> list[tuple[int, bool]]:
    """Split the cycles [c0, c0 + cycles) at decay instants.

    Returns (NCO updates before the split, decay at the split) pairs. A decay
    and an NCO update in the same cycle run decay first.
    """
    segments = []
    prev = c0
    k_end = c0 + cycles
    k_decay = (c0 // decay_period + 1) * decay_period
    while k_decay <= k_end:
        segments.append(((k_decay - 1) // delta - prev // delta, True))
        prev = k_decay - 1
        k_decay += decay_period
    segments.append((k_end // delta - prev // delta, False))
    return segments


class NeuronPopulation:
    def __init__(
        self,
        size: int,
        neuron: NeuronParams,
        registers: RegisterSettings,
        *,
        workers: int = 1,
        seed: int = 0,
    ):
        if size <= 0:
            raise ValueError(f"Population size must be positive, got {size}")
        h = registers.hardware
        self.size = size
        self.neuron = neuron
        self.registers = registers
        self.hardware = h
        self.cycles = h.cycles_per_tick
        self.refrac_ticks = max(1, round(neuron.T_refrac / h.tick))
        self.channels = registers.channels
        self.sfa_channel = registers.kind_channel["sfa"]
        self.sfa_increment = registers.increment("sfa")

        n_channels = len(self.channels)
        self.v = np.full(size, neuron.v_rest)
        self.refrac_until = np.zeros(size, dtype=np.int64)
        self.gsyn = np.zeros((n_channels, size), dtype=np.int64)
        self.phase = np.zeros((n_channels, size), dtype=np.int64)
        self.incoming = np.zeros((n_channels, size), dtype=np.int64)
        self.switch_counts = np.zeros((n_channels, size), dtype=np.int64)
        self.switch_rates = np.zeros((n_channels, size))
        self.stp = StpBank(size, neuron.stp, h.stp_weight_max, h.tick)
        self.t = 0

        self.poisson = h.switching is SwitchTiming.POISSON
        self.leak_rate = registers.f_mem * h.tick * 1e-3
        self._rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence([seed, STREAM_SWITCHING]))
        )

        bounds = np.linspace(0, size, min(workers, size) + 1).astype(int)
        self._chunks = [slice(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:], strict=True)]
        self._executor = ThreadPoolExecutor(len(self._chunks)) if len(self._chunks) > 1 else None
        logger.debug(
            f"Population of {size} neurons over {len(self._chunks)} worker chunk(s), "
            f"{h.switching} switching"
        )

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def deliver(self, channel: int, targets: np.ndarray, increments: np.ndarray | int) -> None:
        """Queue GSYN_REG increments for the next tick."""
        np.add.at(self.incoming[channel], targets, increments)

    def conductances(self) -> np.ndarray:
        """Current conductance (nS) per channel and neuron."""
        return self.gsyn * self.registers.g_unit

    def _plan(self, t: int) -> tuple[list[list[tuple[int, bool]]], int]:
        c0 = t * self.cycles
        segments = [
            tick_segments(c0, self.cycles, ch.tau_reg + 1, self.registers.delta_gsyn)
            for ch in self.channels
        ]
        period = self.registers.leak_period
        leak = (c0 + self.cycles) // period - c0 // period
        return segments, leak

    def _advance_registers(self, sl: slice, segments) -> None:
        h = self.hardware
        mask = (1 << h.phase_width) - 1
        scale = 1.0 / (1 << h.phase_width)
        shift = h.decay_shift

        gsyn = np.minimum(self.gsyn[:, sl] + self.incoming[:, sl], h.gsyn_max)
        self.incoming[:, sl] = 0
        phase = self.phase[:, sl]
        counts = np.zeros_like(gsyn)
        rates = np.zeros(gsyn.shape)
        for index, channel_segments in enumerate(segments):
            g = gsyn[index]
            ph = phase[index]
            for n_updates, decays in channel_segments:
                if n_updates:
                    total = ph + n_updates * g
                    counts[index] += total >> h.phase_width
                    rates[index] += n_updates * g * scale
                    ph = total & mask
                if decays:
                    g = g - (g >> shift)
            gsyn[index] = g
            phase[index] = ph
        self.gsyn[:, sl] = gsyn
        self.phase[:, sl] = phase
        self.switch_counts[:, sl] = counts
        self.switch_rates[:, sl] = rates

    def _draw_switches(self, leak: int) -> tuple[np.ndarray, np.ndarray | int]:
        """Switch counts per channel and leak switches for this tick."""
        if not self.poisson:
            return self.switch_counts, leak
        counts = np.zeros_like(self.switch_counts)
        active = self.switch_rates > 0
        counts[active] = self._rng.poisson(self.switch_rates[active])
        return counts, self._rng.poisson(self.leak_rate, self.size)

    def _advance_membrane(
        self, sl: slice, t: int, counts: np.ndarray, leak: np.ndarray | int
    ) -> np.ndarray:
        p = self.neuron
        alpha = self.hardware.alpha
        v = relax(self.v[sl], p.v_rest, alpha, leak if np.isscalar(leak) else leak[sl])
        for index, channel in enumerate(self.channels):
            v = relax(v, channel.E_syn, alpha, counts[index, sl])
        active = t >= self.refrac_until[sl]
        v = np.where(active, v, p.v_reset)
        spiking = active & (v >= p.v_thresh)
        v[spiking] = p.v_reset
        self.v[sl] = v
        return np.flatnonzero(spiking) + sl.start

    def _map(self, fn: Callable[[slice], Any]) -> list:
        if self._executor is None:
            return [fn(sl) for sl in self._chunks]
        return list(self._executor.map(fn, self._chunks))

    def tick(self) -> tuple[np.ndarray, np.ndarray]:
        """Advance every neuron by one tick.

        Returns the ids of the neurons that spiked (ascending) and their STP
        output weights.
        """
        t = self.t
        segments, leak = self._plan(t)
        self._map(lambda sl: self._advance_registers(sl, segments))
        counts, leak_counts = self._draw_switches(leak)
        ids = np.concatenate(
            self._map(lambda sl: self._advance_membrane(sl, t, counts, leak_counts))
        )

        if ids.size:
            self.refrac_until[ids] = t + self.refrac_ticks
            sfa = self.gsyn[self.sfa_channel]
            sfa[ids] = np.minimum(sfa[ids] + self.sfa_increment, self.hardware.gsyn_max)
            weights = self.stp.on_spikes(ids, t)
        else:
            weights = np.zeros(0, dtype=np.int64)
        self.t = t + 1
        return ids, weights
