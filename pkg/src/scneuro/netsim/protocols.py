"""Experiment protocols: which sources fire when, and how rates are read out."""

from dataclasses import dataclass

import numpy as np

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from scneuro.config import HardwareConfig, Mode, NetworkConfig, NeuronParams
from scneuro.constants import (
    CLOSED_LOOP_DURATION_MS,
    OPEN_LOOP_DISCARD_MS,
    OPEN_LOOP_GAP_MS,
    OPEN_LOOP_STIMULATION_MS,
    STREAM_BACKGROUND,
    STREAM_STIMULUS,
    TICK_MS,
)
from scneuro.meanfield import TransferCurve, Variant
from scneuro.netsim.poisson import population_schedule
from scneuro.netsim.simulator import (
    DEFAULT_PENDING_BUDGET,
    NetworkSimulator,
    SimulationStats,
    SpikeRecord,
    TickCallback,
)
from scneuro.netsim.topology import Topology
from scneuro.utils.schedule_factory import InputSchedule, MeasurementWindow, ScheduleFactory


class ExperimentProtocol(BaseModel):
    """Timing of one experiment. Durations in ms, rates in Hz."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Mode
    stimulation_ms: float = Field(OPEN_LOOP_STIMULATION_MS, gt=0.0)
    discard_ms: float = Field(OPEN_LOOP_DISCARD_MS, ge=0.0)
    gap_ms: float = Field(OPEN_LOOP_GAP_MS, ge=0.0)
    duration_ms: float = Field(CLOSED_LOOP_DURATION_MS, gt=0.0)
    f_in_grid: list[float] = Field(default_factory=lambda: [float(f) for f in range(0, 181, 20)])

    @model_validator(mode="after")
    def _check_timing(self) -> "ExperimentProtocol":
        if self.discard_ms >= self.stimulation_ms:
            raise ValueError(
                f"Discard window {self.discard_ms} ms must be shorter than the "
                f"stimulation {self.stimulation_ms} ms"
            )
        grid = np.asarray(self.f_in_grid)
        if grid.size == 0 or np.any(grid < 0) or np.any(np.diff(grid) <= 0):
            raise ValueError(f"f_in grid must be non-empty, non-negative, increasing: {grid}")
        return self

    @property
    def sweeps(self) -> bool:
        return self.kind is not Mode.CLOSED_LOOP


def _ticks(ms: float) -> int:
    return round(ms / TICK_MS)


class BackgroundSchedule(ScheduleFactory):
    """Background sources firing at f_bg for the whole run."""

    def __init__(self, f_bg: float, duration_ms: float, seed: int):
        self.f_bg = f_bg
        self.duration_ms = duration_ms
        self.seed = seed

    def _build_schedule(self, topology: Topology) -> InputSchedule:
        ticks, sources = population_schedule(
            topology.background_ids,
            self.f_bg,
            self.duration_ms,
            self.seed,
            stream=STREAM_BACKGROUND,
        )
        return InputSchedule(ticks, sources, _ticks(self.duration_ms))


class StimulusSweepSchedule(ScheduleFactory):
    """Stimulus sources stepped through the f_in grid on top of the background.

    Each grid point stimulates for ``stimulation_ms`` and is followed by a
    silent gap; rates are measured after the discard window.
    """

    def __init__(self, protocol: ExperimentProtocol, f_bg: float, seed: int):
        self.protocol = protocol
        self.f_bg = f_bg
        self.seed = seed

    def _build_schedule(self, topology: Topology) -> InputSchedule:
        p = self.protocol
        stim = _ticks(p.stimulation_ms)
        period = stim + _ticks(p.gap_ms)
        n_ticks = period * len(p.f_in_grid)

        background = BackgroundSchedule.execute(topology, self.f_bg, n_ticks * TICK_MS, self.seed)
        ticks, sources = [background.ticks], [background.sources]
        windows = []
        for segment, f_in in enumerate(p.f_in_grid):
            start = segment * period
            seg_ticks, seg_sources = population_schedule(
                topology.stimulus_ids,
                f_in,
                p.stimulation_ms,
                self.seed,
                start_tick=start,
                stream=STREAM_STIMULUS,
                segment=segment,
            )
            ticks.append(seg_ticks)
            sources.append(seg_sources)
            windows.append(MeasurementWindow(f_in, start + _ticks(p.discard_ms), start + stim))

        all_ticks = np.concatenate(ticks)
        all_sources = np.concatenate(sources)
        order = np.lexsort((all_sources, all_ticks))
        return InputSchedule(all_ticks[order], all_sources[order], n_ticks, windows)


@dataclass(eq=False)
class ExperimentResult:
    protocol: ExperimentProtocol
    record: SpikeRecord
    schedule: InputSchedule
    stats: SimulationStats
    n_neurons: int

    def window_rates(self) -> np.ndarray:
        """Per-neuron rate (Hz) in every measurement window; shape (neurons, windows)."""
        rates = np.zeros((self.n_neurons, len(self.schedule.windows)))
        for i, window in enumerate(self.schedule.windows):
            spikes = self.record.window(window.start, window.stop)
            seconds = (window.stop - window.start) * TICK_MS * 1e-3
            rates[:, i] = spikes.counts(self.n_neurons) / seconds
        return rates

    def neuron_curves(self, g_rec: float, g_sfa: float, f_bg: float) -> list[TransferCurve]:
        grid = [window.f_in for window in self.schedule.windows]
        return [
            TransferCurve(
                f_in=grid,
                f_out=row.tolist(),
                variant=Variant.MEASURED,
                g_rec=g_rec,
                g_sfa=g_sfa,
                f_bg=f_bg,
            )
            for row in self.window_rates()
        ]

    def measured_curve(self, g_rec: float, g_sfa: float, f_bg: float) -> TransferCurve:
        """Population-mean measured transfer curve."""
        grid = [window.f_in for window in self.schedule.windows]
        return TransferCurve(
            f_in=grid,
            f_out=self.window_rates().mean(axis=0).tolist(),
            variant=Variant.MEASURED,
            g_rec=g_rec,
            g_sfa=g_sfa,
            f_bg=f_bg,
        )


def run_experiment(
    proto: ExperimentProtocol,
    net: NetworkConfig,
    topo: Topology,
    hardware: HardwareConfig,
    neuron: NeuronParams | None = None,
    *,
    workers: int = 1,
    pending_budget: int = DEFAULT_PENDING_BUDGET,
    on_tick: TickCallback | None = None,
) -> ExperimentResult:
    """Run one protocol on a prepared topology.

    The network starts at rest with cleared registers. Sweeping protocols
    drive the stimulus sources through the f_in grid; closed-loop runs see
    the background only.

    Raises:
        PendingBufferOverflowError: the pending-event buffer outgrew its budget.
    """
    if proto.kind is not net.mode:
        raise ValueError(f"Protocol kind {proto.kind} does not match network mode {net.mode}")
    resolved = net.resolve(neuron or NeuronParams())
    if proto.sweeps:
        schedule = StimulusSweepSchedule.execute(topo, proto, net.f_bg, net.seed)
    else:
        schedule = BackgroundSchedule.execute(topo, net.f_bg, proto.duration_ms, net.seed)

    simulator = NetworkSimulator(
        topo,
        resolved,
        hardware,
        workers=workers,
        pending_budget=pending_budget,
        seed=net.seed,
    )
    try:
        simulator.add_inputs(schedule.ticks, schedule.sources)
        logger.info(
            f"Running {proto.kind} experiment: {topo.n_neurons} neurons, "
            f"{schedule.n_ticks} ticks, {len(schedule)} input spikes, {workers} worker(s)"
        )
        record = simulator.run(schedule.n_ticks, on_tick=on_tick)
    finally:
        simulator.close()
    return ExperimentResult(proto, record, schedule, simulator.stats, topo.n_neurons)
