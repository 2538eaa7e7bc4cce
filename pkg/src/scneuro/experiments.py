"""Experiment runners behind the CLI commands.

Each runner takes resolved ``Settings`` and a validated options model,
writes tidy CSV/JSON outputs into ``out_dir`` and returns the run's
``RunManifest``. Re-running a manifest calls the same runner with the same
settings and options.
"""

import asyncio
import json
import sys
import time

from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Annotated, Any

import numpy as np
import pandas as pd

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from scneuro.analysis import (
    BurstStatistics,
    Regime,
    boundary_points,
    burst_statistics,
    classify_regime,
    fit_boundary,
    phase_plane,
    rmse,
)
from scneuro.config import Mode, Settings
from scneuro.constants import (
    BURST_BIN_MS,
    OPEN_LOOP_DISCARD_MS,
    OPEN_LOOP_GAP_MS,
    OPEN_LOOP_STIMULATION_MS,
)
from scneuro.manifest import RunManifest
from scneuro.meanfield import (
    SfaMode,
    TransferCurve,
    Variant,
    find_fixed_points,
    in_degree_band,
    transfer_curve,
)
from scneuro.netsim.protocols import BackgroundSchedule, ExperimentProtocol, run_experiment
from scneuro.netsim.simulator import NetworkSimulator
from scneuro.netsim.topology import build_topology
from scneuro.pulse_io.bridge import stream_session

DEFAULT_GRID = [float(f) for f in range(0, 181, 20)]


class SingleNeuronOptions(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    grid: list[float] = DEFAULT_GRID
    neurons: int = Field(32, gt=0)
    stimulation_s: float = Field(OPEN_LOOP_STIMULATION_MS / 1000.0, gt=0.0)
    threads: int = Field(1, gt=0)


class OpenLoopOptions(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    grid: list[float] = DEFAULT_GRID
    g_rec: list[float] = [2.0, 3.0, 4.0]
    g_sfa: list[float] = [0.0]
    neurons: int | None = Field(None, gt=0)
    stimulation_s: float = Field(OPEN_LOOP_STIMULATION_MS / 1000.0, gt=0.0)
    threads: int = Field(1, gt=0)


class ClosedLoopOptions(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    g_rec: float = Field(4.0, ge=0.0)
    # One run per value; several values label every output with its g_sfa.
    g_sfa: list[Annotated[float, Field(ge=0.0)]] = Field([0.0], min_length=1)
    duration_s: float = Field(10.0, gt=0.0)
    neurons: int | None = Field(None, gt=0)
    threads: int = Field(1, gt=0)


class PhasePlaneOptions(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    g_sfa: list[float] = [1.0, 2.0, 3.0, 4.0]
    g_rec: list[float] = [3.0, 3.5, 4.0, 4.5]
    duration_s: float = Field(500.0, gt=0.0)
    exemplar_s: float = Field(10.0, ge=0.0)
    neurons: int | None = Field(None, gt=0)
    threads: int = Field(1, gt=0)


class StreamOptions(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    host: str = "127.0.0.1"
    port: int = Field(9000, ge=0, lt=1 << 16)
    peer: tuple[str, int] | None = None
    duration_s: float = Field(10.0, gt=0.0)
    paced: bool = True
    external: int = Field(32, ge=0)
    stats_every: int = Field(10_000, ge=0)
    threads: int = Field(1, gt=0)


def _network(settings: Settings, neurons: int | None, mode: Mode, **update: Any):
    net = settings.network
    if neurons is not None and neurons != net.N:
        net = net.scaled(neurons)
    return net.model_copy(update={"mode": mode, **update})


def _manifest(
    command: str,
    settings: Settings,
    options: BaseModel,
    outputs: list[Path],
    started: float,
    events_per_second: float = 0.0,
) -> RunManifest:
    return RunManifest(
        command=command,
        config=settings.model_dump(mode="json"),
        options=options.model_dump(mode="json"),
        seed=settings.network.seed,
        outputs=[path.name for path in outputs],
        wall_clock=time.perf_counter() - started,
        events_per_second=events_per_second,
    )


def _write_json(path: Path, payload: Any) -> Path:
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return path


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False)
    return path


def _curve_frame(curve: TransferCurve, **labels: Any) -> pd.DataFrame:
    return curve.to_frame().assign(**labels)


def _sweep_protocol(kind: Mode, grid: list[float], stimulation_s: float) -> ExperimentProtocol:
    stimulation = stimulation_s * 1000.0
    scale = stimulation / OPEN_LOOP_STIMULATION_MS
    return ExperimentProtocol(
        kind=kind,
        stimulation_ms=stimulation,
        discard_ms=OPEN_LOOP_DISCARD_MS * scale,
        gap_ms=OPEN_LOOP_GAP_MS,
        f_in_grid=grid,
    )


def run_single_neuron(settings: Settings, opts: SingleNeuronOptions, out_dir: Path) -> RunManifest:
    """Fixed in-degree neurons stimulated through the f_in grid, against mean-field."""
    started = time.perf_counter()
    net = _network(settings, opts.neurons, Mode.SINGLE_NEURON)
    neuron = net.resolve(settings.neuron)
    proto = _sweep_protocol(Mode.SINGLE_NEURON, opts.grid, opts.stimulation_s)
    topo = build_topology(net)
    result = run_experiment(
        proto, net, topo, settings.hardware, settings.neuron, workers=opts.threads
    )

    labels = {"g_rec": neuron.g_hat_rec, "g_sfa": neuron.g_sfa, "f_bg": net.f_bg}
    measured = result.neuron_curves(**labels)
    mean = result.measured_curve(**labels)
    standard, hardware = (
        transfer_curve(
            settings.neuron,
            net,
            opts.grid,
            variant,
            options=settings.meanfield,
            hardware=settings.hardware,
        )
        for variant in (Variant.STANDARD, Variant.HARDWARE)
    )

    frames = [_curve_frame(curve, neuron=i) for i, curve in enumerate(measured)]
    frames += [_curve_frame(curve, neuron=-1) for curve in (mean, standard, hardware)]
    errors = pd.DataFrame(
        {
            "neuron": range(len(measured)),
            "rmse_vs_mean": [rmse(curve, mean) for curve in measured],
            "rmse_vs_hardware": [rmse(curve, hardware) for curve in measured],
            "rmse_vs_standard": [rmse(curve, standard) for curve in measured],
        }
    )
    summary = {
        "median_rmse_vs_mean": float(errors["rmse_vs_mean"].median()),
        "median_rmse_vs_hardware": float(errors["rmse_vs_hardware"].median()),
        "median_rmse_vs_standard": float(errors["rmse_vs_standard"].median()),
        "rmse_mean_vs_hardware": rmse(mean, hardware),
    }
    logger.info(f"Single-neuron summary: {summary}")

    outputs = [
        result.record.to_csv(out_dir / "spikes.csv"),
        _write_csv(pd.concat(frames, ignore_index=True), out_dir / "curves.csv"),
        _write_csv(errors, out_dir / "rmse.csv"),
        _write_json(out_dir / "summary.json", summary),
    ]
    return _manifest(
        "single-neuron", settings, opts, outputs, started, result.stats.events_per_second
    )


def run_open_loop(settings: Settings, opts: OpenLoopOptions, out_dir: Path) -> RunManifest:
    """Population transfer curves over g_rec and g_SFA with mean-field overlays."""
    started = time.perf_counter()
    proto = _sweep_protocol(Mode.OPEN_LOOP, opts.grid, opts.stimulation_s)
    dense = [float(f) for f in range(0, int(max(opts.grid)) + 1)]
    rows, summary, fixed_points, throughput = [], [], [], []
    for g_rec in opts.g_rec:
        for g_sfa in opts.g_sfa:
            net = _network(settings, opts.neurons, Mode.OPEN_LOOP, g_rec=g_rec, g_SFA=g_sfa)
            topo = build_topology(net)
            result = run_experiment(
                proto, net, topo, settings.hardware, settings.neuron, workers=opts.threads
            )
            throughput.append(result.stats.events_per_second)
            rates = result.window_rates()
            mean = result.measured_curve(g_rec, g_sfa, net.f_bg)
            sfa_mode = SfaMode.STEADY_STATE if g_sfa > 0 else SfaMode.NONE
            standard, hardware = (
                transfer_curve(
                    settings.neuron,
                    net,
                    opts.grid,
                    variant,
                    sfa_mode,
                    options=settings.meanfield,
                    hardware=settings.hardware,
                )
                for variant in (Variant.STANDARD, Variant.HARDWARE)
            )
            low, high = in_degree_band(
                settings.neuron,
                net,
                opts.grid,
                sfa_mode=sfa_mode,
                options=settings.meanfield,
                hardware=settings.hardware,
            )
            for variant in (Variant.STANDARD, Variant.HARDWARE):
                curve = transfer_curve(
                    settings.neuron,
                    net,
                    dense,
                    variant,
                    sfa_mode,
                    options=settings.meanfield,
                    hardware=settings.hardware,
                )
                points = find_fixed_points(curve)
                fixed_points.append(
                    {"g_rec": g_rec, "g_sfa": g_sfa, "variant": str(variant)}
                    | points.model_dump(mode="json")
                )
            spread = rates.std(axis=0)
            overlap = (np.asarray(mean.f_out) + spread >= np.asarray(low.f_out)) & (
                np.asarray(mean.f_out) - spread <= np.asarray(high.f_out)
            )
            rows.append(
                pd.DataFrame(
                    {
                        "g_rec": g_rec,
                        "g_sfa": g_sfa,
                        "f_in": opts.grid,
                        "measured_mean": mean.f_out,
                        "measured_std": spread,
                        "meanfield_standard": standard.f_out,
                        "meanfield_hardware": hardware.f_out,
                        "band_low": low.f_out,
                        "band_high": high.f_out,
                    }
                )
            )
            summary.append(
                {
                    "g_rec": g_rec,
                    "g_sfa": g_sfa,
                    "rmse_vs_standard": rmse(mean, standard),
                    "rmse_vs_hardware": rmse(mean, hardware),
                    "band_overlap": float(overlap.mean()),
                    "meanfield_reconstructed": standard.reconstructed,
                }
            )
            logger.info(f"Open loop g_rec={g_rec} g_sfa={g_sfa}: {summary[-1]}")

    outputs = [
        _write_csv(pd.concat(rows, ignore_index=True), out_dir / "open_loop_curves.csv"),
        _write_json(out_dir / "summary.json", summary),
        _write_json(out_dir / "fixed_points.json", fixed_points),
    ]
    return _manifest("open-loop", settings, opts, outputs, started, float(np.mean(throughput)))


def _rate_frame(rates: np.ndarray, bin_width: float) -> pd.DataFrame:
    return pd.DataFrame({"t_ms": np.arange(rates.size) * bin_width, "rate": rates})


def _labelled(name: str, g_sfa: float, labelled: bool) -> str:
    if not labelled:
        return name
    stem, _, suffix = name.partition(".")
    return f"{stem}_gsfa{g_sfa:g}.{suffix}"


def run_closed_loop(settings: Settings, opts: ClosedLoopOptions, out_dir: Path) -> RunManifest:
    """Closed-loop runs over g_SFA: binned population rate, bursts and regime per run."""
    started = time.perf_counter()
    labelled = len(opts.g_sfa) > 1
    outputs, throughput = [], []
    for g_sfa in opts.g_sfa:
        net = _network(settings, opts.neurons, Mode.CLOSED_LOOP, g_rec=opts.g_rec, g_SFA=g_sfa)
        proto = ExperimentProtocol(kind=Mode.CLOSED_LOOP, duration_ms=opts.duration_s * 1000.0)
        result = run_experiment(
            proto,
            net,
            build_topology(net),
            settings.hardware,
            settings.neuron,
            workers=opts.threads,
        )
        throughput.append(result.stats.events_per_second)
        rates, stats = burst_statistics(
            result.record.times, net.N, result.schedule.n_ticks, tau_sfa=settings.neuron.tau_sfa
        )
        regime = classify_regime(rates)
        logger.info(f"Closed loop g_sfa={g_sfa}: {regime}, {stats.n_bursts} bursts")
        report = {"g_sfa": g_sfa, "regime": str(regime), **stats.model_dump(mode="json")}
        outputs += [
            result.record.to_csv(out_dir / _labelled("spikes.csv", g_sfa, labelled)),
            _write_csv(
                _rate_frame(rates, BURST_BIN_MS),
                out_dir / _labelled("rates.csv", g_sfa, labelled),
            ),
            _write_json(out_dir / _labelled("bursts.json", g_sfa, labelled), report),
        ]
    return _manifest("closed-loop", settings, opts, outputs, started, float(np.mean(throughput)))


def _phase_cell(
    config: dict[str, Any], g_sfa: float, g_rec: float, opts: dict[str, Any]
) -> tuple[float, float, dict[str, Any], str, list[float]]:
    settings = Settings.model_validate(config)
    options = PhasePlaneOptions.model_validate(opts)
    net = _network(settings, options.neurons, Mode.CLOSED_LOOP, g_rec=g_rec, g_SFA=g_sfa)
    proto = ExperimentProtocol(kind=Mode.CLOSED_LOOP, duration_ms=options.duration_s * 1000.0)
    result = run_experiment(proto, net, build_topology(net), settings.hardware, settings.neuron)
    rates, stats = burst_statistics(
        result.record.times, net.N, result.schedule.n_ticks, tau_sfa=settings.neuron.tau_sfa
    )
    n_exemplar = round(options.exemplar_s * 1000.0 / BURST_BIN_MS)
    return (
        g_sfa,
        g_rec,
        stats.model_dump(),
        str(classify_regime(rates)),
        rates[:n_exemplar].tolist(),
    )


def run_phase_plane(settings: Settings, opts: PhasePlaneOptions, out_dir: Path) -> RunManifest:
    """Closed-loop grid over (g_SFA, g_rec); cells run in parallel processes."""
    started = time.perf_counter()
    config = settings.model_dump(mode="json")
    options = opts.model_dump(mode="json")
    cells = [(g_sfa, g_rec) for g_sfa in opts.g_sfa for g_rec in opts.g_rec]
    args = [(config, g_sfa, g_rec, options) for g_sfa, g_rec in cells]
    if opts.threads > 1:
        with ProcessPoolExecutor(max_workers=opts.threads) as pool:
            results = list(pool.map(_phase_cell, *zip(*args, strict=True)))
    else:
        results = [_phase_cell(*arg) for arg in args]

    statistics = {(s, r): BurstStatistics.model_validate(st) for s, r, st, _, _ in results}
    regimes = {(s, r): Regime(regime) for s, r, _, regime, _ in results}
    plane = phase_plane(statistics)
    outputs = plane.to_csv(out_dir)

    regime_frame = pd.DataFrame(
        [{"g_sfa": s, "g_rec": r, "regime": str(reg)} for (s, r), reg in regimes.items()]
    )
    outputs.append(_write_csv(regime_frame, out_dir / "phase_plane_regimes.csv"))
    exemplars = pd.concat(
        [
            _rate_frame(np.asarray(trace), BURST_BIN_MS).assign(g_sfa=s, g_rec=r)
            for s, r, _, _, trace in results
        ],
        ignore_index=True,
    )
    outputs.append(_write_csv(exemplars, out_dir / "exemplars.csv"))

    points = boundary_points(regimes)
    if len(points) >= 2:
        fit = fit_boundary(points)
        outputs.append(_write_json(out_dir / "boundary.json", fit.model_dump()))
        logger.info(
            f"Bursting/up-state boundary: g_rec = {fit.slope:.3f} g_sfa + {fit.intercept:.3f}"
        )
    return _manifest("phase-plane", settings, opts, outputs, started)


def run_stream(settings: Settings, opts: StreamOptions, out_dir: Path) -> RunManifest:
    """Closed-loop network with a live UDP pulse bridge."""
    started = time.perf_counter()
    net = _network(settings, None, Mode.CLOSED_LOOP)
    topo = build_topology(net, n_external=opts.external)
    proto = ExperimentProtocol(kind=Mode.CLOSED_LOOP, duration_ms=opts.duration_s * 1000.0)

    schedule = BackgroundSchedule.execute(topo, net.f_bg, proto.duration_ms, net.seed)
    simulator = NetworkSimulator(
        topo,
        net.resolve(settings.neuron),
        settings.hardware,
        workers=opts.threads,
        seed=net.seed,
    )
    try:
        simulator.add_inputs(schedule.ticks, schedule.sources)
        stats = asyncio.run(
            stream_session(
                (opts.host, opts.port),
                simulator,
                schedule.n_ticks,
                peer=opts.peer,
                paced=opts.paced,
                stats_every=opts.stats_every,
                stats_stream=sys.stdout,
            )
        )
    finally:
        simulator.close()
    outputs = [
        simulator.record().to_csv(out_dir / "spikes.csv"),
        _write_json(out_dir / "bridge_stats.json", asdict(stats)),
    ]
    return _manifest("stream", settings, opts, outputs, started)


RUNNERS: dict[str, tuple[type[BaseModel], Callable[..., RunManifest]]] = {
    "single-neuron": (SingleNeuronOptions, run_single_neuron),
    "open-loop": (OpenLoopOptions, run_open_loop),
    "closed-loop": (ClosedLoopOptions, run_closed_loop),
    "phase-plane": (PhasePlaneOptions, run_phase_plane),
    "stream": (StreamOptions, run_stream),
}


def execute(command: str, settings: Settings, options: dict[str, Any], out_dir: Path) -> Path:
    """Run a command by name and write its manifest; returns the manifest path."""
    if command not in RUNNERS:
        raise ValueError(f"Unknown command: {command}")
    model, runner = RUNNERS[command]
    opts = model.model_validate(options)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = runner(settings, opts, out_dir)
    path = manifest.write(out_dir)
    logger.info(f"{command} finished in {manifest.wall_clock:.1f} s; manifest at {path}")
    return path

