import json
import sys

from pathlib import Path
from typing import Annotated, Any

import typer

from loguru import logger
from pydantic import ValidationError

from scneuro.config import NetworkConfig, Settings, load_settings
from scneuro.core import map_params_to_registers
from scneuro.exceptions import UnrepresentableParameterError
from scneuro.experiments import RUNNERS, execute
from scneuro.manifest import RunManifest
from scneuro.utils.utils import parse_grid, validate_sweep

app = typer.Typer(
    name="scneuro",
    help="Switched-capacitor neuromorphic network emulator and mean-field toolkit.",
    no_args_is_help=True,
    pretty_exceptions_enable=False,
)

CONFIG_ERRORS = (
    ValidationError,
    UnrepresentableParameterError,
    ValueError,
    FileNotFoundError,
    json.JSONDecodeError,
)

ConfigOption = Annotated[
    Path | None, typer.Option("--config", help="JSON file with neuron/network/hardware sections")
]
SeedOption = Annotated[int | None, typer.Option("--seed", help="Network seed override")]
OutDirOption = Annotated[Path, typer.Option("--out-dir", help="Directory for outputs")]
ThreadsOption = Annotated[int, typer.Option("--threads", min=1, help="Worker count")]
NeuronsOption = Annotated[int | None, typer.Option("--neurons", min=1, help="Network size")]


def _fail(exc: BaseException, code: int) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    typer.echo(json.dumps(payload), err=True)
    raise typer.Exit(code)


def _settings(config: Path | None, seed: int | None) -> Settings:
    settings = load_settings(config)
    if seed is not None:
        network = NetworkConfig.model_validate(settings.network.model_dump() | {"seed": seed})
        settings = settings.model_copy(update={"network": network})
    # Unrepresentable parameters are configuration faults, not runtime ones.
    map_params_to_registers(settings.resolved_neuron(), settings.hardware)
    return settings


def _run(command: str, settings_factory: Any, options: Any, out_dir: Path) -> None:
    try:
        settings = settings_factory()
        model, _ = RUNNERS[command]
        opts = model.model_validate(options() if callable(options) else options)
    except CONFIG_ERRORS as exc:
        _fail(exc, 2)
    try:
        execute(command, settings, opts.model_dump(), out_dir)
    except Exception as exc:
        logger.exception(f"{command} failed")
        _fail(exc, 1)


def _sweep(**axes: str) -> dict[str, list[float]]:
    return validate_sweep({axis: parse_grid(spec) for axis, spec in axes.items()})


def _address(spec: str) -> tuple[str, int]:
    host, _, port = spec.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"Address must be 'host:port', got {spec}")
    return host, int(port)


@app.callback()
def main_callback(
    log_level: Annotated[
        str, typer.Option("--log-level", help="Log level of the stderr sink")
    ] = "INFO",
):
    """Configure logging for every command."""
    logger.remove()
    logger.add(sys.stderr, level=log_level.upper())


@app.command("single-neuron")
def single_neuron(
    config: ConfigOption = None,
    seed: SeedOption = None,
    duration: Annotated[float, typer.Option(help="Stimulation seconds per grid point")] = 2.0,
    out_dir: OutDirOption = Path("out/single-neuron"),
    threads: ThreadsOption = 1,
    grid: Annotated[str, typer.Option(help="Input-rate grid 'a:b:step' (Hz)")] = "0:180:20",
    neurons: Annotated[int, typer.Option(min=1, help="Independent neurons")] = 32,
):
    """Characterize fixed in-degree neurons against mean-field predictions."""
    _run(
        "single-neuron",
        lambda: _settings(config, seed),
        lambda: {
            "grid": parse_grid(grid),
            "neurons": neurons,
            "stimulation_s": duration,
            "threads": threads,
        },
        out_dir,
    )


@app.command("open-loop")
def open_loop(
    config: ConfigOption = None,
    seed: SeedOption = None,
    duration: Annotated[float, typer.Option(help="Stimulation seconds per grid point")] = 2.0,
    out_dir: OutDirOption = Path("out/open-loop"),
    threads: ThreadsOption = 1,
    grid: Annotated[str, typer.Option(help="Input-rate grid 'a:b:step' (Hz)")] = "0:180:20",
    g_rec: Annotated[str, typer.Option(help="Recurrent conductances 'a:b:step' (nS)")] = "2:4:1",
    g_sfa: Annotated[str, typer.Option(help="SFA conductances 'a:b:step' (nS)")] = "0",
    neurons: NeuronsOption = None,
):
    """Measure population transfer curves with mean-field overlays."""

    def options() -> dict[str, Any]:
        sweep = _sweep(g_rec=g_rec, g_sfa=g_sfa)
        return {
            "grid": parse_grid(grid),
            "g_rec": sweep["g_rec"],
            "g_sfa": sweep["g_sfa"],
            "neurons": neurons,
            "stimulation_s": duration,
            "threads": threads,
        }

    _run("open-loop", lambda: _settings(config, seed), options, out_dir)


@app.command("closed-loop")
def closed_loop(
    config: ConfigOption = None,
    seed: SeedOption = None,
    duration: Annotated[float, typer.Option(help="Run length in seconds")] = 10.0,
    out_dir: OutDirOption = Path("out/closed-loop"),
    threads: ThreadsOption = 1,
    g_rec: Annotated[float, typer.Option(help="Recurrent conductance (nS)")] = 4.0,
    g_sfa: Annotated[
        str, typer.Option(help="SFA conductances 'a:b:step' (nS), one run each")
    ] = "0",
    neurons: NeuronsOption = None,
):
    """Run the recurrent network and report its rate trace and bursts."""
    _run(
        "closed-loop",
        lambda: _settings(config, seed),
        lambda: {
            "g_rec": g_rec,
            "g_sfa": _sweep(g_sfa=g_sfa)["g_sfa"],
            "duration_s": duration,
            "neurons": neurons,
            "threads": threads,
        },
        out_dir,
    )


@app.command("phase-plane")
def phase_plane(
    config: ConfigOption = None,
    seed: SeedOption = None,
    duration: Annotated[float, typer.Option(help="Seconds per cell")] = 500.0,
    out_dir: OutDirOption = Path("out/phase-plane"),
    threads: Annotated[int, typer.Option("--threads", min=1, help="Cells run in parallel")] = 1,
    grid: Annotated[str, typer.Option(help="SFA conductance grid 'a:b:step' (nS)")] = "1:4:1",
    rec_grid: Annotated[
        str, typer.Option("--rec-grid", help="Recurrent conductance grid 'a:b:step' (nS)")
    ] = "3:4.5:0.5",
    exemplar: Annotated[float, typer.Option(help="Seconds of rate trace kept per cell")] = 10.0,
    neurons: NeuronsOption = None,
):
    """Sweep (g_SFA, g_rec) and tabulate burst statistics per cell."""

    def options() -> dict[str, Any]:
        sweep = _sweep(g_sfa=grid, g_rec=rec_grid)
        return {
            "g_sfa": sweep["g_sfa"],
            "g_rec": sweep["g_rec"],
            "duration_s": duration,
            "exemplar_s": exemplar,
            "neurons": neurons,
            "threads": threads,
        }

    _run("phase-plane", lambda: _settings(config, seed), options, out_dir)


@app.command("stream")
def stream(
    config: ConfigOption = None,
    seed: SeedOption = None,
    duration: Annotated[float, typer.Option(help="Run length in seconds")] = 10.0,
    out_dir: OutDirOption = Path("out/stream"),
    threads: ThreadsOption = 1,
    bind: Annotated[str, typer.Option(help="Local UDP address 'host:port'")] = "127.0.0.1:9000",
    peer: Annotated[
        str | None, typer.Option(help="Where output frames go; default the first sender")
    ] = None,
    external: Annotated[int, typer.Option(min=0, help="External input sources")] = 32,
    paced: Annotated[bool, typer.Option(help="Pace ticks to wall-clock time")] = True,
    stats_every: Annotated[
        int, typer.Option(min=0, help="Ticks between JSON stats lines")
    ] = 10_000,
):
    """Run the closed-loop network with a live UDP pulse bridge."""

    def options() -> dict[str, Any]:
        host, port = _address(bind)
        return {
            "host": host,
            "port": port,
            "peer": _address(peer) if peer else None,
            "duration_s": duration,
            "paced": paced,
            "external": external,
            "stats_every": stats_every,
            "threads": threads,
        }

    _run("stream", lambda: _settings(config, seed), options, out_dir)


@app.command("rerun")
def rerun(
    manifest: Annotated[Path, typer.Argument(help="manifest.json of an earlier run")],
    out_dir: Annotated[
        Path | None, typer.Option("--out-dir", help="Defaults to the manifest's directory")
    ] = None,
):
    """Re-execute a run from its manifest with the same config and options."""
    try:
        recorded = RunManifest.load(manifest)
        if recorded.command not in RUNNERS:
            raise ValueError(f"Manifest names an unknown command: {recorded.command}")
    except CONFIG_ERRORS as exc:
        _fail(exc, 2)
    _run(
        recorded.command,
        lambda: Settings.model_validate(recorded.config),
        recorded.options,
        out_dir or manifest.parent,
    )
