import json
import math

from enum import StrEnum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic_settings import (
    BaseSettings,
    SettingsConfigDict,
)

from scneuro.constants import (
    MAX_DELAYS,
    NETWORK_DEFAULTS,
    NEURON_DEFAULTS,
    STP_WEIGHT_BITS,
    TICK_MS,
)


class SwitchTiming(StrEnum):
    NCO = "nco"
    POISSON = "poisson"


class Mode(StrEnum):
    OPEN_LOOP = "open_loop"
    CLOSED_LOOP = "closed_loop"
    SINGLE_NEURON = "single_neuron"


class StpParams(BaseModel):
    """Quantal-release parameters of the output STP circuit.

    The defaults (U=1, no facilitation, instantaneous recovery) are the
    static mode used by all experiments: every spike leaves with weight 63.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    U: float = Field(1.0, gt=0.0, le=1.0)
    tau_fac: float = Field(0.0, ge=0.0)
    tau_rec: float = Field(0.0, ge=0.0)

    @property
    def static(self) -> bool:
        return self.U == 1.0 and self.tau_rec == 0.0


class NeuronParams(BaseModel):
    """Biological-unit neuron parameters: mV, nF, ms, nS."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    v_rest: float = NEURON_DEFAULTS["v_rest"]
    v_reset: float = NEURON_DEFAULTS["v_reset"]
    v_thresh: float = NEURON_DEFAULTS["v_thresh"]
    C_mem: float = Field(NEURON_DEFAULTS["C_mem"], gt=0.0)
    tau_mem: float = Field(NEURON_DEFAULTS["tau_mem"], gt=0.0)
    T_refrac: float = Field(NEURON_DEFAULTS["T_refrac"], gt=0.0)

    tau_syn_rec: float = Field(NEURON_DEFAULTS["tau_syn"], gt=0.0)
    E_syn_rec: float = NEURON_DEFAULTS["E_syn"]
    g_hat_rec: float = Field(4.0, ge=0.0)

    tau_syn_bg: float = Field(NEURON_DEFAULTS["tau_syn"], gt=0.0)
    E_syn_bg: float = NEURON_DEFAULTS["E_syn"]
    g_hat_bg: float = Field(NETWORK_DEFAULTS["g_bg"], ge=0.0)

    tau_sfa: float = Field(NEURON_DEFAULTS["tau_sfa"], gt=0.0)
    E_sfa: float = NEURON_DEFAULTS["E_sfa"]
    g_sfa: float = Field(0.0, ge=0.0)

    stp: StpParams = StpParams()

    @model_validator(mode="after")
    def _check_voltages(self) -> "NeuronParams":
        if not self.v_reset <= self.v_rest < self.v_thresh:
            raise ValueError(
                f"Expected v_reset <= v_rest < v_thresh, got {self.v_reset}, "
                f"{self.v_rest}, {self.v_thresh}"
            )
        return self

    @property
    def g_mem(self) -> float:
        """Leak conductance in nS."""
        return 1000.0 * self.C_mem / self.tau_mem

    def tau_syn(self, kind: str) -> float:
        return {"rec": self.tau_syn_rec, "bg": self.tau_syn_bg, "sfa": self.tau_sfa}[kind]

    def E_syn(self, kind: str) -> float:
        return {"rec": self.E_syn_rec, "bg": self.E_syn_bg, "sfa": self.E_sfa}[kind]


class NetworkConfig(BaseModel):
    """Topology and stimulus description of one experiment."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    N: int = Field(NETWORK_DEFAULTS["N"], gt=0)
    N_bg: int = Field(NETWORK_DEFAULTS["N_bg"], ge=0)
    p_rec: float = Field(NETWORK_DEFAULTS["k_rec"] / NETWORK_DEFAULTS["N"], ge=0.0, le=1.0)
    p_bg: float = Field(NETWORK_DEFAULTS["k_bg"] / NETWORK_DEFAULTS["N_bg"], ge=0.0, le=1.0)
    f_bg: float = Field(NETWORK_DEFAULTS["f_bg"], ge=0.0)
    # None falls back to the matching NeuronParams amplitude.
    g_rec: float | None = Field(None, ge=0.0)
    g_bg: float | None = Field(None, ge=0.0)
    g_SFA: float | None = Field(None, ge=0.0)
    seed: int = Field(0, ge=0, lt=2**64)
    delays: tuple[int, ...] = (1,)
    # Per-neuron delay sets; each replaces ``delays`` for that neuron's outgoing copies.
    neuron_delays: dict[int, tuple[int, ...]] = Field(default_factory=dict)
    mode: Mode = Mode.CLOSED_LOOP
    shared_stimulus: bool = False

    @model_validator(mode="after")
    def _check_delays(self) -> "NetworkConfig":
        if not 1 <= len(self.delays) <= MAX_DELAYS:
            raise ValueError(f"Expected 1 to {MAX_DELAYS} delays, got {len(self.delays)}")
        if any(delay < 1 for delay in self.delays):
            raise ValueError(f"Delays must be at least one tick, got {self.delays}")
        for neuron_id, delays in self.neuron_delays.items():
            if not 0 <= neuron_id < self.N:
                raise ValueError(f"Delay override for unknown neuron {neuron_id}")
            if len(delays) != len(self.delays):
                raise ValueError(
                    f"Neuron {neuron_id} needs {len(self.delays)} delays, got {len(delays)}"
                )
            if any(delay < 1 for delay in delays):
                raise ValueError(f"Delays must be at least one tick, got {delays}")
        return self

    @property
    def k_rec(self) -> float:
        """Mean recurrent in-degree."""
        return self.N * self.p_rec

    @property
    def k_bg(self) -> float:
        """Mean background in-degree."""
        return self.N_bg * self.p_bg

    def scaled(self, N: int) -> "NetworkConfig":
        """Same mean in-degrees on a network of N neurons."""
        return self.model_copy(update={"N": N, "p_rec": min(1.0, self.k_rec / N)})

    def resolve(self, neuron: NeuronParams) -> NeuronParams:
        """Neuron parameters with this network's conductance overrides applied."""
        update: dict[str, Any] = {}
        if self.g_rec is not None:
            update["g_hat_rec"] = self.g_rec
        if self.g_bg is not None:
            update["g_hat_bg"] = self.g_bg
        if self.g_SFA is not None:
            update["g_sfa"] = self.g_SFA
        return neuron.model_copy(update=update) if update else neuron


class HardwareConfig(BaseModel):
    """Digital half of the switched-capacitor circuit."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    f_clk: float = Field(1_000_000.0, gt=0.0)
    alpha: float = Field(1.0 / 20.0, gt=0.0, lt=1.0)
    gsyn_width: int = Field(16, gt=0, le=62)
    phase_width: int = Field(20, gt=0, le=62)
    weight_width: int = Field(12, gt=0)
    stp_weight_width: int = Field(STP_WEIGHT_BITS, gt=0, le=STP_WEIGHT_BITS)
    decay_shift: int = Field(6, gt=0)
    tick: float = Field(TICK_MS, gt=0.0)
    tau_width: int = Field(16, gt=0)
    nco_rate: float = Field(250_000.0, gt=0.0)
    weight_scale: int = Field(1, gt=0)
    # poisson: switch instants form a Poisson process at the NCO rate; nco: NCO overflows.
    switching: SwitchTiming = SwitchTiming.POISSON

    @model_validator(mode="after")
    def _check_widths(self) -> "HardwareConfig":
        if not self.phase_width >= self.gsyn_width >= self.weight_width:
            raise ValueError(
                f"Expected phase_width >= gsyn_width >= weight_width, got {self.phase_width}, "
                f"{self.gsyn_width}, {self.weight_width}"
            )
        cycles = self.f_clk * self.tick * 1e-3
        if cycles < 1 or not math.isclose(cycles, round(cycles), rel_tol=0, abs_tol=1e-6):
            raise ValueError(f"Clock must give a whole number of cycles per tick, got {cycles}")
        return self

    def rescaled_clock(self, f_clk: float) -> "HardwareConfig":
        """The same circuit at another clock with alpha * f_clk held fixed.

        A faster clock then means smaller, more frequent membrane switches.
        """
        alpha = self.alpha * self.f_clk / f_clk
        return HardwareConfig.model_validate(self.model_dump() | {"f_clk": f_clk, "alpha": alpha})

    @property
    def cycles_per_tick(self) -> int:
        return round(self.f_clk * self.tick * 1e-3)

    @property
    def gsyn_max(self) -> int:
        return (1 << self.gsyn_width) - 1

    @property
    def stp_weight_max(self) -> int:
        return (1 << self.stp_weight_width) - 1


class VbarMode(StrEnum):
    MIDPOINT = "midpoint"
    LITERAL = "literal"


class LowerBound(StrEnum):
    V_REST = "v_rest"
    V_RESET = "v_reset"


class MeanFieldOptions(BaseModel):
    """Knobs of the mean-field transfer function.

    ``vbar="literal"`` reproduces the average voltage written as
    (v_thresh - v_reset) / 2; the default is the midpoint of the two.
    The first-passage integral starts at v_reset, where the membrane
    restarts after every spike; ``lower_bound="v_rest"`` starts it at rest.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    vbar: VbarMode = VbarMode.MIDPOINT
    lower_bound: LowerBound = LowerBound.V_RESET
    quad_epsabs: float = Field(1e-9, gt=0.0)
    sfa_tol: float = Field(1e-3, gt=0.0)
    sfa_max_iter: int = Field(1000, gt=0)
    sfa_damping: float = Field(0.5, gt=0.0, le=1.0)

    def v_bar(self, neuron: NeuronParams) -> float:
        if self.vbar is VbarMode.LITERAL:
            return (neuron.v_thresh - neuron.v_reset) / 2.0
        return (neuron.v_thresh + neuron.v_reset) / 2.0

    def v_lower(self, neuron: NeuronParams) -> float:
        return neuron.v_rest if self.lower_bound is LowerBound.V_REST else neuron.v_reset


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="SCNEURO_",
        env_nested_delimiter="__",
        extra="ignore",
    )
    neuron: NeuronParams = NeuronParams()
    network: NetworkConfig = NetworkConfig()
    hardware: HardwareConfig = HardwareConfig()
    meanfield: MeanFieldOptions = MeanFieldOptions()

    def resolved_neuron(self) -> NeuronParams:
        return self.network.resolve(self.neuron)


def load_settings(path: Path | None = None, **overrides: Any) -> Settings:
    """Load settings from a JSON file with "neuron", "network" and "hardware" sections.

    Keyword overrides replace whole sections. Environment variables
    (``SCNEURO_NETWORK__SEED=3``) fill whatever the file leaves out.
    """
    data: dict[str, Any] = {}
    if path is not None:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValueError("Configuration must be a JSON object")
    data.update(overrides)
    return Settings(**data)
