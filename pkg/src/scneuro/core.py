"""Shared domain types and the mapping from model parameters to register values.

Units: voltages in mV, capacitances in nF, times in ms, conductances in nS,
frequencies in Hz. 1 nF x 1 Hz = 1 nS, which is the switched-capacitor
relation g = C_syn * f used below.
"""

import math

from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from types import MappingProxyType

from loguru import logger

from scneuro.config import HardwareConfig, NeuronParams
from scneuro.constants import STP_WEIGHT_BITS, SYNAPSE_KINDS
from scneuro.exceptions import UnrepresentableParameterError


@dataclass(frozen=True, slots=True, order=True)
class SpikeEvent:
    """A timestamped, weighted pulse. ``time`` is a global tick (0.1 ms)."""

    time: int
    source: int
    weight: int = 63

    def __post_init__(self):
        if self.time < 0:
            raise ValueError(f"Spike time must be non-negative, got {self.time}")
        if self.source < 0:
            raise ValueError(f"Source id must be non-negative, got {self.source}")
        if not 0 <= self.weight < 1 << STP_WEIGHT_BITS:
            raise ValueError(
                f"Spike weight must lie in [0, {1 << STP_WEIGHT_BITS}), got {self.weight}"
            )


@dataclass(frozen=True, slots=True)
class SynapseChannel:
    """One multi-synapse circuit: a GSYN/PHASE register pair and its SC capacitor."""

    name: str
    kinds: tuple[str, ...]
    tau_syn: float
    E_syn: float
    tau_reg: int


@dataclass(frozen=True)
class RegisterSettings:
    hardware: HardwareConfig
    tau_syn: Mapping[str, int]
    weights: Mapping[str, int]
    channels: tuple[SynapseChannel, ...]
    delta_gsyn: int
    leak_period: int
    f_mem: float
    C_syn: float
    g_unit: float
    kind_channel: Mapping[str, int] = field(default_factory=dict)

    def switch_frequency(self, g: float) -> float:
        """Switching frequency (Hz) that realizes conductance g (nS)."""
        return g / self.C_syn

    def register_frequency(self, gsyn_reg: float) -> float:
        """Long-run NCO event rate (Hz) for a constant GSYN_REG value."""
        h = self.hardware
        return gsyn_reg * h.f_clk / (self.delta_gsyn * (1 << h.phase_width))

    def conductance(self, gsyn_reg: float) -> float:
        """Conductance (nS) realized by a GSYN_REG value."""
        return gsyn_reg * self.g_unit

    def weight_for(self, g: float) -> int:
        """12-bit input weight that adds conductance g (nS) to a GSYN register."""
        weight = round(g / (self.g_unit * self.hardware.weight_scale))
        if weight >= 1 << self.hardware.weight_width:
            raise UnrepresentableParameterError(
                f"Conductance {g} nS needs weight {weight}, which exceeds "
                f"{self.hardware.weight_width} bits"
            )
        if g > 0 and weight == 0:
            logger.warning(f"Conductance {g} nS rounds to a zero register weight")
        return weight

    def increment(self, kind: str, stp_weight: int | None = None) -> int:
        """GSYN_REG increment for one spike of the given synapse kind."""
        full = self.weights[kind] * self.hardware.weight_scale
        if stp_weight is None:
            return full
        return full * stp_weight // self.hardware.stp_weight_max


def tau_register(tau_ms: float, hardware: HardwareConfig) -> int:
    """TAU_SYN counter target for a decay time constant.

    The register is attenuated by (1 - 2^-k) every TAU_SYN + 1 cycles, so
    TAU_SYN + 1 = f_clk * tau * -ln(1 - 2^-k).
    """
    per_update = -math.log1p(-(2.0 ** -hardware.decay_shift))
    value = round(hardware.f_clk * tau_ms * 1e-3 * per_update) - 1
    if value < 0 or value >= 1 << hardware.tau_width:
        raise UnrepresentableParameterError(
            f"Time constant {tau_ms} ms needs TAU_SYN={value}, outside "
            f"{hardware.tau_width}-bit counter range"
        )
    return value


def effective_tau(tau_reg: int, hardware: HardwareConfig) -> float:
    """Decay time constant (ms) realized by a TAU_SYN value."""
    per_update = -math.log1p(-(2.0 ** -hardware.decay_shift))
    return (tau_reg + 1) / (hardware.f_clk * per_update) * 1e3


def synapse_channels(p: NeuronParams, hardware: HardwareConfig) -> tuple[SynapseChannel, ...]:
    """Multi-synapse layout: rec and bg share a circuit when tau and E agree."""
    if p.tau_syn_rec == p.tau_syn_bg and p.E_syn_rec == p.E_syn_bg:
        tau_reg = tau_register(p.tau_syn_rec, hardware)
        excitatory = [SynapseChannel("exc", ("rec", "bg"), p.tau_syn_rec, p.E_syn_rec, tau_reg)]
    else:
        excitatory = []
        for kind in ("rec", "bg"):
            tau, E = p.tau_syn(kind), p.E_syn(kind)
            excitatory.append(SynapseChannel(kind, (kind,), tau, E, tau_register(tau, hardware)))
    sfa = SynapseChannel("sfa", ("sfa",), p.tau_sfa, p.E_sfa, tau_register(p.tau_sfa, hardware))
    return (*excitatory, sfa)


def map_params_to_registers(p: NeuronParams, h: HardwareConfig) -> RegisterSettings:
    """Translate biological-unit parameters into register settings.

    Raises:
        UnrepresentableParameterError: a counter target or weight overflows its width.
    """
    tau_syn = {kind: tau_register(p.tau_syn(kind), h) for kind in SYNAPSE_KINDS}

    f_mem = 1.0 / (h.alpha * p.tau_mem * 1e-3)
    leak_period = round(h.f_clk / f_mem)
    if leak_period < 1:
        raise UnrepresentableParameterError(
            f"Leak switching frequency {f_mem} Hz exceeds the clock {h.f_clk} Hz"
        )

    C_syn = h.alpha * p.C_mem
    delta_gsyn = max(1, round(h.f_clk / h.nco_rate))
    g_unit = C_syn * h.f_clk / (delta_gsyn * (1 << h.phase_width))

    channels = synapse_channels(p, h)
    kind_channel = {kind: index for index, ch in enumerate(channels) for kind in ch.kinds}

    settings = RegisterSettings(
        hardware=h,
        tau_syn=MappingProxyType(tau_syn),
        weights=MappingProxyType({}),
        channels=channels,
        delta_gsyn=delta_gsyn,
        leak_period=leak_period,
        f_mem=f_mem,
        C_syn=C_syn,
        g_unit=g_unit,
        kind_channel=MappingProxyType(kind_channel),
    )
    amplitudes = {"rec": p.g_hat_rec, "bg": p.g_hat_bg, "sfa": p.g_sfa}
    weights = {kind: settings.weight_for(g) for kind, g in amplitudes.items()}
    logger.debug(
        f"Register mapping: TAU_SYN={tau_syn}, weights={weights}, DELTA_GSYN={delta_gsyn}, "
        f"leak period={leak_period} cycles, g_unit={g_unit:.4g} nS"
    )
    return replace(settings, weights=MappingProxyType(weights))
