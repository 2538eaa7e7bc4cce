"""Cycle-level model of one multi-synapse's digital circuitry.

GSYN_REG accumulates incoming weights and is attenuated by a shift-subtract
every TAU_SYN + 1 clock cycles. PHASE_REG accumulates GSYN_REG every
DELTA_GSYN cycles; each overflow is one switch event of the SC circuit.
"""

from dataclasses import dataclass, replace

from scneuro.core import RegisterSettings, SynapseChannel


@dataclass(frozen=True, slots=True)
class SynapseRegisterState:
    gsyn_reg: int = 0
    tau_counter: int = 0
    phase_reg: int = 0
    E_syn: float = 0.0
    tau_syn: int = 125
    delta_gsyn: int = 4
    gsyn_width: int = 16
    phase_width: int = 20
    weight_width: int = 12
    weight_scale: int = 1
    decay_shift: int = 6

    def __post_init__(self):
        if not 0 <= self.gsyn_reg < 1 << self.gsyn_width:
            raise ValueError(f"GSYN_REG {self.gsyn_reg} exceeds {self.gsyn_width} bits")
        if not 0 <= self.tau_counter <= self.tau_syn:
            raise ValueError(f"TAU_COUNTER {self.tau_counter} outside [0, {self.tau_syn}]")
        if not 0 <= self.phase_reg < 1 << self.phase_width:
            raise ValueError(f"PHASE_REG {self.phase_reg} exceeds {self.phase_width} bits")

    @classmethod
    def for_channel(cls, channel: SynapseChannel, settings: RegisterSettings):
        h = settings.hardware
        return cls(
            E_syn=channel.E_syn,
            tau_syn=channel.tau_reg,
            delta_gsyn=settings.delta_gsyn,
            gsyn_width=h.gsyn_width,
            phase_width=h.phase_width,
            weight_width=h.weight_width,
            weight_scale=h.weight_scale,
            decay_shift=h.decay_shift,
        )


def accumulate_weight(s: SynapseRegisterState, w: int) -> SynapseRegisterState:
    """Add an incoming weight to GSYN_REG, saturating at the register width."""
    if not 0 <= w < 1 << s.weight_width:
        raise ValueError(f"Weight {w} does not fit {s.weight_width} bits")
    ceiling = (1 << s.gsyn_width) - 1
    return replace(s, gsyn_reg=min(s.gsyn_reg + w * s.weight_scale, ceiling))


def decay_tick(s: SynapseRegisterState) -> SynapseRegisterState:
    if s.tau_counter == s.tau_syn:
        return replace(s, tau_counter=0, gsyn_reg=s.gsyn_reg - (s.gsyn_reg >> s.decay_shift))
    return replace(s, tau_counter=s.tau_counter + 1)


def nco_tick(s: SynapseRegisterState) -> tuple[SynapseRegisterState, bool]:
    total = s.phase_reg + s.gsyn_reg
    overflow = total >> s.phase_width
    return replace(s, phase_reg=total & ((1 << s.phase_width) - 1)), bool(overflow)


def clock_cycle(s: SynapseRegisterState, cycle: int) -> tuple[SynapseRegisterState, bool]:
    """One clock cycle: decay counter first, then the NCO on its DELTA_GSYN grid."""
    s = decay_tick(s)
    if (cycle + 1) % s.delta_gsyn == 0:
        return nco_tick(s)
    return s, False
