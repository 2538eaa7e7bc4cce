from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True, slots=True)
class MembraneState:
    v: float
    refrac_until: int = 0
    last_spike: int | None = None


def apply_switch(m: MembraneState, E: float, alpha: float) -> MembraneState:
    """Charge equalization between C_syn (precharged to E) and C_mem."""
    return replace(m, v=m.v + alpha * (E - m.v))


def relax(v: np.ndarray, E: float, alpha: float, switches: np.ndarray | int) -> np.ndarray:
    """Apply ``switches`` consecutive charge equalizations toward E."""
    return E + (v - E) * np.power(1.0 - alpha, switches)
