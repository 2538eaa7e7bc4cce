"""Output-side short-term plasticity (quantal release model).

Between spikes u relaxes toward 0 with tau_fac and r toward 1 with tau_rec.
At a spike u' = u + U(1 - u), the released fraction u'r is quantized to the
6-bit output weight, and r' = r(1 - u'). Rounding is half-to-even.
"""

import math

from dataclasses import dataclass, replace

import numpy as np

from scneuro.config import StpParams


@dataclass(frozen=True, slots=True)
class StpState:
    u: float = 0.0
    r: float = 1.0
    U: float = 1.0
    tau_fac: float = 0.0
    tau_rec: float = 0.0
    weight_max: int = 63

    def __post_init__(self):
        if not 0.0 <= self.u <= 1.0:
            raise ValueError(f"Utilization must lie in [0, 1], got {self.u}")
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"Resources must lie in [0, 1], got {self.r}")

    @classmethod
    def from_params(cls, params: StpParams, weight_max: int = 63):
        return cls(
            U=params.U, tau_fac=params.tau_fac, tau_rec=params.tau_rec, weight_max=weight_max
        )


def _relaxation(dt: float, tau: float) -> float:
    if tau == 0.0 or math.isinf(dt):
        return 0.0
    return math.exp(-dt / tau)


def stp_on_spike(s: StpState, dt_since_last: float) -> tuple[StpState, int]:
    if dt_since_last < 0:
        raise ValueError(f"dt_since_last must be non-negative, got {dt_since_last}")
    u = s.u * _relaxation(dt_since_last, s.tau_fac)
    r = 1.0 + (s.r - 1.0) * _relaxation(dt_since_last, s.tau_rec)
    u = u + s.U * (1.0 - u)
    weight = round(s.weight_max * u * r)
    return replace(s, u=u, r=r * (1.0 - u)), weight


class StpBank:
    """Vectorized STP state for a population, one circuit per neuron."""

    def __init__(self, size: int, params: StpParams, weight_max: int, tick: float):
        self.params = params
        self.weight_max = weight_max
        self.tick = tick
        self.u = np.zeros(size)
        self.r = np.ones(size)
        self.last_spike = np.full(size, -1, dtype=np.int64)

    def on_spikes(self, ids: np.ndarray, t: int) -> np.ndarray:
        if self.params.static:
            return np.full(ids.shape, self.weight_max, dtype=np.int64)
        p = self.params
        last = self.last_spike[ids]
        dt = np.where(last < 0, np.inf, (t - last) * self.tick)
        with np.errstate(over="ignore", invalid="ignore"):
            fac = np.exp(-dt / p.tau_fac) if p.tau_fac > 0 else np.zeros_like(dt)
            rec = np.exp(-dt / p.tau_rec) if p.tau_rec > 0 else np.zeros_like(dt)
        u = self.u[ids] * np.nan_to_num(fac)
        r = 1.0 + (self.r[ids] - 1.0) * np.nan_to_num(rec)
        u = u + p.U * (1.0 - u)
        weights = np.rint(self.weight_max * u * r).astype(np.int64)
        self.u[ids] = u
        self.r[ids] = r * (1.0 - u)
        self.last_spike[ids] = t
        return weights
