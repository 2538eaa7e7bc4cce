"""Mean-field transfer function of the conductance-based LIF population.

Inputs are shot noise from Poisson sources: every source kind contributes a
mean conductance g * tau_syn * rate and a charge variance rate * Q^2. The
output rate is the Siegert first-passage formula

    1 / f_out = T_refrac + tau_eff * sqrt(pi) * int_lo^hi erfcx(-x) dx

with bounds (v_lower - v_ss) / sigma and (v_thresh - v_ss) / sigma. The
"hardware" variance replaces the current-noise estimate by the variance of
discrete charge-equalization jumps at the switching frequencies.
"""

import math

from collections.abc import Callable, Sequence
from enum import StrEnum
from pathlib import Path

import numpy as np
import pandas as pd

from loguru import logger
from pydantic import BaseModel, ConfigDict, PrivateAttr, model_validator
from scipy import integrate, optimize, special

from scneuro.config import HardwareConfig, MeanFieldOptions, NetworkConfig, NeuronParams
from scneuro.exceptions import ConvergenceError

# Above this bound e^{x^2} overflows a double; the integral is taken in log space.
_LOG_SPACE_BOUND = 26.0


class Variant(StrEnum):
    MEASURED = "measured"
    STANDARD = "meanfield_standard"
    HARDWARE = "meanfield_hardware"


class SfaMode(StrEnum):
    NONE = "none"
    STEADY_STATE = "steady_state"


class Stability(StrEnum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    DEGENERATE = "degenerate"


class SteadyStateStats(BaseModel):
    """Membrane statistics at one operating point. Units: nS, ms, mV, Hz, pC."""

    model_config = ConfigDict(frozen=True)

    g_syn_total: float
    g_sfa_total: float = 0.0
    tilde_tau_mem: float
    v_ss: float
    sigma_v_standard: float
    sigma_v_hardware: float
    sigma_i_sq: float
    Q_rec: float
    Q_bg: float
    v_bar: float
    f_syn: float
    f_mem: float

    def sigma(self, variant: Variant) -> float:
        if variant is Variant.HARDWARE:
            return self.sigma_v_hardware
        return self.sigma_v_standard


def steady_state_stats(
    p: NeuronParams,
    net: NetworkConfig,
    f_in: float,
    *,
    f_out: float = 0.0,
    options: MeanFieldOptions | None = None,
    hardware: HardwareConfig | None = None,
) -> SteadyStateStats:
    """Steady-state conductance, voltage and noise for input rate f_in.

    ``f_out`` drives the adaptation synapse in the steady-state SFA extension;
    leave it at 0 for the plain transfer function.
    """
    if f_in < 0:
        raise ValueError(f"Input rate must be non-negative, got {f_in}")
    options = options or MeanFieldOptions()
    hardware = hardware or HardwareConfig()
    p = net.resolve(p)
    v_bar = options.v_bar(p)

    # kind -> (amplitude nS, tau ms, reversal mV, total presynaptic rate Hz)
    sources = {
        "rec": (p.g_hat_rec, p.tau_syn_rec, p.E_syn_rec, f_in * net.k_rec),
        "bg": (p.g_hat_bg, p.tau_syn_bg, p.E_syn_bg, net.f_bg * net.k_bg),
        "sfa": (p.g_sfa, p.tau_sfa, p.E_sfa, f_out),
    }
    mean_g = {kind: g * tau * 1e-3 * rate for kind, (g, tau, _, rate) in sources.items()}
    charge = {kind: g * tau * (E - v_bar) * 1e-3 for kind, (g, tau, E, _) in sources.items()}

    g_all = sum(mean_g.values())
    g_mem = p.g_mem
    tilde_tau = 1000.0 * p.C_mem / (g_mem + g_all)
    weighted = g_mem * p.v_rest + sum(mean_g[kind] * sources[kind][2] for kind in sources)
    v_ss = weighted / (g_mem + g_all)

    sigma_i_sq = sum(sources[kind][3] * charge[kind] ** 2 for kind in sources)
    sigma_standard = math.sqrt(sigma_i_sq * tilde_tau * 1e-3) / p.C_mem

    alpha = hardware.alpha
    f_mem = 1000.0 / (alpha * p.tau_mem)
    jumps = f_mem * (alpha * (p.v_rest - v_bar)) ** 2
    f_syn = 0.0
    for kind, (_, _, E, rate) in sources.items():
        f_s = mean_g[kind] / g_mem * f_mem
        jumps += f_s * (alpha * (E - v_bar)) ** 2
        if kind != "sfa":
            f_syn += f_s
    sigma_hardware = math.sqrt(jumps * tilde_tau * 1e-3)

    return SteadyStateStats(
        g_syn_total=mean_g["rec"] + mean_g["bg"],
        g_sfa_total=mean_g["sfa"],
        tilde_tau_mem=tilde_tau,
        v_ss=v_ss,
        sigma_v_standard=sigma_standard,
        sigma_v_hardware=sigma_hardware,
        sigma_i_sq=sigma_i_sq,
        Q_rec=charge["rec"],
        Q_bg=charge["bg"],
        v_bar=v_bar,
        f_syn=f_syn,
        f_mem=f_mem,
    )


def _quad(fn: Callable[[float], float], a: float, b: float, epsabs: float) -> float:
    value, _ = integrate.quad(fn, a, b, epsabs=epsabs, epsrel=1e-11, limit=200)
    return value


def siegert_integral(a: float, b: float, epsabs: float = 1e-9) -> float:
    """int_a^b erfcx(-x) dx, i.e. int e^{x^2} (1 + erf x) dx.

    The interval is split at 0. On the positive side erfcx(-x) equals
    2 e^{x^2} - erfcx(x); the first term integrates in closed form through
    Dawson's function.
    """
    if a > b:
        return -siegert_integral(b, a, epsabs)
    total = 0.0
    if a < 0:
        total += _quad(lambda x: special.erfcx(-x), a, min(b, 0.0), epsabs)
    if b > 0:
        lo = max(a, 0.0)
        closed = 2.0 * (
            math.exp(b * b) * special.dawsn(b) - math.exp(lo * lo) * special.dawsn(lo)
        )
        total += closed - _quad(special.erfcx, lo, b, epsabs)
    return total


def _log_siegert_integral(a: float, b: float) -> float:
    """log of the integral for large upper bounds, dominated by 2 e^{b^2} D(b)."""
    lo = max(a, 0.0)
    ratio = math.exp(lo * lo - b * b) * special.dawsn(lo) / special.dawsn(b)
    if ratio >= 1.0:
        return -math.inf
    return b * b + math.log(2.0 * special.dawsn(b)) + math.log1p(-ratio)


def _charge_time(stats: SteadyStateStats, v_start: float, v_thresh: float) -> float:
    if stats.v_ss <= v_thresh:
        return math.inf
    return stats.tilde_tau_mem * math.log((stats.v_ss - v_start) / (stats.v_ss - v_thresh))


def siegert_rate(
    stats: SteadyStateStats,
    p: NeuronParams,
    *,
    variant: Variant = Variant.STANDARD,
    options: MeanFieldOptions | None = None,
) -> float:
    """Output rate (Hz) for the given membrane statistics.

    With zero noise the deterministic limit applies: no firing unless the
    steady state lies above threshold, then 1 / (T_refrac + charge time).
    """
    options = options or MeanFieldOptions()
    v_lower = options.v_lower(p)
    sigma = stats.sigma(variant)
    if sigma == 0.0:
        charge = _charge_time(stats, v_lower, p.v_thresh)
        return 0.0 if math.isinf(charge) else 1000.0 / (p.T_refrac + charge)

    lower = (v_lower - stats.v_ss) / sigma
    upper = (p.v_thresh - stats.v_ss) / sigma
    scale = stats.tilde_tau_mem * math.sqrt(math.pi)
    if upper <= _LOG_SPACE_BOUND:
        return 1000.0 / (p.T_refrac + scale * siegert_integral(lower, upper, options.quad_epsabs))
    log_denominator = np.logaddexp(
        math.log(p.T_refrac), math.log(scale) + _log_siegert_integral(lower, upper)
    )
    return 1000.0 * math.exp(-log_denominator)


def constant_current_rate(
    p: NeuronParams,
    net: NetworkConfig,
    f_in: float,
    *,
    options: MeanFieldOptions | None = None,
    hardware: HardwareConfig | None = None,
) -> float:
    """Rate of a noiseless neuron driven by the mean conductances alone."""
    options = options or MeanFieldOptions()
    stats = steady_state_stats(p, net, f_in, options=options, hardware=hardware)
    charge = _charge_time(stats, options.v_lower(p), p.v_thresh)
    return 0.0 if math.isinf(charge) else 1000.0 / (p.T_refrac + charge)


def transfer_function(
    p: NeuronParams,
    net: NetworkConfig,
    f_in: float,
    *,
    variant: Variant = Variant.STANDARD,
    sfa_mode: SfaMode = SfaMode.NONE,
    options: MeanFieldOptions | None = None,
    hardware: HardwareConfig | None = None,
) -> float:
    """Mean-field output rate at one input rate.

    In steady-state SFA mode the adaptation conductance g_SFA * tau_sfa *
    f_out is solved self-consistently by damped iteration; the damping is
    halved whenever the residual changes sign.

    Raises:
        ConvergenceError: the SFA loop did not settle within the configured
        number of iterations.
    """
    options = options or MeanFieldOptions()

    def rate(f_out: float) -> float:
        stats = steady_state_stats(
            p, net, f_in, f_out=f_out, options=options, hardware=hardware
        )
        return siegert_rate(stats, p, variant=variant, options=options)

    f = rate(0.0)
    if sfa_mode is SfaMode.NONE or net.resolve(p).g_sfa == 0.0:
        return f

    damping = options.sfa_damping
    previous = 0.0
    for _ in range(options.sfa_max_iter):
        residual = rate(f) - f
        if abs(residual) < options.sfa_tol:
            return f
        if residual * previous < 0:
            damping *= 0.5
        previous = residual
        f = max(0.0, f + damping * residual)
    raise ConvergenceError(
        f"SFA self-consistency at f_in={f_in} Hz did not converge in "
        f"{options.sfa_max_iter} iterations (last rate {f:.4f} Hz)"
    )


class TransferCurve(BaseModel):
    """Output rate against input rate, with the parameters that produced it."""

    model_config = ConfigDict(frozen=True)

    f_in: list[float]
    f_out: list[float]
    variant: Variant
    g_rec: float
    g_sfa: float
    f_bg: float
    sfa_mode: SfaMode = SfaMode.NONE
    # Steady-state SFA is an extension of the plain transfer function.
    reconstructed: bool = False

    _evaluator: Callable[[float], float] | None = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check_lengths(self) -> "TransferCurve":
        if len(self.f_in) != len(self.f_out):
            raise ValueError(
                f"Curve has {len(self.f_in)} input rates but {len(self.f_out)} output rates"
            )
        return self

    def evaluate(self, f: float) -> float:
        """Continuous evaluator; falls back to linear interpolation of the samples."""
        if self._evaluator is not None:
            return self._evaluator(f)
        return float(np.interp(f, self.f_in, self.f_out))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"f_in": self.f_in, "f_out": self.f_out, "variant": str(self.variant)})

    def to_csv(self, path: Path) -> Path:
        self.to_frame().to_csv(path, index=False)
        return path


def _check_grid(grid: Sequence[float]) -> np.ndarray:
    values = np.asarray(grid, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("Input-rate grid must be a non-empty sequence")
    if np.any(values < 0) or np.any(np.diff(values) <= 0):
        raise ValueError(f"Input-rate grid must be non-negative and increasing, got {grid}")
    return values


def transfer_curve(
    p: NeuronParams,
    net: NetworkConfig,
    grid: Sequence[float],
    variant: Variant = Variant.STANDARD,
    sfa_mode: SfaMode = SfaMode.NONE,
    *,
    options: MeanFieldOptions | None = None,
    hardware: HardwareConfig | None = None,
) -> TransferCurve:
    if variant is Variant.MEASURED:
        raise ValueError("Measured curves come from netsim runs, not the mean-field model")
    values = _check_grid(grid)

    def evaluator(f: float) -> float:
        return transfer_function(
            p, net, f, variant=variant, sfa_mode=sfa_mode, options=options, hardware=hardware
        )

    resolved = net.resolve(p)
    curve = TransferCurve(
        f_in=values.tolist(),
        f_out=[evaluator(f) for f in values],
        variant=variant,
        g_rec=resolved.g_hat_rec,
        g_sfa=resolved.g_sfa,
        f_bg=net.f_bg,
        sfa_mode=sfa_mode,
        reconstructed=sfa_mode is SfaMode.STEADY_STATE and resolved.g_sfa > 0,
    )
    curve._evaluator = evaluator
    logger.debug(
        f"Transfer curve {variant}: g_rec={curve.g_rec} nS, g_sfa={curve.g_sfa} nS, "
        f"{len(values)} points, max rate {max(curve.f_out):.2f} Hz"
    )
    return curve


def in_degree_band(
    p: NeuronParams,
    net: NetworkConfig,
    grid: Sequence[float],
    variant: Variant = Variant.STANDARD,
    *,
    sfa_mode: SfaMode = SfaMode.NONE,
    options: MeanFieldOptions | None = None,
    hardware: HardwareConfig | None = None,
) -> tuple[TransferCurve, TransferCurve]:
    """Transfer curves at one binomial standard deviation below and above the mean in-degrees."""
    spread_rec = math.sqrt(net.k_rec * (1.0 - net.p_rec))
    spread_bg = math.sqrt(net.k_bg * (1.0 - net.p_bg))
    curves = []
    for sign in (-1.0, 1.0):
        shifted = net.model_copy(
            update={
                "p_rec": min(1.0, max(0.0, (net.k_rec + sign * spread_rec) / net.N)),
                "p_bg": min(1.0, max(0.0, (net.k_bg + sign * spread_bg) / max(net.N_bg, 1))),
            }
        )
        curves.append(
            transfer_curve(
                p, shifted, grid, variant, sfa_mode, options=options, hardware=hardware
            )
        )
    return curves[0], curves[1]


class FixedPoint(BaseModel):
    rate: float
    stability: Stability
    slope: float


class FixedPointSet(BaseModel):
    points: list[FixedPoint] = []
    degenerate: bool = False

    @property
    def stable(self) -> list[FixedPoint]:
        return [point for point in self.points if point.stability is Stability.STABLE]


def _slope(curve: TransferCurve, f: float, step: float) -> float:
    lo = max(0.0, f - step)
    hi = f + step
    return (curve.evaluate(hi) - curve.evaluate(lo)) / (hi - lo)


def find_fixed_points(
    c: TransferCurve,
    *,
    xtol: float = 0.01,
    slope_step: float = 0.5,
    tangent_tol: float = 1e-3,
) -> FixedPointSet:
    """Intersections of the curve with the unity-gain line.

    Sign changes of f_out - f_in are refined with Brent's method on the
    curve's evaluator. A crossing whose slope is within ``tangent_tol`` of 1,
    or a grid point that touches the line without crossing it, is reported as
    degenerate. So is a curve that lies on the line everywhere.
    """
    f_in = np.asarray(c.f_in)
    diff = np.asarray(c.f_out) - f_in
    scale = max(1.0, float(np.max(np.abs(f_in))))
    on_line = np.abs(diff) <= 1e-9 * scale
    if on_line.all():
        return FixedPointSet(degenerate=True)

    def residual(f: float) -> float:
        return c.evaluate(f) - f

    points: list[FixedPoint] = []
    for i in range(len(f_in)):
        if on_line[i]:
            left = diff[i - 1] if i > 0 else None
            right = diff[i + 1] if i + 1 < len(f_in) else None
            touches = left is not None and right is not None and left * right > 0
            root = float(f_in[i])
        elif i + 1 < len(f_in) and not on_line[i + 1] and diff[i] * diff[i + 1] < 0:
            touches = False
            root = optimize.brentq(residual, f_in[i], f_in[i + 1], xtol=xtol)
        else:
            continue
        slope = _slope(c, root, slope_step)
        if touches or abs(slope - 1.0) < tangent_tol:
            stability = Stability.DEGENERATE
        else:
            stability = Stability.STABLE if slope < 1.0 else Stability.UNSTABLE
        points.append(FixedPoint(rate=root, stability=stability, slope=slope))

    degenerate = any(point.stability is Stability.DEGENERATE for point in points)
    logger.debug(f"Fixed points: {[(round(pt.rate, 2), str(pt.stability)) for pt in points]}")
    return FixedPointSet(points=points, degenerate=degenerate)
