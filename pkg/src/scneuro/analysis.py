"""Population-rate analysis: binning, burst detection and burst statistics.

A burst is a maximal run of bins whose mean rate per neuron is strictly
above the threshold; an inter-burst interval (IBI) is a maximal run at or
below it. Runs touching either end of the record are censored and left out
of both statistics.
"""

from collections.abc import Mapping, Sequence
from enum import StrEnum
from pathlib import Path
from typing import NamedTuple

import numpy as np
import pandas as pd

from loguru import logger
from pydantic import BaseModel, ConfigDict
from scipy import stats as scipy_stats

from scneuro.constants import BURST_BIN_MS, BURST_THRESHOLD_HZ, MIN_VALID_BURSTS, TICK_MS
from scneuro.exceptions import GridMismatchError
from scneuro.meanfield import TransferCurve

STATISTICS = ("mean_burst", "cv_burst", "mean_ibi", "cv_ibi")


class Regime(StrEnum):
    QUIESCENT = "quiescent"
    BURSTING = "bursting"
    UP_STATE = "up_state"


class BurstRuns(NamedTuple):
    """Interior runs as (start bin, length) rows, plus the record length in bins."""

    bursts: np.ndarray
    ibis: np.ndarray
    n_bins: int

    @property
    def edge_bins(self) -> int:
        return self.n_bins - int(self.bursts[:, 1].sum()) - int(self.ibis[:, 1].sum())


class BurstStatistics(BaseModel):
    model_config = ConfigDict(frozen=True)

    bin_width: float = BURST_BIN_MS
    threshold: float = BURST_THRESHOLD_HZ
    burst_lengths: list[int]
    ibis: list[int]
    mean_burst: float | None
    cv_burst: float | None
    mean_ibi: float | None
    cv_ibi: float | None
    n_bursts: int
    valid: bool
    mean_ibi_tau_sfa: float | None = None
    peak_rates: list[float] | None = None


def bin_rates(
    times: np.ndarray,
    N: int,
    bin_width: float = BURST_BIN_MS,
    *,
    n_ticks: int | None = None,
    tick: float = TICK_MS,
) -> np.ndarray:
    """Mean rate per neuron (Hz) in consecutive bins of ``bin_width`` ms.

    ``times`` are spike ticks. ``n_ticks`` fixes the record length; by
    default it ends with the last spike. A trailing partial bin is kept and
    normalised by the full bin width, so every spike is counted once.

    Raises:
        ValueError: the bin width is not positive or a spike lies at or
            beyond ``n_ticks``.
    """
    if bin_width <= 0:
        raise ValueError(f"Bin width must be positive, got {bin_width}")
    bin_ticks = round(bin_width / tick)
    times = np.asarray(times, dtype=np.int64)
    if n_ticks is None:
        n_ticks = int(times.max()) + 1 if times.size else 0
    elif times.size and times.max() >= n_ticks:
        raise ValueError(f"Spike at tick {times.max()} lies beyond a {n_ticks}-tick record")
    n_bins = -(-n_ticks // bin_ticks)
    counts = np.bincount(times // bin_ticks, minlength=n_bins)
    return counts / (N * bin_width * 1e-3)


def _runs(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    change = np.flatnonzero(np.diff(mask.astype(np.int8))) + 1
    starts = np.concatenate([[0], change])
    lengths = np.diff(np.concatenate([starts, [mask.size]]))
    return starts, lengths, mask[starts]


def detect_bursts(rates: np.ndarray, threshold: float = BURST_THRESHOLD_HZ) -> BurstRuns:
    if threshold <= 0:
        raise ValueError(f"Threshold must be positive, got {threshold}")
    rates = np.asarray(rates, dtype=float)
    empty = np.zeros((0, 2), dtype=np.int64)
    if rates.size == 0:
        return BurstRuns(empty, empty, 0)
    starts, lengths, above = _runs(rates > threshold)
    interior = np.zeros(starts.size, dtype=bool)
    interior[1:-1] = True
    rows = np.column_stack([starts, lengths]).astype(np.int64)
    return BurstRuns(rows[interior & above], rows[interior & ~above], rates.size)


def _cv(values: np.ndarray) -> float | None:
    if values.size == 0:
        return None
    mean = values.mean()
    return float(values.std() / mean)


def summarize(
    bursts: Sequence[int] | np.ndarray,
    ibis: Sequence[int] | np.ndarray,
    *,
    bin_width: float = BURST_BIN_MS,
    threshold: float = BURST_THRESHOLD_HZ,
    tau_sfa: float | None = None,
    peak_rates: Sequence[float] | None = None,
) -> BurstStatistics:
    """Means and coefficients of variation of burst lengths and IBIs, in bins.

    The CV uses the population standard deviation. The statistics count as
    valid only with more than 50 bursts.
    """
    lengths = np.asarray(bursts, dtype=np.int64)
    gaps = np.asarray(ibis, dtype=np.int64)
    mean_ibi = float(gaps.mean()) if gaps.size else None
    ibi_tau = None
    if mean_ibi is not None and tau_sfa:
        ibi_tau = mean_ibi * bin_width / tau_sfa
    return BurstStatistics(
        bin_width=bin_width,
        threshold=threshold,
        burst_lengths=lengths.tolist(),
        ibis=gaps.tolist(),
        mean_burst=float(lengths.mean()) if lengths.size else None,
        cv_burst=_cv(lengths),
        mean_ibi=mean_ibi,
        cv_ibi=_cv(gaps),
        n_bursts=int(lengths.size),
        valid=lengths.size > MIN_VALID_BURSTS,
        mean_ibi_tau_sfa=ibi_tau,
        peak_rates=list(peak_rates) if peak_rates is not None else None,
    )


def burst_peaks(rates: np.ndarray, runs: BurstRuns) -> np.ndarray:
    """Highest binned rate inside every detected burst."""
    rates = np.asarray(rates, dtype=float)
    return np.array([rates[start : start + length].max() for start, length in runs.bursts])


def burst_statistics(
    times: np.ndarray,
    N: int,
    n_ticks: int,
    *,
    bin_width: float = BURST_BIN_MS,
    threshold: float = BURST_THRESHOLD_HZ,
    tau_sfa: float | None = None,
) -> tuple[np.ndarray, BurstStatistics]:
    """Binned rates and burst statistics of one spike record."""
    rates = bin_rates(times, N, bin_width, n_ticks=n_ticks)
    runs = detect_bursts(rates, threshold)
    summary = summarize(
        runs.bursts[:, 1],
        runs.ibis[:, 1],
        bin_width=bin_width,
        threshold=threshold,
        tau_sfa=tau_sfa,
        peak_rates=burst_peaks(rates, runs).tolist(),
    )
    logger.debug(f"{summary.n_bursts} bursts over {runs.n_bins} bins (valid={summary.valid})")
    return rates, summary


def classify_regime(
    rates: np.ndarray, threshold: float = BURST_THRESHOLD_HZ, up_fraction: float = 0.5
) -> Regime:
    """Quiescent without supra-threshold bins, up-state dominant when more
    than ``up_fraction`` of the bins lie above threshold, bursting otherwise."""
    above = np.asarray(rates) > threshold
    if not above.any():
        return Regime.QUIESCENT
    if above.mean() > up_fraction:
        return Regime.UP_STATE
    return Regime.BURSTING


def rmse(a: TransferCurve, b: TransferCurve) -> float:
    """Root-mean-square difference (Hz) of two curves on the same grid.

    Raises:
        GridMismatchError: the input-rate grids differ.
    """
    if len(a.f_in) != len(b.f_in) or not np.allclose(a.f_in, b.f_in, rtol=0, atol=1e-9):
        raise GridMismatchError(
            f"Cannot compare curves on different grids: {a.f_in} vs {b.f_in}"
        )
    diff = np.asarray(a.f_out) - np.asarray(b.f_out)
    return float(np.sqrt(np.mean(diff**2)))


class PhasePlane(BaseModel):
    """Burst statistics over a (g_SFA, g_rec) grid; rows g_rec, columns g_SFA."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    tables: dict[str, pd.DataFrame]
    valid: pd.DataFrame

    def masked(self, name: str) -> pd.DataFrame:
        """Table with invalid cells set to NaN."""
        return self.tables[name].where(self.valid)

    def to_csv(self, out_dir: Path) -> list[Path]:
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        for name in STATISTICS:
            path = out_dir / f"phase_plane_{name}.csv"
            self.masked(name).to_csv(path)
            paths.append(path)
        path = out_dir / "phase_plane_valid.csv"
        self.valid.to_csv(path)
        paths.append(path)
        return paths


def phase_plane(cells: Mapping[tuple[float, float], BurstStatistics]) -> PhasePlane:
    """Tabulate per-cell statistics keyed by (g_sfa, g_rec)."""
    rows = [
        {"g_sfa": g_sfa, "g_rec": g_rec, "valid": s.valid}
        | {name: getattr(s, name) for name in STATISTICS}
        for (g_sfa, g_rec), s in cells.items()
    ]
    frame = pd.DataFrame(rows)
    tables = {
        name: frame.pivot(index="g_rec", columns="g_sfa", values=name).astype(float)
        for name in STATISTICS
    }
    valid = frame.pivot(index="g_rec", columns="g_sfa", values="valid").eq(True)
    return PhasePlane(tables=tables, valid=valid)


class LinearFit(BaseModel):
    slope: float
    intercept: float
    r_value: float


def boundary_points(regimes: Mapping[tuple[float, float], Regime]) -> list[tuple[float, float]]:
    """Per g_SFA column, the g_rec midway between the last bursting and first up-state cell."""
    columns: dict[float, list[tuple[float, Regime]]] = {}
    for (g_sfa, g_rec), regime in regimes.items():
        columns.setdefault(g_sfa, []).append((g_rec, regime))
    points = []
    for g_sfa, column in sorted(columns.items()):
        column.sort()
        for (low, below), (high, above) in zip(column, column[1:], strict=False):
            if below is Regime.BURSTING and above is Regime.UP_STATE:
                points.append((g_sfa, 0.5 * (low + high)))
                break
    return points


def fit_boundary(points: Sequence[tuple[float, float]]) -> LinearFit:
    """Least-squares line g_rec = slope * g_sfa + intercept through boundary points."""
    if len(points) < 2:
        raise ValueError(f"Need at least two boundary points, got {len(points)}")
    x, y = np.asarray(points, dtype=float).T
    result = scipy_stats.linregress(x, y)
    return LinearFit(slope=result.slope, intercept=result.intercept, r_value=result.rvalue)
