"""Reproducible Poisson spike trains on the 0.1 ms tick grid.

Every (seed, stream, source, segment) key owns an independent Philox stream,
so a train never depends on how many other sources exist or on the order in
which they are generated.
"""

import numpy as np

from scneuro.constants import STREAM_BACKGROUND, TICK_MS


def source_rng(seed: int, stream: int, source_id: int, segment: int = 0) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence([seed, stream, source_id, segment]))
    )


def generate_poisson(
    rate: float,
    duration: float,
    seed: int,
    source_id: int,
    *,
    stream: int = STREAM_BACKGROUND,
    segment: int = 0,
    tick: float = TICK_MS,
) -> np.ndarray:
    """Sorted spike ticks of a homogeneous Poisson process.

    ``duration`` is in ms. The spike count is Poisson(rate * duration) and
    the spikes fall uniformly on the ticks of the window, so two spikes may
    share a tick.
    """
    if rate < 0:
        raise ValueError(f"Rate must be non-negative, got {rate}")
    if duration < 0:
        raise ValueError(f"Duration must be non-negative, got {duration}")
    n_ticks = round(duration / tick)
    if rate == 0 or n_ticks == 0:
        return np.zeros(0, dtype=np.int64)
    rng = source_rng(seed, stream, source_id, segment)
    count = rng.poisson(rate * duration * 1e-3)
    return np.sort(rng.integers(0, n_ticks, size=count, dtype=np.int64))


def population_schedule(
    source_ids: np.ndarray,
    rate: float,
    duration: float,
    seed: int,
    *,
    start_tick: int = 0,
    stream: int = STREAM_BACKGROUND,
    segment: int = 0,
    tick: float = TICK_MS,
) -> tuple[np.ndarray, np.ndarray]:
    """Merged trains of many sources, ordered by tick and then source id."""
    ticks, sources = [], []
    for source in source_ids:
        train = generate_poisson(
            rate, duration, seed, int(source), stream=stream, segment=segment, tick=tick
        )
        ticks.append(train + start_tick)
        sources.append(np.full(train.size, source, dtype=np.int64))
    if not ticks:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    ticks_all = np.concatenate(ticks)
    sources_all = np.concatenate(sources)
    order = np.lexsort((sources_all, ticks_all))
    return ticks_all[order], sources_all[order]
