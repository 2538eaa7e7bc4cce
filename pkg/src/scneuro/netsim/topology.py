"""Fan-out tables in compressed sparse row form.

Source ids are laid out as: neurons [0, N), background sources, stimulus
sources, external (pulse-io) sources. Each source fans out to (target
neuron, synapse kind) pairs and carries up to four axonal delays.
"""

from dataclasses import dataclass

import numpy as np

from loguru import logger

from scneuro.config import Mode, NetworkConfig
from scneuro.constants import MAX_DELAYS, MAX_FANOUT, SYNAPSE_KINDS

TOPOLOGY_STREAM = 0

REC = SYNAPSE_KINDS.index("rec")
BG = SYNAPSE_KINDS.index("bg")


@dataclass(frozen=True, eq=False)
class Topology:
    n_neurons: int
    n_background: int
    n_stimulus: int
    n_external: int
    indptr: np.ndarray
    targets: np.ndarray
    kinds: np.ndarray
    delays: np.ndarray

    def __post_init__(self):
        n_sources = self.n_neurons + self.n_background + self.n_stimulus + self.n_external
        if self.indptr.shape != (n_sources + 1,):
            raise ValueError(f"indptr must have {n_sources + 1} entries, got {self.indptr.shape}")
        if self.delays.ndim != 2 or self.delays.shape[0] != n_sources:
            raise ValueError(f"Expected one delay row per source, got shape {self.delays.shape}")
        if not 1 <= self.delays.shape[1] <= MAX_DELAYS:
            raise ValueError(f"Expected 1 to {MAX_DELAYS} delays per source")
        if self.delays.size and self.delays.min() < 1:
            raise ValueError("Delays must be at least one tick")
        widest = int(np.diff(self.indptr).max(initial=0))
        if widest > MAX_FANOUT:
            raise ValueError(f"Fan-out of {widest} targets exceeds the limit of {MAX_FANOUT}")

    @classmethod
    def from_edges(
        cls,
        sources: np.ndarray,
        targets: np.ndarray,
        kinds: np.ndarray,
        *,
        n_neurons: int,
        n_background: int = 0,
        n_stimulus: int = 0,
        n_external: int = 0,
        delays: tuple[int, ...] | np.ndarray = (1,),
    ) -> "Topology":
        """Build the table from an edge list; edges keep their order within a source.

        ``delays`` is either one delay set shared by every source or a
        (n_sources, copies) array with a row per source.
        """
        n_sources = n_neurons + n_background + n_stimulus + n_external
        sources = np.asarray(sources, dtype=np.int64)
        if sources.size and (sources.min() < 0 or sources.max() >= n_sources):
            raise ValueError(f"Edge source outside [0, {n_sources})")
        order = np.argsort(sources, kind="stable")
        counts = np.bincount(sources, minlength=n_sources)
        indptr = np.zeros(n_sources + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return cls(
            n_neurons=n_neurons,
            n_background=n_background,
            n_stimulus=n_stimulus,
            n_external=n_external,
            indptr=indptr,
            targets=np.asarray(targets, dtype=np.int64)[order],
            kinds=np.asarray(kinds, dtype=np.int8)[order],
            delays=_delay_table(delays, n_sources),
        )

    @property
    def n_sources(self) -> int:
        return len(self.indptr) - 1

    @property
    def background_ids(self) -> np.ndarray:
        start = self.n_neurons
        return np.arange(start, start + self.n_background)

    @property
    def stimulus_ids(self) -> np.ndarray:
        start = self.n_neurons + self.n_background
        return np.arange(start, start + self.n_stimulus)

    @property
    def external_ids(self) -> np.ndarray:
        start = self.n_neurons + self.n_background + self.n_stimulus
        return np.arange(start, start + self.n_external)

    @property
    def max_delay(self) -> int:
        return int(self.delays.max())

    def fan_out(self, source: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[source], self.indptr[source + 1]
        return self.targets[lo:hi], self.kinds[lo:hi]

    def in_degree(self, kind: str) -> np.ndarray:
        """Realized in-degree per neuron for one synapse kind."""
        mask = self.kinds == SYNAPSE_KINDS.index(kind)
        return np.bincount(self.targets[mask], minlength=self.n_neurons)


def _delay_table(delays: tuple[int, ...] | np.ndarray, n_sources: int) -> np.ndarray:
    table = np.asarray(delays, dtype=np.int64)
    if table.ndim == 1:
        return np.tile(table, (n_sources, 1))
    return table


def _random_fan_out(
    rng: np.random.Generator, n_sources: int, n_targets: int, p: float, exclude_self: bool
) -> tuple[np.ndarray, np.ndarray]:
    """Each potential edge independently with probability p."""
    pool = n_targets - 1 if exclude_self else n_targets
    counts = rng.binomial(pool, p, size=n_sources) if pool > 0 else np.zeros(n_sources, int)
    sources, targets = [], []
    for source, count in enumerate(counts):
        chosen = np.sort(rng.choice(pool, size=count, replace=False))
        if exclude_self:
            chosen += chosen >= source
        sources.append(np.full(count, source, dtype=np.int64))
        targets.append(chosen.astype(np.int64))
    if not sources:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    return np.concatenate(sources), np.concatenate(targets)


def source_delays(net: NetworkConfig, n_sources: int) -> np.ndarray:
    """Delay table with the network's per-neuron overrides applied."""
    table = _delay_table(net.delays, n_sources)
    for neuron_id, delays in net.neuron_delays.items():
        table[neuron_id] = delays
    return table


def build_topology(net: NetworkConfig, seed: int | None = None, *, n_external: int = 0) -> Topology:
    """Random connectivity for the configured experiment mode.

    closed_loop: recurrent edges with p_rec (no autapses) plus background
    edges with p_bg. open_loop: the same recurrent pattern is drawn but
    attached to stimulus sources, one per neuron, so recurrence is cut.
    single_neuron: every neuron receives exactly round(k_rec) stimulus and
    round(k_bg) background inputs from private sources, or from one shared
    set when ``shared_stimulus`` is set. External source i drives neuron
    i mod N on the background synapse.

    Raises:
        ValueError: the expected fan-out exceeds the routing limit.
    """
    seed = net.seed if seed is None else seed
    N = net.N
    for label, expected in (("recurrent", N * net.p_rec), ("background", N * net.p_bg)):
        if expected > MAX_FANOUT:
            raise ValueError(
                f"Expected {label} fan-out {expected:.0f} exceeds the limit of {MAX_FANOUT}"
            )
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, TOPOLOGY_STREAM])))

    if net.mode is Mode.SINGLE_NEURON:
        k_rec, k_bg = round(net.k_rec), round(net.k_bg)
        if net.shared_stimulus:
            n_stim, n_bg = k_rec, k_bg
            stim_src = np.repeat(np.arange(k_rec), N)
            stim_tgt = np.tile(np.arange(N), k_rec)
            bg_src = np.repeat(np.arange(k_bg), N)
            bg_tgt = np.tile(np.arange(N), k_bg)
        else:
            n_stim, n_bg = N * k_rec, N * k_bg
            stim_src, stim_tgt = np.arange(n_stim), np.repeat(np.arange(N), k_rec)
            bg_src, bg_tgt = np.arange(n_bg), np.repeat(np.arange(N), k_bg)
        sources = [N + bg_src, N + n_bg + stim_src]
        targets = [bg_tgt, stim_tgt]
        kinds = [np.full(bg_src.size, BG), np.full(stim_src.size, REC)]
    else:
        n_bg = net.N_bg
        rec_src, rec_tgt = _random_fan_out(rng, N, N, net.p_rec, exclude_self=True)
        bg_src, bg_tgt = _random_fan_out(rng, n_bg, N, net.p_bg, exclude_self=False)
        if net.mode is Mode.OPEN_LOOP:
            n_stim = N
            rec_src = rec_src + N + n_bg
        else:
            n_stim = 0
        sources = [rec_src, N + bg_src]
        targets = [rec_tgt, bg_tgt]
        kinds = [np.full(rec_src.size, REC), np.full(bg_src.size, BG)]

    ext = np.arange(n_external)
    sources.append(N + n_bg + n_stim + ext)
    targets.append(ext % N)
    kinds.append(np.full(n_external, BG))

    topology = Topology.from_edges(
        np.concatenate(sources),
        np.concatenate(targets),
        np.concatenate(kinds),
        n_neurons=N,
        n_background=n_bg,
        n_stimulus=n_stim,
        n_external=n_external,
        delays=source_delays(net, N + n_bg + n_stim + n_external),
    )
    logger.info(
        f"Topology ({net.mode}): {N} neurons, {topology.targets.size} edges, "
        f"mean in-degree rec={topology.in_degree('rec').mean():.2f} "
        f"bg={topology.in_degree('bg').mean():.2f}"
    )
    return topology
