"""Greedy partitioning of the dataset into N disjoint bins by submodular gain.

The gain of adding candidate x to the bin under construction is

    P(x) = sum_{p in S} ||f(p) - f(x)||^2  -  sum_{p in D_k \\ S} ||f(p) - f(x)||^2

where D_k is the residual pool when bin k starts (everything not yet assigned
to an earlier bin) and S is the current bin only. Each bin is filled to its
scheduled size by repeatedly taking argmax P, ties to the lowest sample index.

Two modes produce identical partitions: ``oracle`` recomputes both sums from
scratch at every step, ``accelerated`` exploits the identity

    P(x) = 2 * A(x) - T(x),   A(x) = sum_{p in S},   T(x) = sum_{p in D_k}

maintaining A incrementally (one new squared distance per candidate per pick)
and computing T once per bin, which drops the per-step cost from O(n^2 d) to
O(n d) with O(n) extra memory. All gain arithmetic is float64 with fixed
accumulation order, so partitions are reproducible regardless of parallelism.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .aggregate import FeatureMatrix
from .errors import ConfigError, IoError, PartitionError

# Precomputing the full pairwise-distance matrix (oracle mode only) is allowed
# up to this many samples; past it the O(n^2) memory is not worth the speed.
DISTANCE_CACHE_MAX_N = 8192

MODES = ("oracle", "accelerated")


@dataclass(frozen=True)
class SelectorConfig:
    num_bins: int
    mode: str = "accelerated"

    def __post_init__(self):
        if self.num_bins < 1:
            raise ConfigError(f"num_bins must be >= 1, got {self.num_bins}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")


def bin_sizes(n: int, num_bins: int) -> list[int]:
    """Scheduled bin sizes: the first n mod N bins take the extra element."""
    if not 1 <= num_bins <= n:
        raise ConfigError(f"need 1 <= num_bins <= n, got num_bins={num_bins}, n={n}")
    base, extra = divmod(n, num_bins)
    return [base + 1 if i < extra else base for i in range(num_bins)]


@dataclass(frozen=True)
class BinPartition:
    """N disjoint, ordered index bins covering all n_total samples.

    Within-bin order is the greedy selection order. Sizes must follow the
    schedule of :func:`bin_sizes`.
    """

    bins: tuple[tuple[int, ...], ...]
    n_total: int

    def __post_init__(self):
        bins = tuple(tuple(int(i) for i in b) for b in self.bins)
        object.__setattr__(self, "bins", bins)
        if not bins:
            raise PartitionError("partition needs at least one bin")
        flat = [i for b in bins for i in b]
        if len(flat) != self.n_total or set(flat) != set(range(self.n_total)):
            raise PartitionError(
                "bins must be disjoint and cover exactly 0..n_total-1"
            )
        try:
            expected = bin_sizes(self.n_total, len(bins))
        except ConfigError as exc:
            raise PartitionError(str(exc)) from exc
        actual = [len(b) for b in bins]
        if actual != expected:
            raise PartitionError(f"bin sizes {actual} violate the schedule {expected}")

    @property
    def num_bins(self) -> int:
        return len(self.bins)


@dataclass
class GainState:
    """Incremental gain bookkeeping for one bin's construction.

    ``pool`` is the bin's fixed candidate universe (ascending sample indices),
    ``totals`` the once-per-bin T, ``accum`` the running A over the current
    bin, and gains are available as ``2*accum - totals``.
    """

    pool: np.ndarray
    feats: np.ndarray
    totals: np.ndarray
    accum: np.ndarray
    alive: np.ndarray
    current_bin: list[int] = field(default_factory=list)

    def gains(self) -> np.ndarray:
        return 2.0 * self.accum - self.totals

    def candidates(self) -> np.ndarray:
        return self.pool[self.alive.astype(bool)]


def make_gain_state(features: FeatureMatrix, pool) -> GainState:
    """Initialize per-candidate totals T for the pool (A starts at zero)."""
    pool = np.asarray(sorted(int(i) for i in pool), dtype=np.int64)
    if pool.size == 0:
        raise IndexError("pool must not be empty")
    if pool[0] < 0 or pool[-1] >= features.n or np.unique(pool).size != pool.size:
        raise IndexError("pool must be unique indices into the feature matrix")
    feats = np.ascontiguousarray(features.values[pool])
    totals = kernels.pool_totals(feats)
    return GainState(
        pool=pool,
        feats=feats,
        totals=totals,
        accum=np.zeros(pool.size, dtype=np.float64),
        alive=np.ones(pool.size, dtype=np.uint8),
    )


def gain_state_update(state: GainState, newly_selected: int) -> GainState:
    """Fold one pick into the running A; cost O(|pool| * d).

    Every remaining candidate gains the squared distance to the new pick.
    Updates in place and returns the same state.
    """
    pos = int(np.searchsorted(state.pool, newly_selected))
    if pos >= state.pool.size or state.pool[pos] != newly_selected:
        raise IndexError(f"index {newly_selected} is not in the pool")
    if not state.alive[pos]:
        raise IndexError(f"index {newly_selected} was already selected")
    kernels.sqdist_accumulate(state.feats, pos, state.accum)
    state.alive[pos] = 0
    state.current_bin.append(int(newly_selected))
    return state


def compute_gain_direct(features: FeatureMatrix, selected, universe, candidate: int) -> float:
    """Evaluate the gain from its two distance sums, no incremental state.

    Sums accumulate in ascending index order. The candidate's own term in the
    second sum is zero, so its presence in ``universe`` is harmless.
    """
    sel = sorted(int(i) for i in selected)
    uni = sorted(int(i) for i in universe)
    uni_set = set(uni)
    sel_set = set(sel)
    candidate = int(candidate)
    if candidate not in uni_set or candidate in sel_set:
        raise IndexError(f"candidate {candidate} must be in universe minus selected")
    if not sel_set <= uni_set:
        raise IndexError("selected must be a subset of universe")

    x = features.values[candidate]
    gain = 0.0
    for p in sel:
        diff = features.values[p] - x
        gain += float(diff @ diff)
    for p in uni:
        if p in sel_set:
            continue
        diff = features.values[p] - x
        gain -= float(diff @ diff)
    return gain


@dataclass
class StepSnapshot:
    """Gain landscape at the moment of one greedy pick."""

    bin_index: int
    candidates: np.ndarray  # alive sample indices, ascending
    gains: np.ndarray  # gain per candidate, aligned with candidates
    chosen: int


@dataclass
class SelectionTrace:
    """Recorded evidence of the greedy trajectory, bin by bin."""

    bin_pools: list[np.ndarray]  # candidate universe per bin, ascending
    bin_totals: list[np.ndarray]  # T per pool entry, aligned with bin_pools
    pick_gains: list[list[float]]  # gain of each pick, in selection order
    steps: list[StepSnapshot] | None = None


def select_bins(features: FeatureMatrix, config: SelectorConfig) -> BinPartition:
    """Partition all samples into ``config.num_bins`` greedy bins."""
    partition, _ = select_bins_traced(features, config)
    return partition


def select_bins_traced(
    features: FeatureMatrix, config: SelectorConfig, record_steps: bool = False
) -> tuple[BinPartition, SelectionTrace]:
    """Like :func:`select_bins`, also returning the gain trace.

    ``record_steps`` additionally snapshots every candidate's gain at every
    pick (meant for small instances; memory grows with n^2).
    """
    n = features.n
    sizes = bin_sizes(n, config.num_bins)  # raises ConfigError if num_bins > n
    if config.mode == "accelerated":
        return _select_accelerated(features, sizes, record_steps)
    return _select_oracle(features, sizes, record_steps)


def _select_accelerated(features, sizes, record_steps):
    n = features.n
    trace = SelectionTrace([], [], [], [] if record_steps else None)
    remaining = np.arange(n, dtype=np.int64)
    bins = []
    for bin_index, size in enumerate(sizes):
        state = make_gain_state(features, remaining)
        trace.bin_pools.append(state.pool.copy())
        trace.bin_totals.append(state.totals.copy())
        picks: list[int] = []
        gains: list[float] = []
        for _ in range(size):
            if record_steps:
                mask = state.alive.astype(bool)
                snapshot = StepSnapshot(
                    bin_index, state.pool[mask].copy(), state.gains()[mask], -1
                )
            pos, gain = kernels.best_gain(state.accum, state.totals, state.alive)
            chosen = int(state.pool[pos])
            if record_steps:
                snapshot.chosen = chosen
                trace.steps.append(snapshot)
            picks.append(chosen)
            gains.append(float(gain))
            gain_state_update(state, chosen)
        bins.append(tuple(picks))
        trace.pick_gains.append(gains)
        keep = np.ones(remaining.size, dtype=bool)
        keep[np.searchsorted(remaining, picks)] = False
        remaining = remaining[keep]
    return BinPartition(tuple(bins), n), trace


def _select_oracle(features, sizes, record_steps):
    """Reference mode: every gain recomputed from the two sums at every step."""
    n = features.n
    x = features.values
    cache = None
    if n <= DISTANCE_CACHE_MAX_N:
        cache = np.empty((n, n), dtype=np.float64)
        for i in range(n):
            diff = x - x[i]
            cache[i] = np.einsum("ij,ij->i", diff, diff)

    def sqdist_row(i: int, cols: np.ndarray) -> np.ndarray:
        if cache is not None:
            return cache[i, cols]
        diff = x[cols] - x[i]
        return np.einsum("ij,ij->i", diff, diff)

    trace = SelectionTrace([], [], [], [] if record_steps else None)
    remaining = list(range(n))
    bins = []
    for bin_index, size in enumerate(sizes):
        pool = np.asarray(sorted(remaining), dtype=np.int64)
        totals = np.zeros(pool.size, dtype=np.float64)
        for p in pool:
            totals += sqdist_row(int(p), pool)
        trace.bin_pools.append(pool.copy())
        trace.bin_totals.append(totals)
        alive = np.ones(pool.size, dtype=bool)
        picks: list[int] = []
        gains: list[float] = []
        for _ in range(size):
            cand = pool[alive]
            gain_vec = np.zeros(cand.size, dtype=np.float64)
            for p in picks:  # selection order; S is small
                gain_vec += sqdist_row(p, cand)
            for p in cand:  # ascending; candidate's own term is zero
                gain_vec -= sqdist_row(int(p), cand)
            best = int(np.argmax(gain_vec))  # first max = lowest sample index
            chosen = int(cand[best])
            if record_steps:
                trace.steps.append(
                    StepSnapshot(bin_index, cand.copy(), gain_vec, chosen)
                )
            picks.append(chosen)
            gains.append(float(gain_vec[best]))
            alive[np.searchsorted(pool, chosen)] = False
        bins.append(tuple(picks))
        trace.pick_gains.append(gains)
        remaining = [i for i in remaining if i not in set(picks)]
    return BinPartition(tuple(bins), n), trace


def partition_to_json(partition: BinPartition, config_fingerprint: str | None = None) -> str:
    doc = {
        "n": partition.n_total,
        "num_bins": partition.num_bins,
        "bins": [list(b) for b in partition.bins],
    }
    if config_fingerprint is not None:
        doc["config_fingerprint"] = config_fingerprint
    return json.dumps(doc, sort_keys=True, separators=(",", ": ")) + "\n"


def partition_from_json(text: str) -> BinPartition:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PartitionError(f"invalid partition JSON: {exc}") from exc
    try:
        return BinPartition(tuple(tuple(b) for b in doc["bins"]), int(doc["n"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise PartitionError(f"partition JSON malformed: {exc}") from exc


def write_partition(partition: BinPartition, path, config_fingerprint: str | None = None) -> None:
    try:
        Path(path).write_text(partition_to_json(partition, config_fingerprint), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_partition(path) -> BinPartition:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return partition_from_json(text)
