"""Seeded uniform sampling from the bins with exact size control.

The final coreset takes an equal fraction from every bin: per-bin quotas come
from largest-remainder apportionment of the total (floors of the exact
proportional shares, remainders distributed by descending fractional part,
ties to the lower bin index). Within a bin, a partial Fisher-Yates shuffle
over the bin's indices in ascending order draws the quota without
replacement. One SplitMix64 stream, consumed across bins in bin order, makes
the result bit-reproducible across implementations; the modulo bias of the
draw is negligible for any realistic bin size.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError, IoError, PartitionError
from .selector import BinPartition

_MASK = (1 << 64) - 1


class SplitMix64:
    """The SplitMix64 generator, normative for all sampling in this package."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)


def round_half_up(x: float) -> int:
    """Round to the nearest integer, halves away from zero toward +inf."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class Coreset:
    """Selected sample indices plus the provenance needed to reproduce them."""

    indices: tuple[int, ...]
    n_total: int
    fraction: float
    seed: int
    config_fingerprint: str = ""

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError(f"fraction must be in (0, 1], got {self.fraction}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must be a u64, got {self.seed}")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("indices must be strictly increasing")
        if idx and (idx[0] < 0 or idx[-1] >= self.n_total):
            raise ValueError("indices out of range")
        expected = round_half_up(self.fraction * self.n_total)
        if len(idx) != expected:
            raise ValueError(
                f"coreset has {len(idx)} indices, fraction implies {expected}"
            )


def quotas(bin_sizes: list[int], fraction: float) -> list[int]:
    """Largest-remainder apportionment of the coreset total across bins.

    The total is round-half-up(fraction * sum(sizes)); shares are computed in
    exact integer arithmetic, so no float representation artifact can flip a
    floor or a remainder comparison.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if not bin_sizes or any(s < 1 for s in bin_sizes):
        raise ValueError("bin sizes must all be >= 1")
    total_size = sum(bin_sizes)
    total = round_half_up(fraction * total_size)
    assert total <= total_size, "quota total exceeds population"

    floors = [total * s // total_size for s in bin_sizes]
    remainders = [total * s % total_size for s in bin_sizes]
    leftover = total - sum(floors)
    order = sorted(range(len(bin_sizes)), key=lambda i: (-remainders[i], i))
    out = list(floors)
    for i in order[:leftover]:
        out[i] += 1
    assert all(q <= s for q, s in zip(out, bin_sizes)), "quota exceeds bin size"
    return out


def sample_coreset(
    partition: BinPartition,
    fraction: float,
    seed: int,
    config_fingerprint: str = "",
) -> Coreset:
    """Draw quota_k elements uniformly from every bin, one PRNG stream.

    Bin k's candidates are its indices in ascending order; step i of the
    partial Fisher-Yates shuffle swaps position i with position
    i + (next() mod (m - i)). The union of per-bin picks is returned sorted.
    """
    if not isinstance(partition, BinPartition):
        raise PartitionError("expected a BinPartition")
    per_bin = quotas([len(b) for b in partition.bins], fraction)
    rng = SplitMix64(seed)
    picks: list[int] = []
    for bin_indices, quota in zip(partition.bins, per_bin):
        arr = sorted(bin_indices)
        m = len(arr)
        for i in range(quota):
            j = i + rng.next() % (m - i)
            arr[i], arr[j] = arr[j], arr[i]
        picks.extend(arr[:quota])
    return Coreset(
        indices=tuple(sorted(picks)),
        n_total=partition.n_total,
        fraction=fraction,
        seed=seed,
        config_fingerprint=config_fingerprint,
    )


def coreset_to_json(coreset: Coreset) -> str:
    doc = {
        "n": coreset.n_total,
        "fraction": coreset.fraction,
        "seed": coreset.seed,
        "indices": list(coreset.indices),
    }
    if coreset.config_fingerprint:
        doc["config_fingerprint"] = coreset.config_fingerprint
    return json.dumps(doc, sort_keys=True, separators=(",", ": ")) + "\n"


def coreset_from_json(text: str) -> Coreset:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid coreset JSON: {exc}") from exc
    return Coreset(
        indices=tuple(doc["indices"]),
        n_total=int(doc["n"]),
        fraction=float(doc["fraction"]),
        seed=int(doc["seed"]),
        config_fingerprint=doc.get("config_fingerprint", ""),
    )


def write_coreset(coreset: Coreset, path) -> None:
    try:
        Path(path).write_text(coreset_to_json(coreset), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_coreset(path) -> Coreset:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return coreset_from_json(text)


def write_coreset_indices(coreset: Coreset, path) -> None:
    """Newline-delimited index list, one sample index per line."""
    try:
        Path(path).write_text(
            "".join(f"{i}\n" for i in coreset.indices), encoding="utf-8"
        )
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
