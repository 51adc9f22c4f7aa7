"""Shared fixtures and self-contained reference oracles.

The reference implementations below deliberately share no code with the
package: gains are recomputed from the two-sum definition at every step, so
they can vouch for the incremental path.
"""

from __future__ import annotations

import numpy as np
import pytest

from mmcoreset.aggregate import FeatureMatrix
from mmcoreset.store import EmbeddingTensor


def make_tensor(name: str, values) -> EmbeddingTensor:
    arr = np.asarray(values, dtype=np.float64)
    return EmbeddingTensor.from_values(name, arr)


def features_1d(values) -> FeatureMatrix:
    arr = np.asarray(values, dtype=np.float64).reshape(-1, 1)
    return FeatureMatrix.from_values(arr, "test-1d")


@pytest.fixture
def line_fixture() -> FeatureMatrix:
    return FeatureMatrix.from_values(
        np.array([[-1.0, -1.0], [0.0, 0.0], [1.0, 1.0]]), "line"
    )


@pytest.fixture
def worked_1d() -> FeatureMatrix:
    return features_1d([0.0, 1.0, 2.0, 10.0])


def pairwise_sqdist(x: np.ndarray) -> np.ndarray:
    """Dense squared-distance matrix, plain broadcasting."""
    diff = x[:, None, :] - x[None, :, :]
    return (diff ** 2).sum(axis=2)


def reference_gain(x: np.ndarray, selected, universe, candidate) -> float:
    """The two-sum gain definition, scalar loops only."""
    total = 0.0
    for p in selected:
        total += float(((x[p] - x[candidate]) ** 2).sum())
    for p in universe:
        if p in set(selected):
            continue
        total -= float(((x[p] - x[candidate]) ** 2).sum())
    return total


def reference_schedule(n: int, num_bins: int) -> list[int]:
    base, extra = divmod(n, num_bins)
    return [base + 1 if i < extra else base for i in range(num_bins)]


def reference_partition(x: np.ndarray, num_bins: int):
    """Greedy bin construction recomputing every gain from the double sum.

    Returns (bins, pick_gains) with bins in selection order. Ties at the
    argmax go to the lowest sample index.
    """
    n = x.shape[0]
    d2 = pairwise_sqdist(x)
    remaining = list(range(n))
    bins, all_gains = [], []
    for size in reference_schedule(n, num_bins):
        pool = sorted(remaining)
        picks: list[int] = []
        gains: list[float] = []
        for _ in range(size):
            cand = [i for i in pool if i not in picks]
            best, best_gain = None, None
            for c in cand:
                g = sum(d2[p, c] for p in picks) - sum(
                    d2[p, c] for p in pool if p not in picks
                )
                if best is None or g > best_gain:
                    best, best_gain = c, g
            picks.append(best)
            gains.append(best_gain)
        bins.append(picks)
        all_gains.append(gains)
        remaining = [i for i in remaining if i not in picks]
    return bins, all_gains


def reference_splitmix64(seed: int, count: int) -> list[int]:
    """Published SplitMix64 algorithm, reimplemented for cross-checking."""
    mask = (1 << 64) - 1
    state = seed & mask
    out = []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & mask
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        out.append(z ^ (z >> 31))
    return out
