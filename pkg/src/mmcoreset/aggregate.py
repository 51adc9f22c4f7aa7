"""Collapse each sample's multimodal token set into one feature vector.

Three strategies: ``concat`` flattens every token of every modality in
modality order; ``mean`` and ``sum`` reduce token-wise over the pooled token
list (all modalities must share the embedding width d). For mean/sum the
accumulation runs over modalities in sorted-name order, so reordering a
manifest cannot change the result even at the bit level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .store import EmbeddingTensor, MultimodalDataset, _check_finite

KINDS = ("concat", "mean", "sum")


@dataclass(frozen=True)
class AggregationStrategy:
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class FeatureMatrix:
    """Per-sample feature vectors (n x d) with a provenance label."""

    n: int
    d: int
    values: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.size != self.n * self.d:
            raise ValueError(f"value count {arr.size} != n*d = {self.n * self.d}")
        arr = np.ascontiguousarray(arr.reshape(self.n, self.d))
        _check_finite(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_values(cls, values: np.ndarray, provenance: str = "") -> "FeatureMatrix":
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("expected an (n, d) array")
        return cls(arr.shape[0], arr.shape[1], arr, provenance)


def aggregate(dataset: MultimodalDataset, strategy: AggregationStrategy | str) -> FeatureMatrix:
    """Build the per-sample feature matrix for the given strategy.

    concat: row i is the flattening of sample i's tokens across modalities in
    dataset order, width sum(t_m * d_m). mean/sum: token-wise reduction over
    the pooled sum(t_m) tokens, width d; mean is sum divided by the token
    count, so ``mean * total_tokens == sum`` holds exactly.
    """
    if isinstance(strategy, str):
        strategy = AggregationStrategy(strategy)
    mods = dataset.modalities
    names = ",".join(m.modality_name for m in mods)

    if strategy.kind == "concat":
        blocks = [m.values.reshape(m.n, m.t * m.d) for m in mods]
        out = np.concatenate(blocks, axis=1)
        return FeatureMatrix.from_values(out, f"concat({names})")

    widths = {m.d for m in mods}
    if len(widths) != 1:
        raise DimensionError(
            f"{strategy.kind} needs a shared embedding width, got {sorted(widths)}"
        )
    total_tokens = sum(m.t for m in mods)
    acc = np.zeros((dataset.n, mods[0].d), dtype=np.float64)
    for m in sorted(mods, key=lambda m: m.modality_name):
        acc += m.values.sum(axis=1)
    if strategy.kind == "mean":
        acc /= total_tokens
    return FeatureMatrix.from_values(acc, f"{strategy.kind}({names})")


def feature_matrix_to_tensor(features: FeatureMatrix) -> EmbeddingTensor:
    """View a feature matrix as a t=1 embedding tensor for MMEB persistence."""
    return EmbeddingTensor(
        features.provenance or "features",
        features.n,
        1,
        features.d,
        features.values.reshape(features.n, 1, features.d),
    )


def tensor_to_feature_matrix(tensor: EmbeddingTensor) -> FeatureMatrix:
    """Read back a t=1 tensor as a feature matrix (provenance = stored name)."""
    if tensor.t != 1:
        raise DimensionError(f"feature tensors must have t=1, got t={tensor.t}")
    return FeatureMatrix(
        tensor.n, tensor.d, tensor.values.reshape(tensor.n, tensor.d), tensor.modality_name
    )
