"""Deterministic PCA fitted on a feature matrix before selection.

Two algebraically equivalent fit routes share one deterministic Jacobi
eigensolver (see kernels): the d x d covariance route when d <= n, and the
n x n Gram route otherwise, which keeps memory O(n^2) when features are much
wider than the sample count. Covariance uses divisor n-1. The sign of each
component is fixed so its largest-magnitude entry is positive, with magnitude
ties resolved by the lowest index, making fits reproducible bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .aggregate import FeatureMatrix
from .errors import DataError, DegenerateError, DimensionError, IoError, RankError
from .store import EmbeddingTensor, read_embedding_tensor, write_embedding_tensor


@dataclass(frozen=True)
class PcaModel:
    """Feature means plus the top-k principal directions and their variances."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    def __post_init__(self):
        mean = np.ascontiguousarray(np.asarray(self.mean, dtype=np.float64).ravel())
        comps = np.ascontiguousarray(np.asarray(self.components, dtype=np.float64))
        ev = np.ascontiguousarray(np.asarray(self.explained_variance, dtype=np.float64).ravel())
        if comps.ndim != 2 or comps.shape[1] != mean.shape[0] or comps.shape[0] != ev.shape[0]:
            raise ValueError("inconsistent mean/components/explained_variance shapes")
        if (ev < 0).any() or (ev[1:] > ev[:-1]).any():
            raise ValueError("explained_variance must be nonnegative and non-increasing")
        for arr in (mean, comps, ev):
            arr.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "explained_variance", ev)

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def d(self) -> int:
        return self.components.shape[1]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Flip each row so its largest-magnitude entry (lowest index on ties) is positive."""
    out = components.copy()
    for row in out:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            np.negative(row, out=row)
    return out


def _sorted_eigh(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, v = kernels.jacobi_eigh(np.ascontiguousarray(mat, dtype=np.float64))
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def fit_pca(features: FeatureMatrix, k: int, method: str = "auto") -> PcaModel:
    """Fit the top-k principal directions of the centered feature matrix.

    ``method`` selects the eigendecomposition route: "covariance" (d x d),
    "gram" (n x n), or "auto" picking covariance when d <= n. Requires
    1 <= k <= min(n-1, d) and n >= 2; raises DegenerateError when the data's
    numerical rank is below k (all-constant data has rank 0).
    """
    n, d = features.n, features.d
    if n < 2:
        raise RankError(f"need at least 2 samples to fit, got {n}")
    if not 1 <= k <= min(n - 1, d):
        raise RankError(f"k={k} outside valid range [1, {min(n - 1, d)}]")
    if method == "auto":
        method = "covariance" if d <= n else "gram"
    if method not in ("covariance", "gram"):
        raise ValueError(f"unknown method {method!r}")

    x = features.values
    mean = x.mean(axis=0)
    centered = x - mean

    if method == "covariance":
        cov = (centered.T @ centered) / (n - 1)
        w, v = _sorted_eigh(cov)
        scale = w[0] if w.size else 0.0
        if scale <= 0.0:
            raise DegenerateError("zero-variance data has no principal direction")
        rank = int(np.sum(w > max(n, d) * np.finfo(np.float64).eps * scale))
        if k > rank:
            raise DegenerateError(f"k={k} exceeds the data's numerical rank {rank}")
        components = _fix_signs(v[:, :k].T)
        variance = np.maximum(w[:k], 0.0)
    else:
        gram = centered @ centered.T
        w, u = _sorted_eigh(gram)
        scale = w[0] if w.size else 0.0
        if scale <= 0.0:
            raise DegenerateError("zero-variance data has no principal direction")
        rank = int(np.sum(w > max(n, d) * np.finfo(np.float64).eps * scale))
        if k > rank:
            raise DegenerateError(f"k={k} exceeds the data's numerical rank {rank}")
        top = w[:k]
        components = (centered.T @ u[:, :k]) / np.sqrt(top)
        components = _fix_signs(components.T)
        variance = top / (n - 1)

    return PcaModel(mean, components, variance)


def pca_transform(model: PcaModel, features: FeatureMatrix) -> FeatureMatrix:
    """Project features onto the principal directions: rows become k-vectors."""
    if features.d != model.d:
        raise DimensionError(f"features width {features.d} != model width {model.d}")
    out = (features.values - model.mean) @ model.components.T
    provenance = f"pca{model.k}({features.provenance})" if features.provenance else f"pca{model.k}"
    return FeatureMatrix.from_values(out, provenance)


def save_pca_model(model: PcaModel, prefix) -> None:
    """Persist as ``{prefix}.json`` plus MMEB tensors for mean and components."""
    prefix = Path(prefix)
    mean_file = prefix.parent / f"{prefix.name}.mean.mmeb"
    comp_file = prefix.parent / f"{prefix.name}.components.mmeb"
    header = {
        "k": model.k,
        "d": model.d,
        "explained_variance": [float(v) for v in model.explained_variance],
        "mean_file": mean_file.name,
        "components_file": comp_file.name,
    }
    write_embedding_tensor(
        EmbeddingTensor("pca_mean", 1, 1, model.d, model.mean.reshape(1, 1, model.d)),
        mean_file,
        "f64",
    )
    write_embedding_tensor(
        EmbeddingTensor(
            "pca_components", model.k, 1, model.d, model.components.reshape(model.k, 1, model.d)
        ),
        comp_file,
        "f64",
    )
    try:
        (prefix.parent / f"{prefix.name}.json").write_text(
            json.dumps(header, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise IoError(f"cannot write {prefix}.json: {exc}") from exc


def load_pca_model(prefix) -> PcaModel:
    prefix = Path(prefix)
    try:
        header = json.loads(
            (prefix.parent / f"{prefix.name}.json").read_text(encoding="utf-8")
        )
    except OSError as exc:
        raise IoError(f"cannot read {prefix}.json: {exc}") from exc
    base = prefix.parent
    mean = read_embedding_tensor(base / header["mean_file"]).values.reshape(-1)
    comps = read_embedding_tensor(base / header["components_file"])
    model = PcaModel(
        mean,
        comps.values.reshape(comps.n, comps.d),
        np.asarray(header["explained_variance"], dtype=np.float64),
    )
    if model.k != header["k"] or model.d != header["d"]:
        raise DimensionError(f"{prefix}: header dims disagree with stored tensors")
    gram = model.components @ model.components.T
    if np.abs(gram - np.eye(model.k)).max() > 1e-8:
        raise DataError(f"{prefix}: stored components are not orthonormal")
    return model
