"""Proxy quality measures for a coreset and the machine-readable run report.

Downstream training quality is out of reach here, so the report carries two
geometry proxies instead: quantization error (mean squared distance from each
sample to its nearest coreset member, lower = more representative) and
diversity (mean pairwise squared distance among coreset members, higher =
more spread). Neither implies anything about training outcomes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .aggregate import FeatureMatrix
from .errors import EmptyError, IoError, ReportError
from .sampler import Coreset

_CHUNK = 1024  # rows per block in the distance scans; keeps memory O(chunk * |C|)


def _coreset_indices(coreset) -> list[int]:
    idx = list(coreset.indices) if isinstance(coreset, Coreset) else [int(i) for i in coreset]
    return sorted(idx)


def quantization_error(features: FeatureMatrix, coreset) -> float:
    """Mean over all samples of the squared distance to the nearest coreset point."""
    idx = _coreset_indices(coreset)
    if not idx:
        raise EmptyError("quantization error needs a non-empty coreset")
    if idx[0] < 0 or idx[-1] >= features.n:
        raise IndexError("coreset indices out of range for the feature matrix")
    x = features.values
    centers = x[idx]
    mins = np.empty(features.n, dtype=np.float64)
    for start in range(0, features.n, _CHUNK):
        block = x[start:start + _CHUNK]
        d2 = ((block[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        mins[start:start + _CHUNK] = d2.min(axis=1)
    return float(np.mean(mins))


def diversity(features: FeatureMatrix, coreset) -> float:
    """Mean squared distance over unordered coreset pairs; 0 for a singleton."""
    idx = _coreset_indices(coreset)
    if not idx:
        raise EmptyError("diversity needs a non-empty coreset")
    if idx[0] < 0 or idx[-1] >= features.n:
        raise IndexError("coreset indices out of range for the feature matrix")
    m = len(idx)
    if m == 1:
        return 0.0
    centers = features.values[idx]
    total = 0.0
    for start in range(0, m, _CHUNK):
        block = centers[start:start + _CHUNK]
        d2 = ((block[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        total += float(d2.sum())
    n_pairs = m * (m - 1) // 2
    return total / 2.0 / n_pairs


@dataclass(frozen=True)
class Report:
    """Everything a run wants remembered, minus anything nondeterministic.

    ``timing`` is carried in memory but serialized to a separate file so that
    identical runs produce byte-identical report JSON.
    """

    config_fingerprint: str
    dataset: dict
    method: str
    num_bins: int
    fraction: float
    mode: str
    coreset_size: int
    quantization_error: float | None
    diversity: float | None
    seeds: dict
    timing: dict = field(default_factory=dict)

    def payload(self) -> dict:
        return {
            "config_fingerprint": self.config_fingerprint,
            "dataset": self.dataset,
            "method": self.method,
            "num_bins": self.num_bins,
            "fraction": self.fraction,
            "mode": self.mode,
            "coreset_size": self.coreset_size,
            "quantization_error": self.quantization_error,
            "diversity": self.diversity,
            "seeds": self.seeds,
        }


def build_report(
    *,
    features: FeatureMatrix,
    coreset: Coreset,
    dataset_summary: dict,
    method: str,
    num_bins: int,
    mode: str,
    config_fingerprint: str,
    timing: dict | None = None,
) -> Report:
    """Assemble the report from the run artifacts; every piece is required."""
    if features is None or coreset is None:
        raise ReportError("missing stage artifact: features and coreset are required")
    if not dataset_summary:
        raise ReportError("missing stage artifact: dataset summary")
    # Both metrics are undefined for an empty coreset; record null, not a fake 0.
    qe = quantization_error(features, coreset) if coreset.indices else None
    div = diversity(features, coreset) if coreset.indices else None
    return Report(
        config_fingerprint=config_fingerprint,
        dataset=dataset_summary,
        method=method,
        num_bins=num_bins,
        fraction=coreset.fraction,
        mode=mode,
        coreset_size=len(coreset.indices),
        quantization_error=qe,
        diversity=div,
        seeds={"sampler": coreset.seed},
        timing=dict(timing or {}),
    )


def report_to_json(report: Report) -> str:
    """Stable serialization: sorted keys, shortest round-trip floats."""
    return json.dumps(report.payload(), sort_keys=True, indent=2) + "\n"


def write_report(report: Report, path) -> None:
    try:
        Path(path).write_text(report_to_json(report), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_timing(timing: dict, path) -> None:
    """Wall-clock seconds per stage; excluded from the determinism contract."""
    try:
        Path(path).write_text(
            json.dumps(timing, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
