"""Pipeline configuration: parsing, validation, canonical form, fingerprint.

The fingerprint is the SHA-256 of the canonical JSON (sorted keys, compact
separators, shortest round-trip float formatting) of the semantic fields.
The output directory is deliberately excluded so that re-running the same
experiment elsewhere yields the same fingerprint.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .aggregate import KINDS as AGGREGATION_KINDS
from .errors import ConfigError
from .selector import MODES as SELECTION_MODES

REDUCTION_KINDS = ("none", "pca", "external")


@dataclass(frozen=True)
class PipelineConfig:
    manifest_path: str
    aggregation: str
    reduction: dict
    num_bins: int
    fraction: float
    seed: int
    mode: str = "accelerated"
    out_dir: str | None = None

    def __post_init__(self):
        if self.aggregation not in AGGREGATION_KINDS:
            raise ConfigError(
                f"aggregation must be one of {AGGREGATION_KINDS}, got {self.aggregation!r}"
            )
        kind = self.reduction.get("kind")
        if kind not in REDUCTION_KINDS:
            raise ConfigError(
                f"reduction kind must be one of {REDUCTION_KINDS}, got {kind!r}"
            )
        if kind == "pca":
            k = self.reduction.get("k")
            if not isinstance(k, int) or k < 1:
                raise ConfigError(f"pca reduction needs an integer k >= 1, got {k!r}")
        if kind == "external" and not self.reduction.get("path"):
            raise ConfigError("external reduction needs a 'path'")
        if self.num_bins < 1:
            raise ConfigError(f"num_bins must be >= 1, got {self.num_bins}")
        if not 0.0 < self.fraction <= 1.0:
            raise ConfigError(f"fraction must be in (0, 1], got {self.fraction}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be a u64, got {self.seed}")
        if self.mode not in SELECTION_MODES:
            raise ConfigError(
                f"mode must be one of {SELECTION_MODES}, got {self.mode!r}"
            )

    def semantic_fields(self) -> dict:
        return {
            "manifest_path": self.manifest_path,
            "aggregation": self.aggregation,
            "reduction": dict(self.reduction),
            "num_bins": self.num_bins,
            "fraction": self.fraction,
            "seed": self.seed,
            "mode": self.mode,
        }


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_fingerprint(config: PipelineConfig) -> str:
    digest = hashlib.sha256(canonical_json(config.semantic_fields()).encode("utf-8"))
    return digest.hexdigest()


def reduction_label(reduction: dict) -> str:
    kind = reduction.get("kind", "none")
    if kind == "pca":
        return f"pca{reduction['k']}"
    return kind


def method_label(aggregation: str, reduction: dict) -> str:
    """Run label, e.g. ``concat+pca1024+submodular``."""
    return f"{aggregation}+{reduction_label(reduction)}+submodular"


def load_config(path) -> PipelineConfig:
    """Read a pipeline config JSON file; unknown keys are rejected."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a JSON object")

    known = {
        "manifest_path", "aggregation", "reduction", "num_bins",
        "fraction", "seed", "mode", "out_dir",
    }
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    missing = {"manifest_path", "aggregation", "reduction", "num_bins", "fraction", "seed"} - set(doc)
    if missing:
        raise ConfigError(f"{path}: missing config keys {sorted(missing)}")

    reduction = doc["reduction"]
    if isinstance(reduction, str):
        reduction = {"kind": reduction}
    if not isinstance(reduction, dict):
        raise ConfigError(f"{path}: reduction must be an object or a kind string")

    try:
        return PipelineConfig(
            manifest_path=str(doc["manifest_path"]),
            aggregation=str(doc["aggregation"]),
            reduction=reduction,
            num_bins=int(doc["num_bins"]),
            fraction=float(doc["fraction"]),
            seed=int(doc["seed"]),
            mode=str(doc.get("mode", "accelerated")),
            out_dir=doc.get("out_dir"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
