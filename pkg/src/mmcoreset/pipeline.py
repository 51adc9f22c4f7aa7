"""End-to-end orchestration: load, aggregate, reduce, select, sample, report.

Every output file embeds the config fingerprint; identical config and inputs
produce byte-identical partition, coreset, and report files. On failure the
stage name is attached to the error and any partially written outputs are
removed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

from .aggregate import FeatureMatrix, aggregate, tensor_to_feature_matrix
from .config import PipelineConfig, config_fingerprint, method_label
from .errors import PipelineStageError
from .pca import fit_pca, pca_transform
from .report import Report, build_report, write_report, write_timing
from .sampler import Coreset, sample_coreset, write_coreset
from .selector import BinPartition, SelectorConfig, select_bins, write_partition
from .store import MultimodalDataset, load_dataset, read_embedding_tensor

OUTPUT_FILES = ("partition.json", "coreset.json", "report.json", "timing.json")


@dataclass(frozen=True)
class PipelineResult:
    coreset: Coreset
    report: Report
    partition: BinPartition
    features: FeatureMatrix


def dataset_summary(dataset: MultimodalDataset, features: FeatureMatrix,
                    reduced: FeatureMatrix) -> dict:
    return {
        "n": dataset.n,
        "modality_count": dataset.modality_count,
        "modalities": [
            {"name": m.modality_name, "t": m.t, "d": m.d} for m in dataset.modalities
        ],
        "feature_dim": features.d,
        "selection_dim": reduced.d,
    }


def run_pipeline(config: PipelineConfig, out_dir) -> PipelineResult:
    """Execute all stages and write partition/coreset/report JSON to out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fingerprint = config_fingerprint(config)
    timing: dict[str, float] = {}
    written: list[Path] = []

    def staged(name, fn):
        start = time.perf_counter()
        try:
            result = fn()
        except Exception as exc:
            for path in written:
                path.unlink(missing_ok=True)
            raise PipelineStageError(name, exc) from exc
        timing[name] = time.perf_counter() - start
        return result

    dataset = staged("load", lambda: load_dataset(config.manifest_path))
    features = staged("aggregate", lambda: aggregate(dataset, config.aggregation))

    def reduce_stage():
        kind = config.reduction["kind"]
        if kind == "none":
            return features
        if kind == "pca":
            model = fit_pca(features, config.reduction["k"])
            return pca_transform(model, features)
        return tensor_to_feature_matrix(read_embedding_tensor(config.reduction["path"]))

    reduced = staged("reduce", reduce_stage)

    def select_stage():
        partition = select_bins(reduced, SelectorConfig(config.num_bins, config.mode))
        path = out / "partition.json"
        write_partition(partition, path, fingerprint)
        written.append(path)
        return partition

    partition = staged("select", select_stage)

    def sample_stage():
        coreset = sample_coreset(partition, config.fraction, config.seed, fingerprint)
        path = out / "coreset.json"
        write_coreset(coreset, path)
        written.append(path)
        return coreset

    coreset = staged("sample", sample_stage)

    def report_stage():
        report = build_report(
            features=reduced,
            coreset=coreset,
            dataset_summary=dataset_summary(dataset, features, reduced),
            method=method_label(config.aggregation, config.reduction),
            num_bins=config.num_bins,
            mode=config.mode,
            config_fingerprint=fingerprint,
            timing=timing,
        )
        path = out / "report.json"
        write_report(report, path)
        written.append(path)
        return report

    report = staged("report", report_stage)
    write_timing(timing, out / "timing.json")
    return PipelineResult(coreset=coreset, report=report, partition=partition, features=reduced)
