"""Multimodal coreset selection.

Pipeline: load per-modality token embeddings (MMEB files), aggregate each
sample's tokens into one feature vector, optionally reduce with deterministic
PCA, partition the samples into bins by greedy submodular gain, then draw a
seeded uniform sample from every bin. Outputs are reproducible byte-for-byte
for a fixed configuration.
"""

__version__ = "0.1.0"

from .aggregate import AggregationStrategy, FeatureMatrix, aggregate
from .config import PipelineConfig, config_fingerprint, load_config, method_label
from .errors import (
    AlignmentError,
    ConfigError,
    DataError,
    DegenerateError,
    DimensionError,
    EmptyError,
    FormatError,
    IoError,
    ManifestError,
    MMCoresetError,
    PartitionError,
    PipelineStageError,
    RankError,
    ReportError,
    TruncationError,
)
from .pca import PcaModel, fit_pca, load_pca_model, pca_transform, save_pca_model
from .pipeline import PipelineResult, run_pipeline
from .report import Report, build_report, diversity, quantization_error
from .sampler import Coreset, SplitMix64, quotas, round_half_up, sample_coreset
from .selector import (
    BinPartition,
    GainState,
    SelectionTrace,
    SelectorConfig,
    bin_sizes,
    compute_gain_direct,
    gain_state_update,
    make_gain_state,
    select_bins,
    select_bins_traced,
)
from .store import (
    EmbeddingTensor,
    MultimodalDataset,
    load_dataset,
    read_embedding_tensor,
    write_embedding_tensor,
)

__all__ = [
    "AggregationStrategy",
    "AlignmentError",
    "BinPartition",
    "ConfigError",
    "Coreset",
    "DataError",
    "DegenerateError",
    "DimensionError",
    "EmbeddingTensor",
    "EmptyError",
    "FeatureMatrix",
    "FormatError",
    "GainState",
    "IoError",
    "ManifestError",
    "MMCoresetError",
    "MultimodalDataset",
    "PartitionError",
    "PcaModel",
    "PipelineConfig",
    "PipelineResult",
    "PipelineStageError",
    "RankError",
    "Report",
    "ReportError",
    "SelectionTrace",
    "SelectorConfig",
    "SplitMix64",
    "TruncationError",
    "aggregate",
    "bin_sizes",
    "build_report",
    "compute_gain_direct",
    "config_fingerprint",
    "diversity",
    "fit_pca",
    "gain_state_update",
    "load_config",
    "load_dataset",
    "load_pca_model",
    "make_gain_state",
    "method_label",
    "pca_transform",
    "quantization_error",
    "quotas",
    "read_embedding_tensor",
    "round_half_up",
    "run_pipeline",
    "sample_coreset",
    "save_pca_model",
    "select_bins",
    "select_bins_traced",
    "write_embedding_tensor",
]
