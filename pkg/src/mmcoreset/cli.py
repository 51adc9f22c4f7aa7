"""Command-line interface.

Subcommands mirror the pipeline stages so each artifact can be produced and
inspected on its own; ``pipeline`` runs the whole chain from a config file.
Exit codes: 0 success, 1 usage/config error, 2 data error, 3 internal
assertion failure.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .aggregate import aggregate, feature_matrix_to_tensor, tensor_to_feature_matrix
from .config import config_fingerprint, load_config
from .errors import ConfigError, MMCoresetError, PipelineStageError
from .pca import fit_pca, pca_transform, save_pca_model
from .pipeline import run_pipeline
from .report import build_report, write_report
from .sampler import read_coreset, sample_coreset, write_coreset, write_coreset_indices
from .selector import SelectorConfig, read_partition, select_bins, write_partition
from .store import load_dataset, read_embedding_tensor, write_embedding_tensor


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _read_features(path):
    return tensor_to_feature_matrix(read_embedding_tensor(path))


def _cmd_validate(args) -> int:
    try:
        dataset = load_dataset(args.manifest)
    except MMCoresetError as exc:
        print(f"{type(exc).__name__}: {exc}")
        return 2
    for m in dataset.modalities:
        print(f"modality {m.modality_name}: n={m.n}, t={m.t}, d={m.d}, finite=yes")
    print(f"OK, n={dataset.n}, M={dataset.modality_count}")
    return 0


def _cmd_aggregate(args) -> int:
    dataset = load_dataset(args.manifest)
    features = aggregate(dataset, args.strategy)
    write_embedding_tensor(feature_matrix_to_tensor(features), args.out, "f64")
    print(f"wrote {args.out}: n={features.n}, d={features.d} ({features.provenance})")
    return 0


def _cmd_reduce(args) -> int:
    features = _read_features(args.features)
    model = fit_pca(features, args.k, method=args.method)
    reduced = pca_transform(model, features)
    write_embedding_tensor(feature_matrix_to_tensor(reduced), args.out, "f64")
    if args.model_prefix:
        save_pca_model(model, args.model_prefix)
    print(f"wrote {args.out}: n={reduced.n}, d={reduced.d}")
    return 0


def _cmd_select(args) -> int:
    features = _read_features(args.features)
    partition = select_bins(features, SelectorConfig(args.bins, args.mode))
    write_partition(partition, args.out)
    print(f"wrote {args.out}: n={partition.n_total}, num_bins={partition.num_bins}")
    return 0


def _cmd_sample(args) -> int:
    if not 0 <= args.seed < 2 ** 64:
        raise ConfigError(f"seed must be a u64, got {args.seed}")
    if not 0.0 < args.fraction <= 1.0:
        raise ConfigError(f"fraction must be in (0, 1], got {args.fraction}")
    partition = read_partition(args.partition)
    coreset = sample_coreset(partition, args.fraction, args.seed)
    write_coreset(coreset, args.out)
    if args.indices_out:
        write_coreset_indices(coreset, args.indices_out)
    print(f"wrote {args.out}: {len(coreset.indices)} of {coreset.n_total} indices")
    return 0


def _cmd_report(args) -> int:
    features = _read_features(args.features)
    coreset = read_coreset(args.coreset)
    num_bins = 0
    if args.partition:
        num_bins = read_partition(args.partition).num_bins
    report = build_report(
        features=features,
        coreset=coreset,
        dataset_summary={"n": features.n, "selection_dim": features.d},
        method=args.method,
        num_bins=num_bins,
        mode=args.mode,
        config_fingerprint=coreset.config_fingerprint,
    )
    write_report(report, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_pipeline(args) -> int:
    config = load_config(args.config)
    out_dir = args.out or config.out_dir
    if not out_dir:
        raise ConfigError("no output directory: pass --out or set out_dir in the config")
    result = run_pipeline(config, out_dir)
    print(f"fingerprint {config_fingerprint(config)}")
    print(
        f"coreset: {len(result.coreset.indices)} of {result.coreset.n_total} indices "
        f"({result.report.method})"
    )
    print(f"outputs in {out_dir}: partition.json coreset.json report.json timing.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mmcoreset", description=__doc__)
    parser.add_argument("--version", action="version", version=f"mmcoreset {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[], help="check that a manifest loads cleanly")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("aggregate", help="collapse modalities into a feature matrix")
    p.add_argument("--manifest", required=True)
    p.add_argument("--strategy", required=True, choices=["concat", "mean", "sum"])
    p.add_argument("--out", required=True, help="output feature tensor (MMEB, t=1)")
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("reduce", help="fit PCA and project the features")
    p.add_argument("--features", required=True)
    p.add_argument("--k", required=True, type=int)
    p.add_argument("--method", default="auto", choices=["auto", "covariance", "gram"])
    p.add_argument("--out", required=True)
    p.add_argument("--model-prefix", help="also persist the fitted model under this prefix")
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("select", help="greedy bin partitioning of the features")
    p.add_argument("--features", required=True)
    p.add_argument("--bins", required=True, type=int)
    p.add_argument("--mode", default="accelerated", choices=["oracle", "accelerated"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("sample", help="draw the coreset from a partition")
    p.add_argument("--partition", required=True)
    p.add_argument("--fraction", required=True, type=float)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--indices-out", help="also write a newline-delimited index file")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("report", help="compute proxy quality metrics for a coreset")
    p.add_argument("--features", required=True)
    p.add_argument("--coreset", required=True)
    p.add_argument("--partition", help="optional, records num_bins in the report")
    p.add_argument("--method", default="external")
    p.add_argument("--mode", default="accelerated")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("pipeline", help="run every stage from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (overrides config out_dir)")
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except PipelineStageError as exc:
        print(f"error in stage {exc.stage!r}: {exc.cause}", file=sys.stderr)
        return 1 if isinstance(exc.cause, ConfigError) else 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (MMCoresetError, IndexError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"internal assertion failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
