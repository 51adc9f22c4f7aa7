"""Token aggregation: fixtures, dimensional contracts, invariances."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmcoreset.aggregate import (
    AggregationStrategy,
    FeatureMatrix,
    aggregate,
    feature_matrix_to_tensor,
    tensor_to_feature_matrix,
)
from mmcoreset.errors import DimensionError
from mmcoreset.store import MultimodalDataset, read_embedding_tensor, write_embedding_tensor

from conftest import make_tensor


@pytest.fixture
def tiny_dataset():
    # Two modalities, one token each, d=2: tokens [1,2] and [3,4] per sample.
    a = make_tensor("a", [[[1.0, 2.0]]])
    b = make_tensor("b", [[[3.0, 4.0]]])
    return MultimodalDataset((a, b))


def test_concat_mean_sum_fixture(tiny_dataset):
    assert aggregate(tiny_dataset, "concat").values.tolist() == [[1.0, 2.0, 3.0, 4.0]]
    assert aggregate(tiny_dataset, "mean").values.tolist() == [[2.0, 3.0]]
    assert aggregate(tiny_dataset, "sum").values.tolist() == [[4.0, 6.0]]


def test_concat_width_matches_token_counts():
    # Token counts (196, 197) at width 768 concatenate to 393 * 768 = 301,824.
    rng = np.random.default_rng(0)
    ds = MultimodalDataset(
        (
            make_tensor("rgb", rng.normal(size=(2, 196, 768))),
            make_tensor("semseg", rng.normal(size=(2, 197, 768))),
        )
    )
    assert aggregate(ds, "concat").d == 301_824
    assert aggregate(ds, "mean").d == 768
    assert aggregate(ds, "sum").d == 768


def test_mean_times_token_count_equals_sum():
    rng = np.random.default_rng(1)
    ds = MultimodalDataset(
        (
            make_tensor("a", rng.normal(size=(3, 2, 4))),
            make_tensor("b", rng.normal(size=(3, 5, 4))),
        )
    )
    total_tokens = 2 + 5
    mean = aggregate(ds, "mean").values
    total = aggregate(ds, "sum").values
    assert np.array_equal(mean * total_tokens, total)


def test_mean_sum_require_shared_width():
    ds = MultimodalDataset(
        (make_tensor("a", [[[1.0, 2.0]]]), make_tensor("b", [[[3.0]]]))
    )
    with pytest.raises(DimensionError):
        aggregate(ds, "mean")
    with pytest.raises(DimensionError):
        aggregate(ds, "sum")
    assert aggregate(ds, "concat").d == 3


def test_modality_permutation_behavior():
    rng = np.random.default_rng(2)
    tensors = [
        make_tensor(name, rng.normal(size=(4, t, 3)))
        for name, t in (("x", 2), ("y", 1), ("z", 3))
    ]
    forward = MultimodalDataset(tuple(tensors))
    shuffled = MultimodalDataset((tensors[2], tensors[0], tensors[1]))

    # concat blocks permute with the modalities
    fwd = aggregate(forward, "concat").values
    shf = aggregate(shuffled, "concat").values
    widths = [2 * 3, 1 * 3, 3 * 3]
    blocks = np.split(fwd, np.cumsum(widths)[:-1], axis=1)
    assert np.array_equal(shf, np.concatenate([blocks[2], blocks[0], blocks[1]], axis=1))

    # mean/sum are bitwise invariant (accumulation runs in name order)
    for kind in ("mean", "sum"):
        assert np.array_equal(
            aggregate(forward, kind).values, aggregate(shuffled, kind).values
        )


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 5))
def test_concat_width_property(seed, n):
    rng = np.random.default_rng(seed)
    shapes = [(n, int(rng.integers(1, 4)), int(rng.integers(1, 4))) for _ in range(3)]
    ds = MultimodalDataset(
        tuple(make_tensor(f"m{i}", rng.normal(size=s)) for i, s in enumerate(shapes))
    )
    out = aggregate(ds, "concat")
    assert out.d == sum(t * d for _, t, d in shapes)
    assert out.n == n


def test_strategy_validation():
    with pytest.raises(ValueError):
        AggregationStrategy("median")


def test_feature_matrix_round_trip_via_tensor(tmp_path):
    rng = np.random.default_rng(3)
    fm = FeatureMatrix.from_values(rng.normal(size=(5, 3)), "concat(a,b)")
    path = tmp_path / "features.mmeb"
    write_embedding_tensor(feature_matrix_to_tensor(fm), path, "f64")
    back = tensor_to_feature_matrix(read_embedding_tensor(path))
    assert np.array_equal(back.values, fm.values)
    assert back.provenance == "concat(a,b)"


def test_feature_tensor_requires_single_token():
    with pytest.raises(DimensionError):
        tensor_to_feature_matrix(make_tensor("m", np.zeros((2, 2, 2))))
