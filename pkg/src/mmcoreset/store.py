"""On-disk multimodal embedding storage (MMEB format) and dataset loading.

MMEB is a little-endian binary container for one modality's token embeddings,
shaped ``n x t x d`` (sample-major, then token, then dimension):

    bytes 0-3    magic ``MMEB``
    bytes 4-7    version, u32, currently 1
    bytes 8-11   dtype code, u32: 1 = f32, 2 = f64
    bytes 12-19  n, u64 (samples)
    bytes 20-27  t, u64 (tokens per sample)
    bytes 28-35  d, u64 (embedding dimension)
    bytes 36-39  name_len, u32
    next name_len bytes: UTF-8 modality name
    remainder    n*t*d IEEE-754 values, row-major

Values are held as float64 in memory regardless of the stored dtype; loaded
arrays are marked read-only, so a dataset is safe for shared concurrent reads.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    AlignmentError,
    DataError,
    FormatError,
    IoError,
    ManifestError,
    TruncationError,
)

MAGIC = b"MMEB"
VERSION = 1
_HEADER = struct.Struct("<4sIIQQQI")  # magic, version, dtype, n, t, d, name_len
_DTYPE_CODES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_DTYPE_NAMES = {"f32": 1, "f64": 2}


def _check_finite(values: np.ndarray) -> None:
    finite = np.isfinite(values)
    if not finite.all():
        idx = int(np.argmin(finite.ravel()))
        raise DataError(f"non-finite value at flat index {idx}")


@dataclass(frozen=True)
class EmbeddingTensor:
    """One modality's token embeddings: ``n`` samples x ``t`` tokens x ``d`` dims."""

    modality_name: str
    n: int
    t: int
    d: int
    values: np.ndarray

    def __post_init__(self):
        if self.n < 1 or self.t < 1 or self.d < 1:
            raise ValueError("n, t, d must all be >= 1")
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.size != self.n * self.t * self.d:
            raise ValueError(
                f"value count {arr.size} != n*t*d = {self.n * self.t * self.d}"
            )
        arr = np.ascontiguousarray(arr.reshape(self.n, self.t, self.d))
        _check_finite(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_values(cls, modality_name: str, values: np.ndarray) -> "EmbeddingTensor":
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 3:
            raise ValueError("expected an (n, t, d) array")
        n, t, d = arr.shape
        return cls(modality_name, n, t, d, arr)


@dataclass(frozen=True)
class MultimodalDataset:
    """Ordered, sample-aligned collection of per-modality embedding tensors."""

    modalities: tuple[EmbeddingTensor, ...]

    def __post_init__(self):
        mods = tuple(self.modalities)
        if not mods:
            raise ManifestError("dataset needs at least one modality")
        n = mods[0].n
        for m in mods[1:]:
            if m.n != n:
                raise AlignmentError(
                    f"modality {m.modality_name!r} has n={m.n}, expected {n}"
                )
        names = [m.modality_name for m in mods]
        if len(set(names)) != len(names):
            raise ManifestError(f"duplicate modality names in {names}")
        object.__setattr__(self, "modalities", mods)

    @property
    def n(self) -> int:
        return self.modalities[0].n

    @property
    def modality_count(self) -> int:
        return len(self.modalities)


def write_embedding_tensor(tensor: EmbeddingTensor, path, dtype: str = "f64") -> None:
    """Serialize a tensor to MMEB. ``dtype`` f32 rounds values to nearest-even."""
    code = _DTYPE_NAMES.get(dtype)
    if code is None:
        raise ValueError(f"dtype must be 'f32' or 'f64', got {dtype!r}")
    name = tensor.modality_name.encode("utf-8")
    header = _HEADER.pack(MAGIC, VERSION, code, tensor.n, tensor.t, tensor.d, len(name))
    payload = np.ascontiguousarray(tensor.values, dtype=_DTYPE_CODES[code])
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(name)
            fh.write(payload.tobytes())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_embedding_tensor(path) -> EmbeddingTensor:
    """Load and validate an MMEB file; values are converted to float64."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    if data[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    if len(data) < _HEADER.size:
        raise TruncationError(f"{path}: file shorter than the fixed header")
    _, version, code, n, t, d, name_len = _HEADER.unpack_from(data)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if code not in _DTYPE_CODES:
        raise FormatError(f"{path}: unknown dtype code {code}")
    if n < 1 or t < 1 or d < 1:
        raise FormatError(f"{path}: header dims must be >= 1, got {(n, t, d)}")
    offset = _HEADER.size + name_len
    if len(data) < offset:
        raise TruncationError(f"{path}: name field extends past end of file")
    try:
        name = data[_HEADER.size:offset].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: modality name is not valid UTF-8") from exc
    np_dtype = _DTYPE_CODES[code]
    count = n * t * d
    expected = offset + count * np_dtype.itemsize
    if len(data) != expected:
        raise TruncationError(
            f"{path}: payload is {len(data) - offset} bytes, "
            f"header implies {count * np_dtype.itemsize}"
        )
    raw = np.frombuffer(data, dtype=np_dtype, count=count, offset=offset)
    return EmbeddingTensor(name, n, t, d, raw.astype(np.float64))


def load_dataset(manifest_path) -> MultimodalDataset:
    """Load every modality listed in a JSON manifest, in manifest order.

    Manifest: ``{"modalities": [{"name": str, "path": str}, ...]}``. Relative
    paths resolve against the manifest's directory. The embedded tensor name
    must match the manifest entry.
    """
    manifest_path = Path(manifest_path)
    try:
        text = manifest_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read manifest {manifest_path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{manifest_path}: invalid JSON: {exc}") from exc

    entries = doc.get("modalities") if isinstance(doc, dict) else None
    if not isinstance(entries, list) or not entries:
        raise ManifestError(f"{manifest_path}: expected a non-empty 'modalities' list")
    names = []
    for e in entries:
        if not isinstance(e, dict) or "name" not in e or "path" not in e:
            raise ManifestError(f"{manifest_path}: each entry needs 'name' and 'path'")
        names.append(e["name"])
    if len(set(names)) != len(names):
        raise ManifestError(f"{manifest_path}: duplicate modality name in {names}")

    tensors = []
    for e in entries:
        p = Path(e["path"])
        if not p.is_absolute():
            p = manifest_path.parent / p
        tensor = read_embedding_tensor(p)
        if tensor.modality_name != e["name"]:
            raise ManifestError(
                f"{p}: embedded name {tensor.modality_name!r} != manifest name {e['name']!r}"
            )
        tensors.append(tensor)
    return MultimodalDataset(tuple(tensors))
