"""Text-to-vector featurization and the embedding interchange formats.

The built-in featurizer hashes word 1-/2-grams into a fixed-dimension
signed-count vector (L2-normalized), standing in for a pooled transformer
representation. Externally produced dense embeddings are exchanged through
a small self-describing binary format (plus a JSONL debug variant) keyed by
"report_id|SEGMENT".

Binary layout (little-endian throughout):

    magic   4 bytes  b"SEMB"
    version u32      1
    dim     u32
    count   u64
    then per record: key_len u32, key bytes (UTF-8), dim float64 values
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from spinemtl import _kernels
from spinemtl.core import SEGMENT_BY_NAME, MotionSegment, SegmentBundle

MAGIC = b"SEMB"
FORMAT_VERSION = 1

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_TOKEN_RE_CASED = re.compile(r"[A-Za-z0-9]+")


@dataclass(frozen=True)
class HashedFeaturizerConfig:
    dim: int = 1024
    ngram_range: tuple[int, int] = (1, 2)
    lowercase: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if tuple(self.ngram_range) not in ((1, 1), (1, 2)):
            raise ValueError("ngram_range must be (1,1) or (1,2)")


@dataclass(frozen=True)
class EmbeddingRecord:
    report_id: str
    segment: MotionSegment
    values: np.ndarray

    @property
    def key(self) -> str:
        return f"{self.report_id}|{self.segment.value}"

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def tokenize(text: str, lowercase: bool = True) -> list[bytes]:
    if lowercase:
        return [t.encode("utf-8") for t in _TOKEN_RE.findall(text.lower())]
    return [t.encode("utf-8") for t in _TOKEN_RE_CASED.findall(text)]


def featurize(text: str, config: HashedFeaturizerConfig | None = None) -> np.ndarray:
    """Deterministic signed-hash n-gram vector, L2-normalized (or the zero
    vector when the text has no tokens)."""
    config = config or HashedFeaturizerConfig()
    tokens = tokenize(text, config.lowercase)
    vec = _kernels.hash_features(
        tokens, config.dim, config.seed, use_bigrams=config.ngram_range[1] >= 2
    )
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


def featurize_bundles(
    bundles: Sequence[SegmentBundle], config: HashedFeaturizerConfig | None = None
) -> np.ndarray:
    """Row-per-bundle feature matrix, rows in input order."""
    config = config or HashedFeaturizerConfig()
    out = np.empty((len(bundles), config.dim), dtype=np.float64)
    for i, b in enumerate(bundles):
        out[i] = featurize(b.text, config)
    return out


# ---------------------------------------------------------------------------
# Embedding interchange
# ---------------------------------------------------------------------------


def _check_records(records: Sequence[EmbeddingRecord]) -> int:
    if not records:
        raise ValueError("no records to write")
    dim = records[0].dim
    for r in records:
        if r.dim != dim:
            raise ValueError(
                f"inconsistent dimension: expected {dim}, got {r.dim} for key {r.key!r}"
            )
        if not np.all(np.isfinite(r.values)):
            raise ValueError(f"invalid value: non-finite entry for key {r.key!r}")
    return dim


def write_embeddings(records: Sequence[EmbeddingRecord], path: str | Path) -> None:
    dim = _check_records(records)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IIQ", FORMAT_VERSION, dim, len(records)))
        for r in records:
            key = r.key.encode("utf-8")
            f.write(struct.pack("<I", len(key)))
            f.write(key)
            f.write(np.ascontiguousarray(r.values, dtype="<f8").tobytes())


def read_embeddings(path: str | Path) -> list[EmbeddingRecord]:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"not an embedding file: bad magic in {path}")
    version, dim, count = struct.unpack_from("<IIQ", data, 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported embedding format version {version}")
    records: list[EmbeddingRecord] = []
    off = 20
    vec_bytes = 8 * dim
    for _ in range(count):
        (key_len,) = struct.unpack_from("<I", data, off)
        off += 4
        key = data[off : off + key_len].decode("utf-8")
        off += key_len
        values = np.frombuffer(data, dtype="<f8", count=dim, offset=off).copy()
        off += vec_bytes
        if not np.all(np.isfinite(values)):
            raise ValueError(f"invalid value: non-finite entry for key {key!r}")
        records.append(_record_from_key(key, values))
    if off != len(data):
        raise ValueError("trailing bytes after last record")
    return records


def _record_from_key(key: str, values: np.ndarray) -> EmbeddingRecord:
    report_id, sep, seg_name = key.rpartition("|")
    if not sep or seg_name not in SEGMENT_BY_NAME:
        raise ValueError(f"malformed embedding key {key!r}")
    return EmbeddingRecord(report_id, SEGMENT_BY_NAME[seg_name], values)


def write_embeddings_jsonl(records: Sequence[EmbeddingRecord], path: str | Path) -> None:
    """Human-inspectable JSONL variant of the binary format."""
    dim = _check_records(records)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps({"key": r.key, "dim": dim, "values": r.values.tolist()}) + "\n")


def read_embeddings_jsonl(path: str | Path) -> list[EmbeddingRecord]:
    records: list[EmbeddingRecord] = []
    dim = None
    with Path(path).open("r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            values = np.asarray(d["values"], dtype=np.float64)
            if dim is None:
                dim = values.shape[0]
            elif values.shape[0] != dim:
                raise ValueError(
                    f"inconsistent dimension: expected {dim}, got {values.shape[0]} "
                    f"for key {d['key']!r}"
                )
            if not np.all(np.isfinite(values)):
                raise ValueError(f"invalid value: non-finite entry for key {d['key']!r}")
            records.append(_record_from_key(d["key"], values))
    return records


class EmbeddingIndex:
    """Immutable in-memory lookup over an embedding record set."""

    def __init__(self, records: Sequence[EmbeddingRecord]):
        self.dim = _check_records(records)
        self._by_key = {r.key: r.values for r in records}

    def __len__(self) -> int:
        return len(self._by_key)

    def lookup(self, report_id: str, segment: MotionSegment) -> np.ndarray:
        key = f"{report_id}|{segment.value}"
        try:
            return self._by_key[key]
        except KeyError:
            raise KeyError(f"missing embedding: {key!r}") from None

    def for_bundles(self, bundles: Iterable[SegmentBundle]) -> np.ndarray:
        return np.stack([self.lookup(b.report_id, b.segment) for b in bundles])
