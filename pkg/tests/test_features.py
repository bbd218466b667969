import numpy as np
import pytest

from spinemtl.core import TASKS, MotionSegment, SegmentBundle
from spinemtl.features import (
    EmbeddingIndex,
    EmbeddingRecord,
    HashedFeaturizerConfig,
    featurize,
    featurize_bundles,
    read_embeddings,
    read_embeddings_jsonl,
    write_embeddings,
    write_embeddings_jsonl,
)


def _bundle(rid, seg, text):
    return SegmentBundle.make(rid, seg, text, {t: 0 for t in TASKS})


def test_featurize_deterministic():
    cfg = HashedFeaturizerConfig(dim=128, seed=5)
    a = featurize("moderate canal stenosis at this level", cfg)
    b = featurize("moderate canal stenosis at this level", cfg)
    assert np.array_equal(a, b)


def test_featurize_seed_changes_projection():
    text = "mild broad-based disc bulge"
    a = featurize(text, HashedFeaturizerConfig(dim=128, seed=0))
    b = featurize(text, HashedFeaturizerConfig(dim=128, seed=1))
    assert not np.array_equal(a, b)


def test_featurize_unit_norm():
    v = featurize("cord signal is normal", HashedFeaturizerConfig(dim=64))
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)


def test_featurize_empty_text_is_zero_vector():
    v = featurize("", HashedFeaturizerConfig(dim=64))
    assert v.shape == (64,)
    assert np.all(v == 0.0)


def test_case_folding_merges_tokens():
    cfg = HashedFeaturizerConfig(dim=256, lowercase=True)
    assert np.array_equal(featurize("Severe Stenosis", cfg), featurize("severe stenosis", cfg))
    cfg_cs = HashedFeaturizerConfig(dim=256, lowercase=False)
    assert not np.array_equal(featurize("Severe Stenosis", cfg_cs), featurize("severe stenosis", cfg_cs))


def test_bigrams_distinguish_order():
    cfg = HashedFeaturizerConfig(dim=512, ngram_range=(1, 2))
    a = featurize("disc osteophyte complex", cfg)
    b = featurize("complex osteophyte disc", cfg)
    assert not np.array_equal(a, b)
    uni = HashedFeaturizerConfig(dim=512, ngram_range=(1, 1))
    assert np.allclose(featurize("disc osteophyte complex", uni),
                       featurize("complex osteophyte disc", uni))


def test_featurize_bundles_matrix():
    bundles = [
        _bundle("r1", MotionSegment.C2C3, "mild stenosis"),
        _bundle("r1", MotionSegment.C3C4, "severe stenosis with cord compression"),
    ]
    X = featurize_bundles(bundles, HashedFeaturizerConfig(dim=128))
    assert X.shape == (2, 128)
    assert np.allclose(np.linalg.norm(X, axis=1), 1.0)
    assert np.array_equal(X[0], featurize("mild stenosis", HashedFeaturizerConfig(dim=128)))


def test_record_key_and_dim():
    rec = EmbeddingRecord("r9", MotionSegment.C5C6, np.zeros(16, dtype=np.float32))
    assert rec.key == "r9|C5-C6"
    assert rec.dim == 16


def _records(n=5, dim=32, seed=0):
    rng = np.random.default_rng(seed)
    segs = list(MotionSegment)[:n]
    return [
        EmbeddingRecord(f"r{i}", segs[i], rng.standard_normal(dim).astype(np.float32))
        for i in range(n)
    ]


def test_binary_roundtrip_exact(tmp_path):
    records = _records()
    path = tmp_path / "e.semb"
    write_embeddings(records, path)
    back = read_embeddings(path)
    assert [r.key for r in back] == [r.key for r in records]
    for a, b in zip(records, back):
        assert np.array_equal(a.values, b.values)


def test_jsonl_roundtrip(tmp_path):
    records = _records()
    path = tmp_path / "e.jsonl"
    write_embeddings_jsonl(records, path)
    back = read_embeddings_jsonl(path)
    for a, b in zip(records, back):
        assert a.key == b.key
        assert np.allclose(a.values, b.values, atol=1e-6)


def test_binary_rejects_garbage(tmp_path):
    path = tmp_path / "bad.semb"
    path.write_bytes(b"not an embedding file at all")
    with pytest.raises(ValueError):
        read_embeddings(path)


def test_binary_rejects_nonfinite(tmp_path):
    rec = EmbeddingRecord("r", MotionSegment.C2C3, np.array([1.0, np.nan], dtype=np.float32))
    with pytest.raises(ValueError):
        write_embeddings([rec], tmp_path / "e.semb")


def test_index_lookup_order():
    records = _records()
    index = EmbeddingIndex(records)
    bundles = [
        _bundle("r2", records[2].segment, "x"),
        _bundle("r0", records[0].segment, "y"),
    ]
    X = index.for_bundles(bundles)
    assert np.array_equal(X[0], records[2].values)
    assert np.array_equal(X[1], records[0].values)


def test_index_missing_key_raises():
    index = EmbeddingIndex(_records())
    with pytest.raises(KeyError):
        index.for_bundles([_bundle("missing", MotionSegment.C2C3, "z")])
