import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from spinemtl.core import TASKS, PathologyTask
from spinemtl.features import EmbeddingIndex, EmbeddingRecord, HashedFeaturizerConfig, featurize_bundles
from spinemtl.similarity import (
    ConditionalCloud,
    SwConfig,
    distance_matrix,
    estimate_diameter,
    log_spaced_dims,
    slice_conditionals,
    sliced_w2,
    upper_bound,
    wasserstein_1d,
    write_matrix_csv,
    write_matrix_json,
)


def _cloud(task, label, points):
    return ConditionalCloud(task, label, np.asarray(points, dtype=np.float64))


def test_cloud_validation():
    c = _cloud(PathologyTask.STENOSIS, 1, [[0.0, 1.0], [1.0, 0.0]])
    assert c.n == 2 and c.dim == 2 and c.scorable
    assert c.name == "stenosis/1"
    with pytest.raises(ValueError):
        _cloud(PathologyTask.STENOSIS, 9, [[0.0]])
    with pytest.raises(ValueError):
        _cloud(PathologyTask.STENOSIS, 1, [[np.inf, 0.0]])
    assert not _cloud(PathologyTask.STENOSIS, 1, [[0.0, 1.0]]).scorable


def test_log_spaced_dims_default():
    assert log_spaced_dims() == [1, 2, 3, 4]
    assert log_spaced_dims(1, 64, 4) == [1, 4, 16, 64]


def test_wasserstein_1d_translation_exact():
    rng = np.random.default_rng(0)
    a = rng.standard_normal(500)
    assert wasserstein_1d(a, a + 3.0) == pytest.approx(3.0, abs=1e-12)


def test_wasserstein_1d_rejects_bad_input():
    with pytest.raises(ValueError):
        wasserstein_1d(np.array([]), np.array([1.0]))
    with pytest.raises(ValueError):
        wasserstein_1d(np.array([1.0]), np.array([1.0]), p=1)


def test_sliced_w2_1d_matches_exact():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((40, 1))
    B = rng.standard_normal((60, 1)) + 2.0
    est, se = sliced_w2(A, B, SwConfig(n_projections=5, seed=0))
    # In one dimension every unit projection is +/- identity.
    assert est == pytest.approx(wasserstein_1d(A[:, 0], B[:, 0]), rel=1e-12)
    assert se == pytest.approx(0.0, abs=1e-12)


def test_sliced_w2_monte_carlo_oracle():
    # Two shifted Gaussians in d=6: a dense-projection run is the oracle.
    rng = np.random.default_rng(2)
    A = rng.standard_normal((80, 6))
    B = rng.standard_normal((80, 6))
    B[:, 0] += 4.0
    est, se = sliced_w2(A, B, SwConfig(n_projections=60, seed=3))
    oracle, _ = sliced_w2(A, B, SwConfig(n_projections=8000, seed=99))
    assert abs(est - oracle) / oracle < 0.1
    assert se > 0


def test_sliced_w2_symmetry_bit_exact():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((25, 8))
    B = rng.standard_normal((35, 8)) + 0.5
    cfg = SwConfig(n_projections=16, seed=11)
    ab = sliced_w2(A, B, cfg)
    ba = sliced_w2(B, A, cfg)
    assert ab == ba


def test_sliced_w2_multidim_slices():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((50, 8))
    B = rng.standard_normal((50, 8)) + 1.0
    cfg = SwConfig(n_projections=12, projection_dims=(1, 2, 4), seed=0)
    est, se = sliced_w2(A, B, cfg)
    assert est > 0 and np.isfinite(se)
    # Same config, same answer; swapped arguments, same answer.
    assert sliced_w2(A, B, cfg) == (est, se)
    assert sliced_w2(B, A, cfg) == (est, se)


def test_sliced_w2_input_validation():
    ok = np.zeros((3, 2))
    with pytest.raises(ValueError):
        sliced_w2(ok, np.zeros((3, 3)), SwConfig())
    with pytest.raises(ValueError):
        sliced_w2(np.zeros((1, 2)), ok, SwConfig())
    with pytest.raises(ValueError):
        sliced_w2(ok, ok, SwConfig(projection_dims=(4,)))


finite_cloud = hnp.arrays(
    np.float64, st.tuples(st.integers(2, 12), st.just(3)),
    elements=st.floats(-20, 20, allow_nan=False, width=32),
)


@given(finite_cloud, finite_cloud, st.integers(0, 2 ** 31 - 1))
@settings(max_examples=60, deadline=None)
def test_sliced_w2_axioms_property(A, B, seed):
    cfg = SwConfig(n_projections=8, seed=seed)
    d_ab, _ = sliced_w2(A, B, cfg)
    d_ba, _ = sliced_w2(B, A, cfg)
    assert d_ab == d_ba
    assert d_ab >= 0.0
    d_aa, _ = sliced_w2(A, A, cfg)
    assert d_aa == 0.0


@given(finite_cloud, st.floats(-3, 3, allow_nan=False), st.integers(0, 2 ** 31 - 1))
@settings(max_examples=40, deadline=None)
def test_sliced_w2_dilation_property(A, c, seed):
    B = A * 2.0 + 1.0
    cfg = SwConfig(n_projections=8, seed=seed)
    base, _ = sliced_w2(A, B, cfg)
    scaled, _ = sliced_w2(c * A, c * B, cfg)
    assert scaled == pytest.approx(abs(c) * base, abs=1e-9 * max(1.0, base))


def test_upper_bound_validation():
    assert upper_bound(59.4, 1.0) == 59.4
    assert upper_bound(10.0, 0.25) == 2.5
    with pytest.raises(ValueError):
        upper_bound(-1.0, 0.5)
    with pytest.raises(ValueError):
        upper_bound(1.0, 1.5)


def test_estimate_diameter_hand_case():
    pts = np.array([[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]])
    clouds = [_cloud(PathologyTask.DISC, 1, pts[:2]), _cloud(PathologyTask.DISC, 2, pts[2:].repeat(2, 0))]
    assert estimate_diameter(clouds) == pytest.approx(5.0)


def test_estimate_diameter_chunk_boundary():
    rng = np.random.default_rng(6)
    pts = rng.standard_normal((700, 3))
    cloud = _cloud(PathologyTask.CORD, 1, pts)
    exact = 0.0
    diff = pts[:, None, :] - pts[None, :, :]
    exact = float(np.sqrt((diff ** 2).sum(-1)).max())
    assert estimate_diameter([cloud], chunk=256) == pytest.approx(exact, rel=1e-12)


def _toy_clouds():
    rng = np.random.default_rng(7)
    return [
        _cloud(PathologyTask.STENOSIS, 1, rng.standard_normal((20, 4))),
        _cloud(PathologyTask.STENOSIS, 2, rng.standard_normal((15, 4)) + 2.0),
        _cloud(PathologyTask.CORD, 1, rng.standard_normal((18, 4)) - 1.0),
    ]


def test_distance_matrix_structure():
    clouds = _toy_clouds()
    m = distance_matrix(clouds, SwConfig(n_projections=10, seed=1))
    n = len(clouds)
    assert m.values.shape == (n, n)
    assert np.allclose(np.diag(m.values), 0.0)
    assert np.array_equal(m.values, m.values.T)
    assert list(m.sizes) == [20, 15, 18]


def test_distance_matrix_order_invariant_cells():
    clouds = _toy_clouds()
    cfg = SwConfig(n_projections=10, seed=1)
    m1 = distance_matrix(clouds, cfg)
    m2 = distance_matrix(clouds[::-1], cfg)
    # Each unordered pair draws its own seed, so reordering relabels only.
    assert m1.values[0, 2] == m2.values[2, 0]
    assert m1.values[0, 1] == m2.values[2, 1]


def test_distance_matrix_unscorable_cloud_is_nan():
    clouds = _toy_clouds() + [_cloud(PathologyTask.CORD, 0, np.zeros((1, 4)))]
    m = distance_matrix(clouds, SwConfig(n_projections=6, seed=0))
    assert np.isnan(m.values[3, 0]) and np.isnan(m.values[0, 3])
    assert m.values[3, 3] == 0.0


def test_distance_matrix_needs_two_clouds():
    with pytest.raises(ValueError):
        distance_matrix(_toy_clouds()[:1], SwConfig())


def test_matrix_serialization(tmp_path):
    m = distance_matrix(_toy_clouds(), SwConfig(n_projections=6, seed=2))
    csv_path = tmp_path / "m.csv"
    json_path = tmp_path / "m.json"
    write_matrix_csv(m, csv_path)
    write_matrix_json(m, json_path)
    with csv_path.open() as f:
        rows = list(csv.reader(f))
    assert rows[0][1:] == m.names
    payload = json.loads(json_path.read_text())
    assert payload["labels"] == m.names
    assert len(payload["values"]) == len(m.names)


def _bundle_with(labels_map, rid, seg, text="severe stenosis"):
    from spinemtl.core import SegmentBundle
    return SegmentBundle.make(rid, seg, text, labels_map)


def test_slice_conditionals_groups_by_task_and_label(small_corpus):
    bundles = [b for b in small_corpus.bundles if b.is_classifier_instance]
    X = featurize_bundles(bundles, HashedFeaturizerConfig(dim=32))
    records = [EmbeddingRecord(b.report_id, b.segment, X[i]) for i, b in enumerate(bundles)]
    clouds = slice_conditionals(bundles, EmbeddingIndex(records))
    assert clouds
    for c in clouds:
        assert c.label >= 1  # class 0 excluded by default
    total = sum(c.n for c in clouds)
    expected = sum(
        1 for b in bundles for lab in b.labels if lab.class_index >= 1
    )
    assert total == expected


def test_slice_conditionals_include_class0(small_corpus):
    bundles = [b for b in small_corpus.bundles if b.is_classifier_instance]
    X = featurize_bundles(bundles, HashedFeaturizerConfig(dim=32))
    records = [EmbeddingRecord(b.report_id, b.segment, X[i]) for i, b in enumerate(bundles)]
    with_zero = slice_conditionals(bundles, EmbeddingIndex(records), include_class0=True)
    labels = {(c.task, c.label) for c in with_zero}
    assert any(lab == 0 for _, lab in labels)
