import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lqsvm.data import (
    BlobSpec,
    Dataset,
    DataError,
    Standardizer,
    load_csv,
    make_blobs,
    read_feature_csv,
    regular_simplex_centers,
    separated_blobs,
    standardize_apply,
    standardize_fit,
    stratified_kfold,
    write_csv,
)


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


# -- load_csv ----------------------------------------------------------------------


def test_load_csv_three_rows(tmp_path):
    d = load_csv(_write(tmp_path, "1.0,2.0,0\n3.0,4.0,1\n5.0,6.0,0\n"))
    assert (d.n, d.d, d.class_count) == (3, 2, 2)
    np.testing.assert_array_equal(d.features, [[1, 2], [3, 4], [5, 6]])
    np.testing.assert_array_equal(d.labels, [0, 1, 0])


def test_load_csv_remaps_labels(tmp_path):
    d = load_csv(_write(tmp_path, "0.1,9\n0.2,5\n0.3,9\n"))
    np.testing.assert_array_equal(d.labels, [1, 0, 1])
    assert d.label_values == (5, 9)


def test_load_csv_empty_file(tmp_path):
    with pytest.raises(DataError):
        load_csv(_write(tmp_path, ""))


def test_load_csv_ragged_row_names_line(tmp_path):
    with pytest.raises(DataError, match="row 2"):
        load_csv(_write(tmp_path, "1,2,0\n1,1\n"))


def test_load_csv_non_numeric(tmp_path):
    with pytest.raises(DataError, match="non-numeric"):
        load_csv(_write(tmp_path, "1,2,0\nx,2,1\n"))


def test_load_csv_single_class_rejected(tmp_path):
    with pytest.raises(DataError, match="one class"):
        load_csv(_write(tmp_path, "1,0\n2,0\n"))


def test_load_csv_header_and_label_column(tmp_path):
    d = load_csv(_write(tmp_path, "label,a,b\n3,1.5,2\n4,0,1\n"), label_column=0, skip_header=True)
    np.testing.assert_array_equal(d.features, [[1.5, 2], [0, 1]])
    assert d.label_values == (3, 4)


def test_csv_round_trip(tmp_path):
    d = separated_blobs(3, 30, 4.0, seed=3)
    p = tmp_path / "out.csv"
    write_csv(d, p)
    back = load_csv(p)
    np.testing.assert_array_equal(back.features, d.features)
    np.testing.assert_array_equal(back.labels, d.labels)


def test_read_feature_csv(tmp_path):
    X = read_feature_csv(_write(tmp_path, "1,2\n3,4\n"))
    np.testing.assert_array_equal(X, [[1, 2], [3, 4]])
    with pytest.raises(DataError):
        read_feature_csv(_write(tmp_path, "1,2\n3\n", "bad.csv"))


def test_dataset_validation():
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 1)), [0, 2], 2)
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 1)), [0], 2)
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 1)), [0, 0], 1)
    d = Dataset(np.zeros((2, 1)), [0, 1], 2)
    assert not d.features.flags.writeable


# -- standardization ---------------------------------------------------------------


def test_standardize_constant_column_guard():
    d = Dataset([[1.0, 0.0], [1.0, 2.0], [1.0, 4.0]], [0, 1, 0], 2)
    s = standardize_fit(d)
    assert s.means[0] == 1.0 and s.stds[0] == 1.0
    out = standardize_apply(s, d)
    np.testing.assert_array_equal(out.features[:, 0], 0.0)


def test_standardize_population_std():
    s = standardize_fit(Dataset([[0.0], [2.0]], [0, 1], 2))
    assert s.means[0] == 1.0 and s.stds[0] == 1.0


def test_standardize_zero_features():
    s = standardize_fit(Dataset(np.zeros((3, 0)), [0, 1, 0], 2))
    assert s.means.size == 0 and s.stds.size == 0


def test_standardize_identity():
    d = separated_blobs(2, 20, 3.0, seed=1)
    out = standardize_apply(Standardizer(np.zeros(2), np.ones(2)), d)
    np.testing.assert_array_equal(out.features, d.features)
    np.testing.assert_array_equal(out.labels, d.labels)


def test_standardize_dimension_mismatch():
    d = separated_blobs(2, 20, 3.0, seed=1)
    with pytest.raises(DataError):
        standardize_apply(Standardizer(np.zeros(3), np.ones(3)), d)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 40), st.integers(1, 5), st.integers(0, 10_000))
def test_standardize_moments_and_round_trip(n, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(3.0, 2.0, (n, d))
    data = Dataset(X, np.arange(n) % 2, 2)
    s = standardize_fit(data)
    Z = standardize_apply(s, data).features
    np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-10)
    np.testing.assert_allclose(Z.std(axis=0), 1.0, atol=1e-10)
    np.testing.assert_allclose(s.inverse_transform(Z), X, atol=1e-12)


# -- stratified folds ----------------------------------------------------------------


def test_kfold_perfect_divisibility():
    d = Dataset(np.zeros((10, 1)), [0] * 5 + [1] * 5, 2)
    fa = stratified_kfold(d, 5, seed=0)
    for f in range(5):
        assert sorted(d.labels[fa.test_indices(f)].tolist()) == [0, 1]


def test_kfold_determinism():
    d = separated_blobs(3, 50, 2.0, seed=0)
    assert stratified_kfold(d, 4, 7) == stratified_kfold(d, 4, 7)


def test_kfold_sizes_ten_into_three():
    d = Dataset(np.zeros((10, 1)), [0] * 5 + [1] * 5, 2)
    fa = stratified_kfold(d, 3, seed=1)
    assert sorted(np.bincount(fa.fold_of).tolist()) == [3, 3, 4]


def test_kfold_errors():
    d = Dataset(np.zeros((4, 1)), [0, 1, 0, 1], 2)
    with pytest.raises(DataError):
        stratified_kfold(d, 5, 0)
    with pytest.raises(DataError):
        stratified_kfold(d, 1, 0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=2, max_size=80), st.integers(2, 10), st.integers(0, 1000))
def test_kfold_stratification_invariants(labels, k, seed):
    labels = np.asarray(labels)
    if np.unique(labels).size < 2 or k > labels.size:
        return
    C = int(labels.max()) + 1
    d = Dataset(np.zeros((labels.size, 1)), labels, max(C, 2))
    fa = stratified_kfold(d, k, seed)
    sizes = np.bincount(fa.fold_of, minlength=k)
    assert sizes.max() - sizes.min() <= 1
    for c in np.unique(labels):
        per = np.bincount(fa.fold_of[labels == c], minlength=k)
        assert per.max() - per.min() <= 1
    # train and test parts partition the indices
    for f in range(k):
        both = np.concatenate([fa.train_indices(f), fa.test_indices(f)])
        assert sorted(both.tolist()) == list(range(labels.size))


# -- synthetic blobs ---------------------------------------------------------------------


def test_blobs_zero_sigma():
    d = make_blobs([BlobSpec((0, 0), 0.0, 2), BlobSpec((5, 1), 0.0, 3)], seed=0)
    np.testing.assert_array_equal(d.features, [[0, 0]] * 2 + [[5, 1]] * 3)


def test_blobs_counts():
    d = make_blobs([BlobSpec((0,), 1.0, 3), BlobSpec((1,), 1.0, 3)], seed=0)
    assert d.n == 6
    np.testing.assert_array_equal(d.labels, [0, 0, 0, 1, 1, 1])


def test_blobs_determinism():
    specs = [BlobSpec((0, 0), 1.0, 5), BlobSpec((3, 0), 1.0, 5)]
    a, b = make_blobs(specs, 11), make_blobs(specs, 11)
    np.testing.assert_array_equal(a.features, b.features)


@pytest.mark.parametrize("C,dim", [(2, 2), (3, 2), (4, 3), (5, 5)])
def test_simplex_centers_equidistant(C, dim):
    pts = regular_simplex_centers(C, 2.5, dim)
    assert pts.shape == (C, dim)
    dist = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    np.testing.assert_allclose(dist[~np.eye(C, dtype=bool)], 2.5, rtol=1e-12)


def test_separated_blobs_balanced():
    d = separated_blobs(3, 301, 6.0, seed=0)
    assert np.bincount(d.labels).tolist() == [101, 100, 100]
