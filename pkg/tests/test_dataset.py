import numpy as np
import pytest

from alviz import dataset


def test_fnv1a_64_known_vectors():
    # reference values for the 64-bit FNV-1a parameters
    assert dataset.fnv1a_64(b"") == 0xCBF29CE484222325
    assert dataset.fnv1a_64(b"a") == 0xAF63DC4C8601EC8C
    assert dataset.fnv1a_64(b"foobar") == 0x85944171F73967E8


def test_fnv1a_64_sensitivity():
    a = dataset.fnv1a_64(b"abc")
    b = dataset.fnv1a_64(b"abd")
    assert a != b
    assert 0 <= a < 2**64


def test_from_arrays_basic():
    ds = dataset.from_arrays([[1.0, 2.0], [3.0, 4.0]], [0.5, 1.5])
    assert ds.n == 2 and ds.d == 2
    assert ds.feature_names == ("x0", "x1")
    with pytest.raises(ValueError):
        ds.features[0, 0] = 9.0


def test_from_arrays_rejects_nan():
    with pytest.raises(dataset.DatasetError):
        dataset.from_arrays([[1.0], [float("nan")]], [0.0, 1.0])
    with pytest.raises(dataset.DatasetError):
        dataset.from_arrays([[1.0], [2.0]], [0.0, float("inf")])


def test_from_arrays_shape_errors():
    with pytest.raises(dataset.DatasetError):
        dataset.from_arrays(np.empty((0, 3)), np.empty(0))
    with pytest.raises(dataset.DatasetError):
        dataset.from_arrays([[1.0], [2.0]], [1.0])


def test_csv_round_trip(tmp_path):
    ds = dataset.from_arrays([[0.25, -3.5], [1e-17, 2.0]], [7.0, -0.125])
    path = tmp_path / "ds.csv"
    dataset.write_csv(ds, path, target_column="y")
    back = dataset.load_csv(path, "y")
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.labels, ds.labels)
    assert back.feature_names == ds.feature_names


def test_load_csv_target_anywhere(tmp_path):
    path = tmp_path / "mid.csv"
    path.write_text("a,y,b\n1,10,2\n3,20,4\n")
    ds = dataset.load_csv(path, "y")
    assert np.array_equal(ds.labels, [10.0, 20.0])
    assert np.array_equal(ds.features, [[1.0, 2.0], [3.0, 4.0]])
    assert ds.feature_names == ("a", "b")


def test_load_csv_error_reporting(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("y,a\n1,2\n3,oops\n")
    with pytest.raises(dataset.DatasetError, match="row 3"):
        dataset.load_csv(path, "y")
    path.write_text("y,a\n1,2\n3\n")
    with pytest.raises(dataset.DatasetError, match="row 3"):
        dataset.load_csv(path, "y")
    path.write_text("y,a\n1,inf\n")
    with pytest.raises(dataset.DatasetError, match="non-finite"):
        dataset.load_csv(path, "y")
    path.write_text("y,a\n")
    with pytest.raises(dataset.DatasetError, match="no data rows"):
        dataset.load_csv(path, "y")
    with pytest.raises(dataset.DatasetError, match="target column"):
        path.write_text("y,a\n1,2\n")
        dataset.load_csv(path, "z")
    with pytest.raises(FileNotFoundError):
        dataset.load_csv(tmp_path / "nope.csv", "y")


def test_load_csv_hash_covers_raw_bytes(tmp_path):
    p1 = tmp_path / "one.csv"
    p2 = tmp_path / "two.csv"
    p1.write_text("y,a\n1,2\n")
    p2.write_text("y,a\n1,2.0\n")  # same values, different bytes
    d1 = dataset.load_csv(p1, "y")
    d2 = dataset.load_csv(p2, "y")
    assert np.array_equal(d1.features, d2.features)
    assert d1.content_hash != d2.content_hash
    assert d1.content_hash == dataset.fnv1a_64(p1.read_bytes())


def test_scaler_round_trip(rng):
    X = rng.normal(size=(50, 3)) * np.array([10.0, 0.1, 1.0]) + 5.0
    sc = dataset.Scaler.fit(X)
    Z = sc.transform(X)
    assert np.allclose(Z.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(Z.std(axis=0), 1.0, atol=1e-12)
    assert np.allclose(sc.inverse(Z), X, atol=1e-9)


def test_scaler_constant_feature():
    X = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    sc = dataset.Scaler.fit(X)
    Z = sc.transform(X)
    # constant column maps to zeros rather than blowing up
    assert np.allclose(Z[:, 1], 0.0)
    assert np.all(np.isfinite(Z))


def split_oracle(n, fraction, seed):
    """Independent recomputation: order rows by (uniform key, index)."""
    keys = np.random.default_rng(seed).random(n)
    order = sorted(range(n), key=lambda i: (keys[i], i))
    n_test = int(round(n * fraction))
    return list(order[n_test:]), list(order[:n_test])


@pytest.mark.parametrize("n,fraction,seed", [(10, 0.3, 0), (101, 0.25, 7), (45730, 0.2128, 3)])
def test_split_indices_match_oracle(n, fraction, seed):
    pool, test = dataset.split_indices(n, dataset.SplitSpec(fraction, seed))
    o_pool, o_test = split_oracle(n, fraction, seed)
    assert pool.tolist() == o_pool
    assert test.tolist() == o_test


def test_split_sizes_round():
    pool, test = dataset.split_indices(45730, dataset.SplitSpec(9730 / 45730, 0))
    assert len(test) == 9730
    assert len(pool) == 36000


def test_split_partition_properties():
    spec = dataset.SplitSpec(0.25, 5)
    pool, test = dataset.split_indices(100, spec)
    combined = np.sort(np.concatenate([pool, test]))
    assert np.array_equal(combined, np.arange(100))
    pool2, test2 = dataset.split_indices(100, spec)
    assert np.array_equal(pool, pool2) and np.array_equal(test, test2)
    pool3, _ = dataset.split_indices(100, dataset.SplitSpec(0.25, 6))
    assert not np.array_equal(pool, pool3)


def test_split_degenerate_errors():
    with pytest.raises(ValueError):
        dataset.split_indices(3, dataset.SplitSpec(0.01, 0))
    with pytest.raises(ValueError):
        dataset.split_indices(3, dataset.SplitSpec(0.99, 0))
    with pytest.raises(ValueError):
        dataset.split_indices(10, dataset.SplitSpec(1.5, 0))


def test_split_datasets_tagged():
    ds = dataset.make_synthetic("clusters", n=40, d=2, noise_sd=0.1, seed=1)
    pool, test = dataset.split(ds, dataset.SplitSpec(0.25, 0))
    assert pool.n + test.n == ds.n
    assert pool.source_id.endswith("#pool") and test.source_id.endswith("#test")
    assert pool.content_hash != test.content_hash


@pytest.mark.parametrize("kind", ["clusters", "piecewise_constant", "plane"])
def test_synthetic_shapes_and_determinism(kind):
    a = dataset.make_synthetic(kind, n=60, d=3, noise_sd=0.2, seed=9)
    b = dataset.make_synthetic(kind, n=60, d=3, noise_sd=0.2, seed=9)
    c = dataset.make_synthetic(kind, n=60, d=3, noise_sd=0.2, seed=10)
    assert a.n == 60 and a.d == 3
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.labels, b.labels)
    assert a.content_hash == b.content_hash
    assert a.content_hash != c.content_hash


def test_synthetic_rejects_unknown():
    with pytest.raises(ValueError):
        dataset.make_synthetic("mystery", n=10, d=2, noise_sd=0.0, seed=0)
    with pytest.raises(ValueError):
        dataset.make_synthetic("plane", n=1, d=2, noise_sd=0.0, seed=0)


def test_piecewise_constant_truth_boxes():
    X = np.array([[0.2, 0.2], [0.8, 0.2], [0.2, 0.8], [0.8, 0.8]])
    assert dataset.piecewise_constant_truth(X).tolist() == [2.0, 4.0, 6.0, 8.0]
    # 1-d data only uses the first threshold
    X1 = np.array([[0.4], [0.6]])
    assert dataset.piecewise_constant_truth(X1).tolist() == [2.0, 4.0]


def test_piecewise_constant_noise_free_labels_match_truth():
    ds = dataset.make_synthetic("piecewise_constant", n=200, d=4, noise_sd=0.0, seed=3)
    assert np.array_equal(ds.labels, dataset.piecewise_constant_truth(ds.features))


def test_plane_is_rank_two():
    ds = dataset.make_synthetic("plane", n=100, d=5, noise_sd=0.0, seed=2)
    centered = ds.features - ds.features.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    assert s[2] < 1e-10 * s[0]
