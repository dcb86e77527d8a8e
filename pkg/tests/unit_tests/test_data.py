import numpy as np
import pytest

from ocal.data import (
    Dataset,
    PoolState,
    expected_label_counts,
    load_csv,
    make_blobs_with_outliers,
    make_initial_pool,
    make_split,
    normalize,
    resample,
    round_half_up,
)
from ocal.errors import InfeasibleScenarioError, OcalError, ParseError


def _labeled(n_inliers: int, n_outliers: int, n_features: int = 3, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n_inliers + n_outliers, n_features))
    y = np.r_[np.zeros(n_inliers), np.ones(n_outliers)]
    return Dataset(name="synthetic", X=X, y=y)


def test_round_half_up() -> None:
    assert round_half_up(2.5) == 3
    assert round_half_up(0.5) == 1
    assert round_half_up(1.25) == 1
    assert round_half_up(5.26) == 5


def test_dataset_rejects_misaligned_labels() -> None:
    with pytest.raises(OcalError):
        Dataset(name="bad", X=np.zeros((3, 2)), y=np.zeros(2))


def test_dataset_arrays_are_read_only(blobs) -> None:
    with pytest.raises(ValueError):
        blobs.X[0, 0] = 1.0


def test_normalize_maps_columns_to_unit_interval() -> None:
    X, constant = normalize(np.array([[1.0, 5.0], [3.0, 5.0], [2.0, 5.0]]))
    assert constant == [1]
    np.testing.assert_allclose(X[:, 0], [0.0, 1.0, 0.5])
    np.testing.assert_allclose(X[:, 1], 0.0)


def test_load_csv(tmp_path) -> None:
    path = tmp_path / "toy.csv"
    path.write_text("a,b,label\n1,5,inlier\n3,5,outlier\n2,5,inlier\n2,5,inlier\n")
    d = load_csv(path)
    assert d.name == "toy"
    assert d.n_obs == 3
    assert d.provenance["duplicates"] == 1
    np.testing.assert_array_equal(d.y, [0, 1, 0])
    np.testing.assert_allclose(d.X[:, 0], [0.0, 1.0, 0.5])
    np.testing.assert_allclose(d.X[:, 1], 0.0)
    assert any("constant column" in w for w in d.warnings)


def test_load_csv_reports_line_of_bad_value(tmp_path) -> None:
    path = tmp_path / "bad.csv"
    path.write_text("a,b,label\n1,2,inlier\n3,x,outlier\n")
    with pytest.raises(ParseError) as exc:
        load_csv(path)
    assert exc.value.line == 3


def test_load_csv_reports_missing_value(tmp_path) -> None:
    path = tmp_path / "missing.csv"
    path.write_text("a,b,label\n1,,inlier\n")
    with pytest.raises(ParseError, match="missing value") as exc:
        load_csv(path)
    assert exc.value.line == 2


def test_load_csv_rejects_unknown_label(tmp_path) -> None:
    path = tmp_path / "labels.csv"
    path.write_text("a,label\n1,inlier\n2,maybe\n")
    with pytest.raises(ParseError, match="unknown label") as exc:
        load_csv(path)
    assert exc.value.line == 3


def test_resample_hits_target_rate() -> None:
    d = resample(_labeled(2000, 100), outlier_rate=0.05, max_n=1000, seed=1)
    assert d.n_obs == 1000
    assert d.n_outliers == 50
    assert d.provenance["outlier_shortfall"] is False


def test_resample_keeps_all_outliers_on_shortfall() -> None:
    d = resample(_labeled(100, 3), outlier_rate=0.05, max_n=1000, seed=1)
    assert d.n_outliers == 3
    assert d.n_obs == 103
    assert d.provenance["outlier_shortfall"] is True
    assert d.warnings


def test_resample_is_deterministic() -> None:
    source = _labeled(300, 40)
    a = resample(source, 0.05, 100, seed=2)
    b = resample(source, 0.05, 100, seed=2)
    c = resample(source, 0.05, 100, seed=3)
    np.testing.assert_array_equal(a.X, b.X)
    assert not np.array_equal(a.X, c.X)


def test_expected_label_counts() -> None:
    assert expected_label_counts("Pu", None, 500, 25, 2) == (0, 0)
    assert expected_label_counts("Pn", 25, 500, 25, 2) == (24, 1)
    assert expected_label_counts("Pp", 0.1, 500, 25, 2) == (47, 3)
    assert expected_label_counts("Pa", None, 500, 25, 3) == (3, 0)


def test_expected_label_counts_pa_needs_enough_inliers() -> None:
    with pytest.raises(InfeasibleScenarioError):
        expected_label_counts("Pa", None, 3, 1, 3)


def test_initial_pool_follows_ground_truth(blobs) -> None:
    pool = make_initial_pool(blobs, "Pn", 25, seed=4)
    assert pool.L_in.size == 23
    assert pool.L_out.size == 2
    assert np.all(blobs.y[pool.L_in] == 0)
    assert np.all(blobs.y[pool.L_out] == 1)
    again = make_initial_pool(blobs, "Pn", 25, seed=4)
    np.testing.assert_array_equal(pool.status, again.status)


def test_initial_pool_respects_candidates(blobs) -> None:
    candidates = np.arange(0, blobs.n_obs, 2)
    pool = make_initial_pool(blobs, "Pn", 10, seed=0, candidates=candidates)
    assert set(pool.L.tolist()) <= set(candidates.tolist())


def test_pool_state_assign() -> None:
    pool = PoolState.unlabeled(4)
    pool.assign(2, outlier=True)
    assert pool.L_out.tolist() == [2]
    assert pool.U.tolist() == [0, 1, 3]
    with pytest.raises(OcalError):
        pool.assign(2, outlier=False)


def test_holdout_split(blobs) -> None:
    split = make_split(blobs, "Sh", 0.8, seed=0)
    assert split.stratified
    assert split.train_idx.size == 51
    assert split.test_idx.size == 13
    assert np.intersect1d(split.train_idx, split.test_idx).size == 0
    np.testing.assert_array_equal(
        np.union1d(split.train_idx, split.test_idx), np.arange(blobs.n_obs)
    )
    pool = PoolState.unlabeled(blobs.n_obs)
    assert np.intersect1d(split.eligible(pool), split.test_idx).size == 0


def test_holdout_split_falls_back_without_stratification() -> None:
    d = _labeled(9, 1)
    split = make_split(d, "Sh", 0.8, seed=0)
    assert not split.stratified
    assert split.train_idx.size == 8


def test_inlier_split_fits_on_labeled_inliers(blobs) -> None:
    split = make_split(blobs, "Si")
    pool = make_initial_pool(blobs, "Pn", 25, seed=0)
    np.testing.assert_array_equal(split.fit_indices(pool), pool.L_in)
    np.testing.assert_array_equal(split.eligible(pool), pool.U)
    full = make_split(blobs, "Sf")
    np.testing.assert_array_equal(full.fit_indices(pool), np.arange(blobs.n_obs))


def test_unknown_split_strategy(blobs) -> None:
    with pytest.raises(OcalError):
        make_split(blobs, "Sx")


def test_blobs_generator() -> None:
    d = make_blobs_with_outliers(40, 5, n_features=3, seed=1)
    assert d.X.shape == (45, 3)
    assert d.n_outliers == 5
    assert d.X.min() >= 0.0 and d.X.max() <= 1.0


def test_normalize_is_idempotent() -> None:
    X = np.random.default_rng(2).uniform(-5.0, 9.0, size=(30, 4))
    X[:, 2] = 3.0
    once, constant = normalize(X)
    twice, again = normalize(once)
    np.testing.assert_array_equal(twice, once)
    assert constant == again == [2]
