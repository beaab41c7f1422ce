import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lgg_radiomics.tabular import (
    ClassTooSmall,
    EmptyTable,
    FeatureTable,
    MinorityTooSmall,
    PcaModel,
    RankTooLow,
    ScalerModel,
    SmoteConfig,
    TableError,
    apply_pca,
    apply_scaler,
    fit_pca,
    fit_scaler,
    inverse_pca,
    minority_neighbors,
    read_table_csv,
    smote,
    stratified_split,
    write_table_csv,
)
from conftest import labelled_table


# ------------------------------------------------------------------ scaler

def test_scaler_hand_values():
    model = fit_scaler(np.array([[1.0], [2.0], [3.0]]))
    assert model.mean[0] == 2
    assert model.std[0] == pytest.approx(0.81650, abs=5e-6)
    out = apply_scaler(model, np.array([[1.0], [2.0], [3.0]]))[:, 0]
    assert out == pytest.approx([-1.22474, 0, 1.22474], abs=5e-6)


def test_scaler_idempotent_on_standardized(rng):
    X = rng.normal(size=(30, 4))
    Z = apply_scaler(fit_scaler(X), X)
    assert np.allclose(apply_scaler(fit_scaler(Z), Z), Z, atol=1e-9)


def test_scaler_constant_column():
    X = np.array([[1.0, 5.0], [2.0, 5.0], [4.0, 5.0]])
    model = fit_scaler(X)
    assert model.constant.tolist() == [False, True]
    assert np.all(apply_scaler(model, X)[:, 1] == 0)
    assert np.all(apply_scaler(model, np.array([[0.0, 99.0]]))[:, 1] == 0)


def test_scaler_round_trip_dict(rng):
    model = fit_scaler(rng.normal(size=(5, 3)))
    back = ScalerModel.from_dict(model.to_dict())
    assert np.array_equal(back.mean, model.mean) and np.array_equal(back.std, model.std)


def test_scaler_empty():
    with pytest.raises(EmptyTable):
        fit_scaler(np.zeros((0, 3)))


# ------------------------------------------------------------------ PCA

def test_pca_collinear():
    t = np.linspace(-2, 3, 11)
    model = fit_pca(np.column_stack([t, t]), k=1)
    assert model.explained_variance_ratio[0] == pytest.approx(1.0)
    assert model.components[0] == pytest.approx([2 ** -0.5, 2 ** -0.5])


def test_pca_full_rank_round_trip(rng):
    X = rng.normal(size=(20, 6)) @ rng.normal(size=(6, 6))
    model = fit_pca(X, k=6)
    assert np.allclose(inverse_pca(model, apply_pca(model, X)), X, atol=1e-6)
    assert np.allclose(model.components @ model.components.T, np.eye(6), atol=1e-8)


def test_pca_sign_rule(rng):
    model = fit_pca(rng.normal(size=(15, 5)), k=4)
    for row in model.components:
        assert row[np.argmax(np.abs(row))] > 0


def test_pca_rank_too_low():
    with pytest.raises(RankTooLow):
        fit_pca(np.zeros((5, 10)) + np.arange(10), k=5)
    with pytest.raises(RankTooLow):
        fit_pca(np.ones((1, 3)), k=1)


def test_pca_rank_deficient_warns(caplog, rng):
    X = np.column_stack([rng.normal(size=10)] * 3)
    model = fit_pca(X, k=2)
    assert "numerical rank" in caplog.text
    assert model.explained_variance_ratio[1] == pytest.approx(0, abs=1e-12)


def test_pca_table_and_dict(rng):
    table = labelled_table(12, 8, n_features=5)
    model = fit_pca(table, k=3)
    out = apply_pca(model, table)
    assert out.names == ("PC1", "PC2", "PC3") and out.case_ids == table.case_ids
    back = PcaModel.from_dict(model.to_dict())
    assert np.array_equal(back.components, model.components)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(3, 25), p=st.integers(1, 8))
def test_pca_properties(seed, n, p):
    X = np.random.default_rng(seed).normal(size=(n, p))
    k = min(n - 1, p)
    model = fit_pca(X, k=k)
    r = model.explained_variance_ratio
    assert np.all(np.diff(r) <= 1e-12)
    assert r.sum() == pytest.approx(1.0, abs=1e-8)
    assert np.allclose(model.components @ model.components.T, np.eye(k), atol=1e-8)


# ------------------------------------------------------------------ split

def test_split_159():
    table = labelled_table(102, 57)
    train, test = stratified_split(table, 0.25, seed=0)
    assert len(train) == 119 and len(test) == 40
    assert train.class_counts() == {0: 43, 1: 76}
    assert test.class_counts() == {0: 14, 1: 26}
    assert set(train.case_ids).isdisjoint(test.case_ids)
    assert set(train.case_ids) | set(test.case_ids) == set(table.case_ids)


def test_split_seeded():
    table = labelled_table(30, 20)
    a = stratified_split(table, 0.25, seed=4)[1].case_ids
    b = stratified_split(table, 0.25, seed=4)[1].case_ids
    c = stratified_split(table, 0.25, seed=5)[1].case_ids
    assert a == b and a != c


def test_split_fraction_zero():
    with pytest.raises(ClassTooSmall):
        stratified_split(labelled_table(10, 10), 0.0)


def test_split_class_too_small():
    with pytest.raises(ClassTooSmall):
        stratified_split(labelled_table(20, 1), 0.25)


# ------------------------------------------------------------------ SMOTE

def check_on_segments(result, source):
    """Every synthetic row equals parent + u * (neighbor - parent), u in [0, 1]."""
    X = result.table.X[len(source):]
    for s, a, b, u in zip(X, result.parents, result.neighbors, result.gaps):
        xa, xb = source.X[a], source.X[b]
        seg = xb - xa
        coef = float((s - xa) @ seg / (seg @ seg))
        assert -1e-9 <= coef <= 1 + 1e-9
        assert coef == pytest.approx(u, abs=1e-9)
        assert np.allclose(xa + coef * seg, s, atol=1e-9)


def test_smote_counts_and_geometry():
    table = labelled_table(76, 43, n_features=8, seed=2)
    res = smote(table, SmoteConfig(k_neighbors=5, seed=1))
    assert res.n_synthetic == 33 and res.minority_class == 0
    assert res.table.X.shape == (152, 8)
    assert res.table.class_counts() == {0: 76, 1: 76}
    assert res.table.case_ids[:119] == table.case_ids
    assert np.array_equal(res.table.X[:119], table.X)
    assert all(table.y[res.parents] == 0) and all(table.y[res.neighbors] == 0)
    check_on_segments(res, table)

    rows = np.flatnonzero(table.y == 0)
    knn = minority_neighbors(table.X[rows], 5)
    local = {r: i for i, r in enumerate(rows)}
    for a, b in zip(res.parents, res.neighbors):
        assert local[b] in knn[local[a]]


def test_smote_parents_spread_evenly():
    table = labelled_table(40, 10, seed=3)
    res = smote(table, SmoteConfig(k_neighbors=3, seed=0))
    counts = np.bincount(res.parents, minlength=len(table))[table.y == 0]
    assert counts.tolist() == [3] * 10


def test_smote_balanced_noop():
    table = labelled_table(10, 10)
    res = smote(table)
    assert res.n_synthetic == 0 and res.table is table


def test_smote_minority_too_small():
    with pytest.raises(MinorityTooSmall):
        smote(labelled_table(20, 5), SmoteConfig(k_neighbors=5))
    with pytest.raises(MinorityTooSmall):
        smote(labelled_table(20, 0))


def test_smote_seeded():
    table = labelled_table(30, 12)
    a = smote(table, SmoteConfig(seed=7)).table.X
    b = smote(table, SmoteConfig(seed=7)).table.X
    assert np.array_equal(a, b)


def test_minority_neighbors_excludes_self():
    Xm = np.array([[0.0], [1.0], [3.0], [6.0]])
    assert minority_neighbors(Xm, 2).tolist() == [[1, 2], [0, 2], [1, 0], [2, 1]]


# ------------------------------------------------------------------ table and CSV

def test_csv_round_trip(tmp_path, rng):
    table = FeatureTable(["a", "b"], ["x", "y"], rng.normal(size=(2, 2)) * 1e5, [1, 0])
    path = tmp_path / "t.csv"
    write_table_csv(table, path)
    back = read_table_csv(path)
    assert back.case_ids == table.case_ids and back.names == table.names
    assert np.array_equal(back.X, table.X) and np.array_equal(back.y, table.y)


def test_csv_missing_label(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("case_id,x\na,1\n")
    with pytest.raises(TableError):
        read_table_csv(path)


def test_select_reorders_and_rejects_missing():
    table = FeatureTable(["a"], ["x", "y"], [[1.0, 2.0]], [1])
    assert table.select(["y", "x"]).X.tolist() == [[2.0, 1.0]]
    with pytest.raises(TableError):
        table.select(["z"])


def test_table_validation():
    with pytest.raises(TableError):
        FeatureTable(["a"], ["x"], [[np.nan]], [1])
    with pytest.raises(TableError):
        FeatureTable(["a"], ["x"], [[1.0]], [2])
