import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from helpers import cleaned_na_counts, ica_recovery, mixed_table, profb_like, yj_grid_lambda
from pipeforge.data import Column, DataError, DataTable, Kind, hconcat
from pipeforge.transformers import (ConvergenceWarning, Extractor, colnarm, extract_apply, extract_fit,
                                    onehot_fit, onehot_transform, rownarm, scale_apply, scale_fit,
                                    select_features, yeo_johnson_lambda)


# selectors and one-hot


def test_select_features_profb():
    table, _ = profb_like()
    cats = select_features(table, Kind.CATEGORICAL)
    assert cats.names == ["FavoriteName", "UnderdogName", "Weekday", "Overtime", "Era"]
    numeric = DataTable.from_numeric(np.ones((4, 2)))
    empty = select_features(numeric, "Categorical")
    assert empty.shape == (4, 0)
    both = hconcat(select_features(table, Kind.NUMERIC), cats)
    assert sorted(both.names) == sorted(table.names)


def test_onehot_examples():
    col = DataTable((Column.categorical("c", ["a", "b", "a"]),), 3)
    out = onehot_transform(onehot_fit(col), col)
    assert out.names == ["c=a", "c=b"]
    assert out.to_matrix().T.tolist() == [[1, 0, 1], [0, 1, 0]]
    state = onehot_fit(DataTable((Column.categorical("c", ["a", "b"]),), 2))
    assert onehot_transform(state, DataTable((Column.categorical("c", ["c"]),), 1)).to_matrix().tolist() == [[0, 0]]
    two = DataTable((Column.categorical("p", ["x", "y", "x"]), Column.categorical("q", ["u", "v", "w"])), 3)
    assert onehot_fit(two).transform(two).n_cols == 5


def test_onehot_errors():
    with pytest.raises(DataError):
        onehot_fit(DataTable.from_numeric(np.ones((2, 1))))
    with pytest.raises(DataError):
        onehot_fit(DataTable((Column.categorical("c", ["a", None]),), 2))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from("abcd"), min_size=1, max_size=20),
       st.lists(st.sampled_from("abcdef"), min_size=1, max_size=20))
def test_onehot_block_sums(fit_vals, new_vals):
    state = onehot_fit(DataTable((Column.categorical("s", fit_vals),), len(fit_vals)))
    out = onehot_transform(state, DataTable((Column.categorical("s", new_vals),), len(new_vals)))
    sums = out.to_matrix().sum(axis=1)
    assert set(sums) <= {0.0, 1.0}
    assert out.n_cols == len(set(fit_vals))


# scalers


def test_minmax_example():
    t = DataTable.from_numeric([[1.0], [2.0], [3.0]])
    state = scale_fit("minmax", t)
    assert scale_apply(state, t).to_matrix().ravel().tolist() == [0.0, 0.5, 1.0]
    assert scale_apply(state, DataTable.from_numeric([[5.0]])).to_matrix()[0, 0] == 2.0  # not clamped


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 200), st.floats(-1e3, 1e3), st.floats(1e-2, 1e3), st.integers(0, 2 ** 16))
def test_standard_scaler_moments(n, loc, scale, seed):
    X = np.random.default_rng(seed).normal(loc, scale, (n, 3))
    out = scale_apply(scale_fit("standard", DataTable.from_numeric(X)), DataTable.from_numeric(X)).to_matrix()
    assert np.all(np.abs(out.mean(axis=0)) <= 1e-9)
    assert np.all(np.abs(out.std(axis=0) - 1) <= 1e-9)


def test_robust_and_normalizer():
    X = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [10.0, 0.0]])
    t = DataTable.from_numeric(X)
    out = scale_apply(scale_fit("robust", t), t).to_matrix()
    q1, med, q3 = np.percentile(X[:, 0], [25, 50, 75])
    assert np.allclose(out[:, 0], (X[:, 0] - med) / (q3 - q1))
    assert np.all(out[:, 1] == 0)
    norm = scale_apply(scale_fit("normalizer", t), t).to_matrix()
    assert np.allclose(np.linalg.norm(norm, axis=1), 1)
    zero = DataTable.from_numeric([[0.0, 0.0]])
    assert scale_apply(scale_fit("normalizer", zero), zero).to_matrix().tolist() == [[0.0, 0.0]]


@pytest.mark.parametrize("mode", ["standard", "minmax", "robust", "power"])
def test_degenerate_columns_map_to_zero(mode):
    t = DataTable.from_numeric(np.column_stack([np.full(5, 3.0), np.arange(5.0)]))
    out = scale_apply(scale_fit(mode, t), t).to_matrix()
    assert np.all(out[:, 0] == 0) and np.all(np.isfinite(out))


@pytest.mark.parametrize("mode", ["standard", "power", "robust"])
def test_scaler_rejects_bad_input(mode):
    with pytest.raises(DataError):
        scale_fit(mode, DataTable((Column.categorical("c", ["a"]),), 1))
    with pytest.raises(DataError):
        scale_fit(mode, DataTable.from_numeric([[1.0], [np.nan]]))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_yeo_johnson_lambda_matches_grid(seed):
    rng = np.random.default_rng(seed)
    for x in (np.exp(rng.normal(size=300)), rng.normal(size=200) ** 3, -rng.exponential(2.0, 250)):
        assert abs(yeo_johnson_lambda(x) - yj_grid_lambda(x)) <= 1e-2


def test_power_reduces_skew():
    x = np.exp(np.random.default_rng(7).normal(size=500))
    t = DataTable.from_numeric(x[:, None])
    out = scale_apply(scale_fit("power", t), t).to_matrix().ravel()
    assert abs(stats.skew(out)) < 0.5
    assert abs(out.mean()) < 1e-9 and abs(out.std() - 1) < 1e-9


def test_noop_identity():
    table, _ = mixed_table()
    from pipeforge.transformers import Noop
    assert Noop().transform(table) is table
    assert Extractor("noop").transform(table) is table


# extractors


def test_pca_dominant_axis():
    rng = np.random.default_rng(0)
    t = rng.normal(size=300)
    X = np.column_stack([t, t]) / np.sqrt(2) + rng.normal(scale=1e-3, size=(300, 2))
    state = extract_fit("pca", DataTable.from_numeric(X))
    assert np.allclose(np.abs(state.components_[0]), [np.sqrt(0.5)] * 2, atol=1e-2)


@pytest.mark.parametrize("seed", range(5))
def test_pca_full_rank_reconstruction(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(50, 6)) @ rng.normal(size=(6, 6)) + rng.normal(size=6) * 10
    state = extract_fit("pca", DataTable.from_numeric(X))
    scores = extract_apply(state, DataTable.from_numeric(X)).to_matrix()
    assert np.max(np.abs(state.inverse_transform(scores) - X)) <= 1e-8
    C = state.components_
    assert np.allclose(C @ C.T, np.eye(6), atol=1e-8)


def test_pca_k_bounds():
    X = DataTable.from_numeric(np.random.default_rng(0).normal(size=(4, 6)))
    assert extract_fit("pca", X).n_components_ == 4
    assert extract_fit("pca", X, k=2).transform(X).names == ["pc1", "pc2"]
    with pytest.raises(DataError):
        extract_fit("pca", X, k=5)


@pytest.mark.parametrize("seed", range(5))
def test_ica_recovers_sources(seed):
    _, worst = ica_recovery(seed)
    assert worst > 0.95


def test_ica_convergence_warning():
    X = DataTable.from_numeric(np.random.default_rng(0).normal(size=(100, 3)))
    with pytest.warns(ConvergenceWarning):
        Extractor("ica", max_iter=1, tol=0.0).fit(X)


def test_fa_scores_shape_and_determinism():
    rng = np.random.default_rng(0)
    F = rng.normal(size=(200, 2))
    X = F @ rng.normal(size=(2, 5)) + 0.3 * rng.normal(size=(200, 5))
    t = DataTable.from_numeric(X)
    a = extract_fit("fa", t, k=2).transform(t)
    b = extract_fit("fa", t, k=2).transform(t)
    assert a.names == ["fa1", "fa2"] and np.array_equal(a.to_matrix(), b.to_matrix())
    # two factor scores should explain the planted factors well
    r2 = [np.linalg.lstsq(np.column_stack([a.to_matrix(), np.ones(200)]), F[:, j], rcond=None)[1][0] for j in range(2)]
    assert all(res / (200 * F[:, j].var()) < 0.2 for j, res in enumerate(r2))


@pytest.mark.parametrize("mode", ["pca", "ica", "fa"])
def test_extractor_purity(mode):
    X = DataTable.from_numeric(np.random.default_rng(1).normal(size=(40, 3)))
    state = extract_fit(mode, X, seed=3)
    first = extract_apply(state, X).to_matrix()
    comps = state.components_.copy()
    second = extract_apply(state, X).to_matrix()
    assert np.array_equal(first, second) and np.array_equal(comps, state.components_)


# NA filters


def test_colnarm_strict_boundary():
    base = np.arange(100.0)
    eleven, ten = base.copy(), base.copy()
    eleven[:11] = np.nan
    ten[:10] = np.nan
    t = DataTable((Column.numeric("eleven", eleven), Column.numeric("ten", ten), Column.numeric("full", base)), 100)
    assert colnarm(t).names == ["ten", "full"]


def test_na_free_unchanged():
    t = DataTable.from_numeric(np.ones((5, 2)))
    assert colnarm(t).equals(t) and rownarm(t).equals(t)


def test_sick_shaped_cleaning():
    rng = np.random.default_rng(0)
    n = 3772
    cols = []
    for j in range(8):
        x = rng.normal(size=n)
        if j < 3:
            x[rng.choice(n, 2000 + j, replace=False)] = np.nan
        elif j < 5:
            x[rng.choice(n, 20, replace=False)] = np.nan
        cols.append(Column.numeric(f"v{j}", x))
    t = DataTable(tuple(cols), n)
    assert t.na_count == 6003 + 40
    out = rownarm(colnarm(t))
    assert out.names == [f"v{j}" for j in range(3, 8)] and out.na_count == 0
    assert out.n_rows >= n - 40


def test_na_filter_errors():
    with pytest.raises(DataError):
        colnarm(DataTable.from_numeric([[np.nan], [np.nan]]))
    t = DataTable((Column.numeric("a", [np.nan] + [1.0] * 19), Column.numeric("b", [1.0] + [np.nan] + [1.0] * 18)), 20)
    assert rownarm(t).n_rows == 18
    with pytest.raises(DataError):
        rownarm(DataTable((Column.numeric("a", [np.nan, 1.0]), Column.numeric("b", [1.0, np.nan])), 2))


def test_cleaning_leaves_no_na():
    assert cleaned_na_counts() == [0] * 100
