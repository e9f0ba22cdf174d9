import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_problem
from vwlasso.core import Dataset, FitResult, predict
from vwlasso.errors import DimensionMismatch
from vwlasso.explain import importance_ranking, linear_shap, plot_data
from vwlasso.penalized import SolverConfig, fit_model


def _fit(b0, b):
    return FitResult(b0, np.asarray(b, float), "ols")


def test_worked_example():
    d = Dataset.from_arrays([[1.0, 2.0], [3.0, 0.0]], [0.0, 0.0])
    s = linear_shap(_fit(1.0, [2.0, -1.0]), d, [2.0, 1.0])
    np.testing.assert_allclose(s.values, [[-2.0, -1.0], [2.0, 1.0]])
    assert s.base_value == pytest.approx(1.0 + 4.0 - 1.0)


@given(st.integers(0, 10_000))
def test_local_accuracy(seed):
    d = random_problem(seed, 30, 4, standardized=False)
    rng = np.random.default_rng(seed)
    f = _fit(rng.normal(), rng.normal(size=4))
    s = linear_shap(f, d, d.x.mean(axis=0))
    np.testing.assert_allclose(s.base_value + s.values.sum(axis=1), predict(f, d.x), atol=1e-10)


def test_zero_coefficient_columns_get_zero():
    d = random_problem(2, 20, 3)
    s = linear_shap(_fit(0.5, [1.0, 0.0, -2.0]), d, d.x.mean(axis=0))
    assert np.all(s.values[:, 1] == 0.0)


def test_background_mean_row_has_zero_attribution():
    d = random_problem(3, 20, 3)
    mu = d.x.mean(axis=0)
    s = linear_shap(_fit(0.0, [1, 2, 3]), Dataset.from_arrays(mu[None, :], [0.0]), mu)
    assert np.all(s.values == 0.0)


def test_ranking_follows_spread():
    rng = np.random.default_rng(0)
    x = np.column_stack([rng.standard_normal(5000), 2 * rng.standard_normal(5000)])
    d = Dataset.from_arrays(x, np.zeros(5000), ["a", "b"])
    s = linear_shap(_fit(0.0, [1.0, 1.0]), d, x.mean(axis=0))
    rank = importance_ranking(s)
    assert [r[0] for r in rank] == ["b", "a"]
    assert rank[0][1] / rank[1][1] == pytest.approx(2.0, rel=0.05)


def test_ties_keep_column_order():
    d = Dataset.from_arrays(np.eye(3), np.zeros(3), ["c", "a", "b"])
    rank = importance_ranking(linear_shap(_fit(0.0, [1, 1, 1]), d, np.zeros(3)))
    assert [r[0] for r in rank] == ["c", "a", "b"]


def test_predictor_rescaling_leaves_shap_unchanged():
    d = random_problem(5, 60, 4, standardized=False)
    scale = np.array([1.0, 100.0, 0.01, 7.0])
    d2 = Dataset.from_arrays(d.x * scale, d.y)
    cfg = SolverConfig(tolerance=1e-12)
    f1 = fit_model("lasso", d, cfg).fit
    f2 = fit_model("lasso", d2, cfg).fit
    s1 = linear_shap(f1, d, d.x.mean(axis=0))
    s2 = linear_shap(f2, d2, d2.x.mean(axis=0))
    np.testing.assert_allclose(s1.values, s2.values, atol=1e-6)


def test_shape_checks():
    d = random_problem(0, 10, 3)
    with pytest.raises(DimensionMismatch):
        linear_shap(_fit(0.0, [1.0, 2.0]), d, np.zeros(3))
    with pytest.raises(DimensionMismatch):
        linear_shap(_fit(0.0, [1.0, 2.0, 3.0]), d, np.zeros(2))


def test_plot_data_is_long_format():
    d = random_problem(0, 4, 2)
    s = linear_shap(_fit(0.0, [1.0, 2.0]), d, np.zeros(2))
    recs = plot_data(s, d)
    assert len(recs) == 8
    assert recs[1]["column"] == "x2" and recs[1]["shap_value"] == pytest.approx(2 * d.x[0, 1])
