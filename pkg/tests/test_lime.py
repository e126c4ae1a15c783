import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bolimes.data import Dataset, Standardizer
from bolimes.learners import ForestParams, train_forest
from bolimes.lime import (LimeExplanation, LimeParams, SingularSurrogateError, explain_all, explain_instance,
                          fit_surrogate, global_ranking, perturb, proximity)


def test_perturb_shape_and_anchor():
    x = np.array([0.5, -1.0, 2.0])
    Z = perturb(x, 10, 3)
    assert Z.shape == (10, 3)
    assert np.array_equal(Z[0], x)
    assert np.array_equal(Z, perturb(x, 10, 3))
    big = perturb(np.zeros(4), 5000, 1)
    assert np.all(np.abs(big[1:].mean(axis=0)) < 0.05)


def test_proximity_values():
    assert proximity([0.0], 2.0)[0] == 1.0
    assert proximity([2.0], 2.0)[0] == pytest.approx(math.exp(-1), abs=1e-15)
    w = proximity(np.linspace(0, 5, 50), 1.3)
    assert np.all(np.diff(w) < 0)
    with pytest.raises(ValueError):
        proximity([1.0], 0.0)


def test_exact_linear_target():
    rng = np.random.default_rng(0)
    Z = rng.normal(size=(100, 2))
    e = fit_surrogate(Z, 3 * Z[:, 0] - 2 * Z[:, 1], rng.uniform(0.1, 1, 100), ridge=0.0)
    assert abs(e.intercept) < 1e-8
    assert np.allclose(e.coef, [3, -2], atol=1e-8)
    assert e.r2 == pytest.approx(1.0)


def test_huge_penalty_limit():
    rng = np.random.default_rng(1)
    Z = rng.normal(size=(60, 3))
    f = rng.normal(size=60) + 4
    w = rng.uniform(0.1, 1, 60)
    e = fit_surrogate(Z, f, w, ridge=1e12)
    assert np.all(np.abs(e.coef) < 1e-9)
    assert e.intercept == pytest.approx(np.dot(w, f) / w.sum(), rel=1e-6)


def test_duplicate_columns_are_singular():
    Z = np.random.default_rng(2).normal(size=(30, 1))
    with pytest.raises(SingularSurrogateError):
        fit_surrogate(np.hstack([Z, Z]), Z[:, 0], np.ones(30), ridge=0.0)
    fit_surrogate(np.hstack([Z, Z]), Z[:, 0], np.ones(30), ridge=1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.01, 100.0))
def test_weight_scaling_leaves_unpenalized_fit_unchanged(seed, c):
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(40, 3))
    f = rng.normal(size=40)
    w = rng.uniform(0.1, 1, 40)
    a = fit_surrogate(Z, f, w, 0.0)
    b = fit_surrogate(Z, f, c * w, 0.0)
    assert np.allclose(a.coef, b.coef, rtol=1e-8, atol=1e-10)


def _identity_standardizer(p):
    return Standardizer(np.zeros(p), np.ones(p), np.zeros(p, dtype=bool))


def test_monotone_black_box_single_feature():
    st_ = Standardizer.fit(np.linspace(-3, 3, 40)[:, None])
    signs = set()
    for x in np.linspace(-2, 2, 9):
        e = explain_instance(lambda X: np.tanh(X[:, 0]), [x], st_, LimeParams(n_perturbations=500, seed=3))
        signs.add(np.sign(e.coef[0]))
    assert signs == {1.0}


def test_constant_black_box_has_zero_coefficients():
    st_ = _identity_standardizer(4)
    e = explain_instance(lambda X: np.full(X.shape[0], 0.7), np.zeros(4), st_, LimeParams(n_perturbations=200))
    assert np.all(np.abs(e.coef) < 1e-6)


def test_explain_all_one_per_row_and_thread_invariant():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(12, 3))
    y = (X[:, 0] > 0).astype(int)
    ds = Dataset(X, y, ("a", "b", "c"), "l", ("n", "p"))
    model = train_forest(X, y, ForestParams(20, seed=1))
    a = explain_all(model, ds, LimeParams(n_perturbations=100), threads=1)
    b = explain_all(model, ds, LimeParams(n_perturbations=100), threads=3)
    assert len(a) == 12
    assert [e.instance for e in a] == list(range(12))
    assert all(np.array_equal(x.coef, y.coef) for x, y in zip(a, b))


def _expl(*coefs):
    return [LimeExplanation(i, 0.0, np.array(c, dtype=float), 1.0) for i, c in enumerate(coefs)]


def test_ranking_dominance_and_ties():
    r = global_ranking(_expl([0.1, -0.2, 3.0], [0.3, 0.1, -2.0]))
    assert r.order[0] == 2
    tie = global_ranking(_expl([1.0, 2.0, 1.0], [1.0, 2.0, 1.0]))
    assert tie.order.tolist() == [1, 0, 2]
    assert global_ranking(_expl([1.0, 3.0], [5.0, 1.0]), "median").scores.tolist() == [3.0, 2.0]
    assert global_ranking(_expl([1.0, 3.0], [5.0, 1.0]), "sum").scores.tolist() == [6.0, 4.0]
    with pytest.raises(ValueError):
        global_ranking([])


@given(st.integers(0, 10**6), st.floats(0.001, 1000.0))
def test_ranking_invariant_to_positive_scaling(seed, c):
    coefs = np.random.default_rng(seed).normal(size=(5, 6))
    a = global_ranking(_expl(*coefs))
    b = global_ranking(_expl(*(c * coefs)))
    assert np.array_equal(a.order, b.order)


def test_linear_black_box_scores_proportional_to_weights():
    w = np.array([5.0, 1.0, 0.0, 2.0])
    st_ = _identity_standardizer(4)
    params = LimeParams(n_perturbations=5000, ridge_penalty=1.0, seed=11)
    rng = np.random.default_rng(0)
    ex = [explain_instance(lambda X: X @ w, rng.normal(size=4), st_, params, seed=i) for i in range(10)]
    r = global_ranking(ex)
    assert r.order[:2].tolist() == [0, 3]
    nz = w > 0
    ratio = r.scores[nz] / w[nz]
    assert np.all(np.abs(ratio / ratio.mean() - 1) < 0.1)
